// Copyright (C) 2026 The Rii Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

// rii: command-line front end for training, building, querying and benchmarking an index.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "rii/rii.hpp"

namespace {

using namespace rii;

/// Failure inside a named stage of a subcommand.
struct StageError : std::runtime_error {
    StageError(const std::string& stage, const std::string& what) : std::runtime_error(stage + ": " + what) {}
};

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

CalibrationOptions calibration_options(const std::string& mode, std::uint64_t seed) {
    CalibrationOptions opts;
    opts.mode = mode == "analytic" ? CalibrationMode::kAnalytic : CalibrationMode::kTimed;
    opts.seed = seed;
    return opts;
}

void emit_report(const BenchReport& report, const std::string& path) {
    if (path.empty()) {
        report.write_csv(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path + " for writing", 0);
    }
    report.write_csv(out);
    if (!out.flush()) {
        throw IoError("write to " + path + " failed", 0);
    }
}

std::string describe(const RiiIndex& idx) {
    return "D=" + std::to_string(idx.dim()) + " M=" + std::to_string(idx.code_size()) +
           " Z=" + std::to_string(idx.codebook().num_codewords()) + " N=" + std::to_string(idx.size()) +
           " K=" + std::to_string(idx.num_lists()) + " L=" + std::to_string(idx.default_candidates()) +
           " theta=" + std::to_string(idx.threshold()) + (idx.rotation() ? " rotation=yes" : " rotation=no");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reconfigurable inverted index over product-quantized codes"};
    app.require_subcommand(1);

    std::string dataset, queries_path, gt_path, index_path, output, report_path, calib_mode = "timed";
    std::uint64_t seed = 0;
    std::size_t n = 10000, dim = 32, clusters = 64, m = 8, z = 256, k = 0, r = 1, growth_const = 5;
    std::size_t iters = 20, opq_iters = 10, kmeans_iters = 10, n_queries = 100;
    std::size_t l = 0, subset_size = 0;
    std::vector<std::size_t> l_list, r_list, subset_sizes, growth;
    std::optional<std::uint64_t> sample_seed;
    bool opq = false;
    const std::set<std::string> modes{"timed", "analytic"};

    auto* gen = app.add_subcommand("generate", "Write a seeded Gaussian-mixture dataset");
    gen->add_option("--N", n, "Number of vectors")->required();
    gen->add_option("--D", dim, "Dimensionality")->required();
    gen->add_option("--clusters", clusters, "Mixture components");
    gen->add_option("--seed", seed, "Seed for the mixture centers")->required();
    gen->add_option("--sample-seed", sample_seed, "Draw points from this seed (same mixture as --seed)");
    gen->add_option("--output", output, "Output .fvecs/.bvecs/.ivecs")->required();

    auto* train = app.add_subcommand("train", "Train codebooks (and optionally a rotation); writes an empty index");
    train->add_option("--dataset", dataset, "Training vectors")->required()->check(CLI::ExistingFile);
    train->add_option("--M", m, "Subspaces")->required();
    train->add_option("--Z", z, "Codewords per subspace");
    train->add_option("--iters", iters, "k-means iterations");
    train->add_flag("--opq", opq, "Learn an orthogonal rotation");
    train->add_option("--opq-iters", opq_iters, "Rotation update rounds");
    train->add_option("--seed", seed)->required();
    train->add_option("--output", output, "Model file")->required();

    auto* bld = app.add_subcommand("build", "Encode a dataset with a trained model and cluster it");
    bld->add_option("--index", index_path, "Model file from train")->required()->check(CLI::ExistingFile);
    bld->add_option("--dataset", dataset, "Database vectors")->required()->check(CLI::ExistingFile);
    bld->add_option("--K", k, "Posting lists (0 = ceil(sqrt(N)))");
    bld->add_option("--kmeans-iters", kmeans_iters);
    bld->add_option("--calibration", calib_mode)->check(CLI::IsMember(modes));
    bld->add_option("--seed", seed)->required();
    bld->add_option("--output", output, "Index file")->required();

    auto* add = app.add_subcommand("add", "Append vectors to an index");
    add->add_option("--index", index_path)->required()->check(CLI::ExistingFile);
    add->add_option("--dataset", dataset, "Vectors to append")->required()->check(CLI::ExistingFile);
    add->add_option("--output", output, "Index file (default: overwrite --index)");

    auto* rec = app.add_subcommand("reconfigure", "Re-cluster posting lists");
    rec->add_option("--index", index_path)->required()->check(CLI::ExistingFile);
    rec->add_option("--K", k, "Posting lists (0 = ceil(sqrt(N)))");
    rec->add_option("--kmeans-iters", kmeans_iters);
    rec->add_option("--calibration", calib_mode)->check(CLI::IsMember(modes));
    rec->add_option("--seed", seed)->required();
    rec->add_option("--output", output, "Index file (default: overwrite --index)");

    auto* qry = app.add_subcommand("query", "Search; prints query, rank, id, distance, path");
    qry->add_option("--index", index_path)->required()->check(CLI::ExistingFile);
    qry->add_option("--queries", queries_path)->required()->check(CLI::ExistingFile);
    qry->add_option("--R", r, "Results per query");
    qry->add_option("--L", l, "Candidates (0 = index default)");
    qry->add_option("--subset-size", subset_size, "Restrict to a random subset of this size (0 = all)");
    qry->add_option("--seed", seed, "Seed for the random subset");

    auto* gt = app.add_subcommand("gt", "Exact top-R ground truth as .ivecs");
    gt->add_option("--dataset", dataset)->required()->check(CLI::ExistingFile);
    gt->add_option("--queries", queries_path)->required()->check(CLI::ExistingFile);
    gt->add_option("--R", r);
    gt->add_option("--output", output)->required();

    auto* cal = app.add_subcommand("calibrate", "Recompute the linear-scan threshold");
    cal->add_option("--index", index_path)->required()->check(CLI::ExistingFile);
    cal->add_option("--calibration", calib_mode)->check(CLI::IsMember(modes));
    cal->add_option("--seed", seed)->required();
    cal->add_option("--output", output, "Index file (default: overwrite --index)");

    auto* brc = app.add_subcommand("bench-recall", "Recall@R and latency for a list of L");
    brc->add_option("--index", index_path)->required()->check(CLI::ExistingFile);
    brc->add_option("--queries", queries_path)->required()->check(CLI::ExistingFile);
    brc->add_option("--groundtruth", gt_path)->required()->check(CLI::ExistingFile);
    brc->add_option("--L", l_list, "Candidate budgets")->delimiter(',');
    brc->add_option("--R", r);
    brc->add_option("--seed", seed, "Recorded in the report");
    brc->add_option("--report", report_path, "CSV output (default: stdout)");

    auto* bss = app.add_subcommand("bench-subset", "Subset search against exact search with post-checking");
    bss->add_option("--index", index_path)->required()->check(CLI::ExistingFile);
    bss->add_option("--dataset", dataset, "Database vectors the index was built from")->required()->check(
        CLI::ExistingFile);
    bss->add_option("--queries", queries_path)->required()->check(CLI::ExistingFile);
    bss->add_option("--subset-size", subset_sizes, "Target set sizes")->delimiter(',');
    bss->add_option("--R", r_list, "Top-R values")->delimiter(',');
    bss->add_option("--growth", growth_const, "Post-check growth factor");
    bss->add_option("--seed", seed)->required();
    bss->add_option("--report", report_path, "CSV output (default: stdout)");

    auto* brf = app.add_subcommand("bench-reconfigure", "Latency before and after reconfigure on grown data");
    brf->add_option("--N", n, "Initial database size");
    brf->add_option("--growth", growth, "Growth factors")->delimiter(',');
    brf->add_option("--D", dim);
    brf->add_option("--M", m);
    brf->add_option("--Z", z);
    brf->add_option("--clusters", clusters);
    brf->add_option("--n-queries", n_queries);
    brf->add_option("--R", r);
    brf->add_option("--seed", seed)->required();
    brf->add_option("--report", report_path, "CSV output (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    auto save = [&](const RiiIndex& idx) {
        const auto& path = output.empty() ? index_path : output;
        stage("save index", [&] { return save_index(idx, path); });
        std::cerr << "wrote " << path << " (" << describe(idx) << ")\n";
    };
    auto load = [&] { return stage("load index", [&] { return load_index(index_path); }); };
    auto vectors = [](const std::string& what, const std::string& path) {
        return stage("read " + what, [&] { return read_vectors(path); });
    };

    try {
        if (cmd == gen) {
            auto data = stage("generate", [&] { return generate_synthetic(n, dim, clusters, seed, {.sample_seed = sample_seed}); });
            stage("write vectors", [&] {
                switch (vecs_format_from_path(output)) {
                    case VecsFormat::kFvecs:
                        write_vecs<float>(output, data);
                        break;
                    default:
                        throw InputError("generate writes .fvecs only");
                }
                return 0;
            });
        } else if (cmd == train) {
            auto data = vectors("training vectors", dataset);
            auto idx = stage("train", [&] {
                if (opq) {
                    auto model = train_rotation(data, m, z, seed, OpqOptions{opq_iters, iters});
                    return RiiIndex(std::move(model.codebook), std::move(model.rotation));
                }
                return RiiIndex(train_codebooks(data, m, z, iters, seed), std::nullopt);
            });
            save(idx);
        } else if (cmd == bld) {
            auto model = load();
            auto data = vectors("database vectors", dataset);
            if (model.size() != 0) {
                throw StageError("build", "model file already holds " + std::to_string(model.size()) + " items");
            }
            auto idx = stage("build", [&] {
                return build(model.codebook(), model.rotation(), data,
                             {k, seed, kmeans_iters, calibration_options(calib_mode, seed)});
            });
            save(idx);
        } else if (cmd == add) {
            auto idx = load();
            auto data = vectors("vectors", dataset);
            stage("add", [&] {
                idx.add_batch(data);
                return 0;
            });
            save(idx);
        } else if (cmd == rec) {
            auto idx = load();
            const std::size_t kk = k == 0 ? sqrt_lists(idx.size()) : k;
            stage("reconfigure",
                  [&] { return reconfigure(idx, kk, seed, kmeans_iters, calibration_options(calib_mode, seed)); });
            save(idx);
        } else if (cmd == qry) {
            auto idx = load();
            auto qs = vectors("queries", queries_path);
            stage("query", [&] {
                std::optional<std::size_t> budget;
                if (l != 0) {
                    budget = l;
                }
                std::optional<SubsetIds> subset;
                if (subset_size != 0) {
                    std::mt19937_64 rng(seed);
                    subset = detail::random_subset(idx.size(), std::min(subset_size, idx.size()), rng);
                }
                for (std::size_t i = 0; i < qs.rows(); ++i) {
                    const auto res = subset ? query(idx, qs.row(i), r, *subset, budget)
                                            : query(idx, qs.row(i), r, AllIds{}, budget);
                    for (std::size_t j = 0; j < res.size(); ++j) {
                        std::printf("%zu\t%zu\t%u\t%.6g\t%s\n", i, j, res.neighbors[j].id, res.neighbors[j].distance,
                                    to_string(res.path));
                    }
                }
                return 0;
            });
        } else if (cmd == gt) {
            auto base = vectors("database vectors", dataset);
            auto qs = vectors("queries", queries_path);
            auto lists = stage("ground truth", [&] { return ground_truth(base, qs, r); });
            stage("write ground truth", [&] {
                write_vecs<std::int32_t>(output, to_ivecs(lists));
                return 0;
            });
        } else if (cmd == cal) {
            auto idx = load();
            auto c = stage("calibrate", [&] { return recalibrate(idx, calibration_options(calib_mode, seed)); });
            std::cout << "theta=" << c.theta << " slope=" << c.slope << " intercept=" << c.intercept << '\n';
            save(idx);
        } else if (cmd == brc) {
            auto idx = load();
            auto qs = vectors("queries", queries_path);
            auto truth_raw = stage("read ground truth", [&] { return read_vecs<std::int32_t>(gt_path); });
            if (truth_raw.rows() != qs.rows()) {
                throw StageError("read ground truth", "row count differs from the query count");
            }
            std::vector<std::vector<Id>> truth(truth_raw.rows());
            for (std::size_t i = 0; i < truth_raw.rows(); ++i) {
                for (auto v : truth_raw.row(i)) {
                    truth[i].push_back(static_cast<Id>(v));
                }
            }
            if (l_list.empty()) {
                l_list = {idx.default_candidates()};
            }
            auto report = stage("benchmark", [&] { return bench_recall(idx, qs, truth, l_list, r, queries_path, seed); });
            stage("write report", [&] {
                emit_report(report, report_path);
                return 0;
            });
        } else if (cmd == bss) {
            auto idx = load();
            auto base = vectors("database vectors", dataset);
            auto qs = vectors("queries", queries_path);
            SubsetBenchOptions opts;
            if (!subset_sizes.empty()) {
                opts.subset_sizes = subset_sizes;
            }
            if (!r_list.empty()) {
                opts.top_r = r_list;
            }
            opts.seed = seed;
            opts.growth = growth_const;
            opts.dataset = dataset;
            auto report = stage("benchmark", [&] { return bench_subset(idx, base, qs, opts); });
            stage("write report", [&] {
                emit_report(report, report_path);
                return 0;
            });
        } else if (cmd == brf) {
            ReconfigureBenchOptions opts;
            opts.initial_size = n;
            if (!growth.empty()) {
                opts.growth_factors = growth;
            }
            opts.dim = dim;
            opts.num_subspaces = m;
            opts.num_codewords = z;
            opts.n_clusters = clusters;
            opts.n_queries = n_queries;
            opts.top_r = r;
            opts.seed = seed;
            auto report = stage("benchmark", [&] { return bench_reconfigure(opts); });
            stage("write report", [&] {
                emit_report(report, report_path);
                return 0;
            });
        }
    } catch (const StageError& e) {
        std::cerr << "rii " << name << ": " << e.what() << '\n';
        return 1;
    }
    return 0;
}
