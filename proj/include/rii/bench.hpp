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

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "rii/builder.hpp"
#include "rii/calibrate.hpp"
#include "rii/common.hpp"
#include "rii/persistence.hpp"
#include "rii/search.hpp"

namespace rii {

struct SyntheticOptions {
    /// Standard deviation of the cluster centers around the origin.
    float center_scale = 3.0f;
    /// Standard deviation of each point around its center.
    float spread = 1.0f;
    /// When set, points are drawn from this seed while the centers still come from `seed`.
    /// Queries sampled this way share the base set's mixture.
    std::optional<std::uint64_t> sample_seed{};
};

/// Seeded Gaussian mixture with equally likely clusters.
inline FloatMatrix generate_synthetic(std::size_t n, std::size_t dim, std::size_t n_clusters, std::uint64_t seed,
                                      const SyntheticOptions& opts = {}) {
    if (n == 0 || dim == 0 || n_clusters == 0) {
        throw InputError("generate_synthetic: N, D and the cluster count must be positive");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    std::vector<float> centers(n_clusters * dim);
    for (auto& c : centers) {
        c = opts.center_scale * gauss(rng);
    }
    if (opts.sample_seed) {
        rng.seed(*opts.sample_seed);
    }
    std::uniform_int_distribution<std::size_t> which(0, n_clusters - 1);
    FloatMatrix out(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
        const float* c = centers.data() + which(rng) * dim;
        auto row = out.row(i);
        for (std::size_t j = 0; j < dim; ++j) {
            row[j] = c[j] + opts.spread * gauss(rng);
        }
    }
    return out;
}

/// Exact squared-Euclidean search over raw vectors. Ties go to the lower id.
class ExactSearcher {
 public:
    explicit ExactSearcher(const FloatMatrix& base) : base_(&base) {}

    std::vector<Neighbor> search(std::span<const float> q, std::size_t r) const {
        check_dim(q.size(), base_->cols(), "exact search");
        std::vector<Neighbor> all;
        all.reserve(base_->rows());
        for (std::size_t i = 0; i < base_->rows(); ++i) {
            all.push_back({static_cast<Id>(i), squared_l2(q, base_->row(i))});
        }
        detail::take_top(all, r);
        return all;
    }

    std::vector<Neighbor> search(std::span<const float> q, std::size_t r, const SubsetIds& s) const {
        check_dim(q.size(), base_->cols(), "exact search");
        std::vector<Neighbor> all;
        all.reserve(s.size());
        for (Id id : s) {
            all.push_back({id, squared_l2(q, base_->row(id))});
        }
        detail::take_top(all, r);
        return all;
    }

 private:
    const FloatMatrix* base_;
};

/// Exact top-R identifiers for every query.
inline std::vector<std::vector<Id>> ground_truth(const FloatMatrix& base, const FloatMatrix& queries, std::size_t r) {
    check_dim(queries.cols(), base.cols(), "ground_truth");
    ExactSearcher exact(base);
    std::vector<std::vector<Id>> out;
    out.reserve(queries.rows());
    for (std::size_t i = 0; i < queries.rows(); ++i) {
        std::vector<Id> ids;
        for (const auto& n : exact.search(queries.row(i), r)) {
            ids.push_back(n.id);
        }
        out.push_back(std::move(ids));
    }
    return out;
}

inline DenseMatrix<std::int32_t> to_ivecs(const std::vector<std::vector<Id>>& lists) {
    DenseMatrix<std::int32_t> m;
    for (const auto& l : lists) {
        std::vector<std::int32_t> row(l.begin(), l.end());
        m.push_back(row);
    }
    return m;
}

/// Fraction of queries whose true nearest neighbor appears among the first R returned ids.
inline double recall_at_r(const std::vector<std::vector<Id>>& results, const std::vector<std::vector<Id>>& truth,
                          std::size_t r) {
    if (results.size() != truth.size()) {
        throw InputError("recall_at_r: result and ground-truth query counts differ");
    }
    if (results.empty()) {
        return 0.0;
    }
    std::size_t hits = 0;
    for (std::size_t q = 0; q < results.size(); ++q) {
        if (truth[q].empty()) {
            continue;
        }
        const auto& res = results[q];
        const auto end = res.begin() + static_cast<std::ptrdiff_t>(std::min(r, res.size()));
        hits += std::find(res.begin(), end, truth[q][0]) != end ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(results.size());
}

/// Subset search on top of an engine that only answers plain top-r queries. r starts at R and grows by
/// `growth` until R members of S have been seen or the engine returns fewer than r items.
template <typename Engine, typename Target>
std::vector<Neighbor> post_check_search(const Engine& engine, std::span<const float> q, const Target& target,
                                        std::size_t r_wanted, std::size_t growth = 5) {
    if (r_wanted == 0 || growth < 2) {
        throw InputError("post_check_search: R must be positive and the growth factor at least 2");
    }
    std::vector<Neighbor> found;
    std::size_t checked = 0;
    std::size_t r = r_wanted;
    while (true) {
        const std::vector<Neighbor> top = engine(q, r);
        for (std::size_t i = checked; i < top.size(); ++i) {
            bool member = true;
            if constexpr (std::is_same_v<Target, SubsetIds>) {
                member = target.contains(top[i].id);
            }
            if (member) {
                found.push_back(top[i]);
                if (found.size() == r_wanted) {
                    return found;
                }
            }
        }
        checked = std::max(checked, top.size());
        if (top.size() < r) {
            return found;
        }
        r *= growth;
    }
}

struct BenchRow {
    std::string dataset{};
    std::string method{};
    std::uint64_t seed = 0;
    std::size_t num_lists = 0;  // K
    std::size_t num_subspaces = 0;  // M
    std::size_t candidates = 0;  // L
    std::size_t top_r = 0;  // R
    std::size_t subset_size = 0;
    std::size_t database_size = 0;
    std::size_t n_queries = 0;
    double latency_ms = 0.0;
    double recall = 0.0;
    std::uint64_t index_bytes = 0;
    /// Fraction of returned ids that were members of the target set.
    double containment = 1.0;
    /// Wall time of the reconfigure call, where applicable.
    double reconfigure_s = 0.0;
};

struct BenchReport {
    std::vector<BenchRow> rows;

    void write_csv(std::ostream& out) const {
        out << "dataset,method,seed,K,M,L,R,subset_size,N,n_queries,latency_ms,recall,index_bytes,containment,"
               "reconfigure_s\n";
        for (const auto& r : rows) {
            out << r.dataset << ',' << r.method << ',' << r.seed << ',' << r.num_lists << ',' << r.num_subspaces << ','
                << r.candidates << ',' << r.top_r << ',' << r.subset_size << ',' << r.database_size << ','
                << r.n_queries << ',' << r.latency_ms << ',' << r.recall << ',' << r.index_bytes << ','
                << r.containment << ',' << r.reconfigure_s << '\n';
        }
    }
};

/// Runs fn(i) for every query after three warm-up calls; returns mean milliseconds per query.
template <typename Fn>
double mean_latency_ms(std::size_t n_queries, Fn&& fn) {
    if (n_queries == 0) {
        return 0.0;
    }
    for (std::size_t w = 0; w < 3; ++w) {
        fn(w % n_queries);
    }
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < n_queries; ++i) {
        fn(i);
    }
    const double total = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return total / static_cast<double>(n_queries);
}

/// Recall@R and latency of query() for each L.
inline BenchReport bench_recall(const RiiIndex& idx, const FloatMatrix& queries,
                                const std::vector<std::vector<Id>>& truth, const std::vector<std::size_t>& l_list,
                                std::size_t r, const std::string& dataset = "", std::uint64_t seed = 0) {
    BenchReport report;
    for (std::size_t l : l_list) {
        std::vector<std::vector<Id>> results(queries.rows());
        const double ms = mean_latency_ms(queries.rows(), [&](std::size_t i) {
            results[i] = query(idx, queries.row(i), r, AllIds{}, l).ids();
        });
        BenchRow row;
        row.dataset = dataset;
        row.method = "rii";
        row.seed = seed;
        row.num_lists = idx.num_lists();
        row.num_subspaces = idx.code_size();
        row.candidates = l;
        row.top_r = r;
        row.subset_size = idx.size();
        row.database_size = idx.size();
        row.n_queries = queries.rows();
        row.latency_ms = ms;
        row.recall = recall_at_r(results, truth, r);
        row.index_bytes = serialized_size(idx);
        report.rows.push_back(row);
    }
    return report;
}

struct SubsetBenchOptions {
    std::vector<std::size_t> subset_sizes{100, 1000, 10000};
    std::vector<std::size_t> top_r{1, 10, 100};
    std::uint64_t seed = 0;
    std::size_t growth = 5;
    std::string dataset{};
};

/// For each (|S|, R): Rii subset search vs. an exact engine wrapped in the post-checking loop.
/// Recall is measured against the exact nearest member of S.
inline BenchReport bench_subset(const RiiIndex& idx, const FloatMatrix& base, const FloatMatrix& queries,
                                const SubsetBenchOptions& opts) {
    if (base.rows() != idx.size()) {
        throw InputError("bench_subset: base vectors do not match the index size");
    }
    ExactSearcher exact(base);
    auto engine = [&exact](std::span<const float> q, std::size_t r) { return exact.search(q, r); };
    std::mt19937_64 rng(opts.seed);
    BenchReport report;
    for (std::size_t size : opts.subset_sizes) {
        const auto s = detail::random_subset(idx.size(), std::min(size, idx.size()), rng);
        for (std::size_t r : opts.top_r) {
            std::vector<std::vector<Id>> rii_ids(queries.rows());
            std::vector<std::vector<Id>> pc_ids(queries.rows());
            const double rii_ms = mean_latency_ms(queries.rows(), [&](std::size_t i) {
                rii_ids[i] = query(idx, queries.row(i), r, s).ids();
            });
            const double pc_ms = mean_latency_ms(queries.rows(), [&](std::size_t i) {
                std::vector<Id> ids;
                for (const auto& n : post_check_search(engine, queries.row(i), s, r, opts.growth)) {
                    ids.push_back(n.id);
                }
                pc_ids[i] = std::move(ids);
            });
            auto containment = [&s](const std::vector<std::vector<Id>>& all) {
                std::size_t total = 0;
                std::size_t inside = 0;
                for (const auto& ids : all) {
                    for (Id id : ids) {
                        ++total;
                        inside += s.contains(id) ? 1 : 0;
                    }
                }
                return total == 0 ? 1.0 : static_cast<double>(inside) / static_cast<double>(total);
            };
            BenchRow row;
            row.dataset = opts.dataset;
            row.seed = opts.seed;
            row.num_lists = idx.num_lists();
            row.num_subspaces = idx.code_size();
            row.candidates = idx.default_candidates();
            row.top_r = r;
            row.subset_size = s.size();
            row.database_size = idx.size();
            row.n_queries = queries.rows();
            row.index_bytes = serialized_size(idx);

            BenchRow rii_row = row;
            rii_row.method = "rii";
            rii_row.latency_ms = rii_ms;
            rii_row.recall = recall_at_r(rii_ids, pc_ids, r);
            rii_row.containment = containment(rii_ids);
            BenchRow pc_row = row;
            pc_row.method = "exact+postcheck";
            pc_row.latency_ms = pc_ms;
            pc_row.recall = 1.0;
            pc_row.containment = containment(pc_ids);
            report.rows.push_back(rii_row);
            report.rows.push_back(pc_row);
        }
    }
    return report;
}

struct ReconfigureBenchOptions {
    std::size_t initial_size = 10000;
    std::vector<std::size_t> growth_factors{10};
    std::size_t dim = 32;
    std::size_t num_subspaces = 8;
    std::size_t num_codewords = 256;
    std::size_t n_clusters = 64;
    std::size_t n_queries = 100;
    std::size_t top_r = 1;
    std::uint64_t seed = 0;
    CalibrationOptions calibration{.mode = CalibrationMode::kAnalytic};
};

/// Builds at the initial size with K = ceil(sqrt(N)), grows by each factor with add(), then measures
/// search (L = N/K) before and after reconfigure(ceil(sqrt(N'))).
inline BenchReport bench_reconfigure(const ReconfigureBenchOptions& opts) {
    const std::size_t max_growth = *std::max_element(opts.growth_factors.begin(), opts.growth_factors.end());
    const std::size_t total = opts.initial_size * max_growth;
    const auto data = generate_synthetic(total, opts.dim, opts.n_clusters, opts.seed);
    const auto training = generate_synthetic(std::max<std::size_t>(opts.num_codewords * 20, 5000), opts.dim,
                                             opts.n_clusters, opts.seed, {.sample_seed = opts.seed + 1});
    const auto queries =
        generate_synthetic(opts.n_queries, opts.dim, opts.n_clusters, opts.seed, {.sample_seed = opts.seed + 2});
    const auto cb = train_codebooks(training, opts.num_subspaces, opts.num_codewords, 20, opts.seed);

    BuildOptions build_opts;
    build_opts.num_lists = sqrt_lists(opts.initial_size);
    build_opts.seed = opts.seed;
    build_opts.calibration = opts.calibration;
    const RiiIndex initial = build(cb, std::nullopt, data.slice(0, opts.initial_size), build_opts);

    BenchReport report;
    for (std::size_t g : opts.growth_factors) {
        RiiIndex idx = initial;
        const std::size_t n = opts.initial_size * g;
        for (std::size_t i = opts.initial_size; i < n; ++i) {
            idx.add(data.row(i));
        }
        const auto truth = ground_truth(data.slice(0, n), queries, 1);
        auto measure = [&](const std::string& method, double reconf_s) {
            const std::size_t l = std::max<std::size_t>(1, n / idx.num_lists());
            std::vector<std::vector<Id>> results(queries.rows());
            const double ms = mean_latency_ms(queries.rows(), [&](std::size_t i) {
                results[i] = query(idx, queries.row(i), opts.top_r, AllIds{}, l).ids();
            });
            BenchRow row;
            row.dataset = "synthetic";
            row.method = method;
            row.seed = opts.seed;
            row.num_lists = idx.num_lists();
            row.num_subspaces = idx.code_size();
            row.candidates = l;
            row.top_r = opts.top_r;
            row.subset_size = n;
            row.database_size = n;
            row.n_queries = queries.rows();
            row.latency_ms = ms;
            row.recall = recall_at_r(results, truth, opts.top_r);
            row.index_bytes = serialized_size(idx);
            row.reconfigure_s = reconf_s;
            report.rows.push_back(row);
        };
        measure("before-reconfigure", 0.0);
        const auto start = std::chrono::steady_clock::now();
        reconfigure(idx, sqrt_lists(n), opts.seed, 10, opts.calibration);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        measure("after-reconfigure", secs);
    }
    return report;
}

}  // namespace rii
