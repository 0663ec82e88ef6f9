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

// Acceptance suite. Prints one PASS/FAIL line per criterion; exits nonzero if any criterion fails.
//   rii_acceptance            run every criterion
//   rii_acceptance --only 5   run a single criterion

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rii/rii.hpp"

namespace {

using namespace rii;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

const CalibrationOptions kAnalytic{.mode = CalibrationMode::kAnalytic};

/// Brute-force ADC ranking of `ids` through the checked adc() primitive.
std::vector<Neighbor> brute_force_adc(const RiiIndex& idx, std::span<const float> q, const std::vector<Id>& ids,
                                      std::size_t r) {
    const auto table = idx.distance_table(q);
    std::vector<Neighbor> all;
    for (Id id : ids) {
        all.push_back({id, adc(table, idx.code(id))});
    }
    std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
    });
    if (all.size() > r) {
        all.resize(r);
    }
    return all;
}

std::vector<Id> sorted_sample(std::size_t n, std::size_t k, std::mt19937_64& rng) {
    std::vector<Id> all(n);
    for (std::size_t i = 0; i < n; ++i) {
        all[i] = static_cast<Id>(i);
    }
    std::vector<Id> out;
    std::sample(all.begin(), all.end(), std::back_inserter(out), k, rng);
    return out;
}

std::set<Id> as_set(const std::vector<Neighbor>& v) {
    std::set<Id> s;
    for (const auto& n : v) {
        s.insert(n.id);
    }
    return s;
}

/// Small random index built end to end from a synthetic mixture.
RiiIndex small_index(std::size_t n, std::size_t m, std::size_t z, std::uint64_t seed, FloatMatrix* queries = nullptr) {
    const std::size_t dim = 16;
    auto data = generate_synthetic(n, dim, 12, seed);
    auto cb = train_codebooks(data, m, z, 8, seed);
    if (queries != nullptr) {
        *queries = generate_synthetic(5, dim, 12, seed, {.sample_seed = seed + 1000});
    }
    return build(cb, std::nullopt, data, {0, seed, 10, kAnalytic});
}

// 1. Serialized size against (N+K)*M + 4N bytes plus codebook and header.
Outcome memory_formula() {
    const auto start = Clock::now();
    const std::size_t n = 100000, k = 316, m = 16, z = 256, dim = 64;
    auto data = generate_synthetic(n, dim, 64, 1);
    auto cb = train_codebooks(data.slice(0, 20000), m, z, 10, 1);
    auto idx = build(cb, std::nullopt, data, {k, 1, 10, {}});
    const auto path = std::filesystem::temp_directory_path() / "rii_acceptance_c1.rii";
    save_index(idx, path);
    const double measured = static_cast<double>(std::filesystem::file_size(path));
    std::filesystem::remove(path);
    const double theory = static_cast<double>((n + k) * m + 4 * n) + dim * z * 4.0 + IndexFileHeader::kBytes;
    const double ratio = measured / theory;
    const double secs = seconds_since(start);
    return {ratio >= 0.9 && ratio <= 1.1 && secs < 120.0,
            fmt("measured %.0f B, formula %.0f B, ratio %.4f (limit 1 +/- 0.10), %.1f s (limit 120 s)", measured,
                theory, ratio, secs)};
}

// 2. query() with L >= |S| reproduces brute-force ADC ranking over S.
Outcome oracle_equivalence() {
    const auto start = Clock::now();
    std::mt19937_64 rng(2);
    std::size_t checks = 0, set_mismatch = 0, order_mismatch = 0;
    for (int inst = 0; inst < 50; ++inst) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(300, 2000)(rng);
        const std::size_t m = (inst % 2 == 0) ? 2 : 4;
        const std::size_t z = (inst % 4 < 2) ? 16 : 256;
        FloatMatrix queries;
        auto idx = small_index(n, m, z, 100 + static_cast<std::uint64_t>(inst), &queries);
        for (std::size_t size : {std::size_t{1}, std::size_t{10}, n / 2, n}) {
            const auto ids = sorted_sample(n, size, rng);
            const SubsetIds s(ids);
            for (std::size_t r : {1u, 10u, 100u}) {
                for (std::size_t qi = 0; qi < queries.rows(); ++qi) {
                    const auto got = query(idx, queries.row(qi), r, s, size).neighbors;
                    const auto want = brute_force_adc(idx, queries.row(qi), ids, r);
                    ++checks;
                    set_mismatch += as_set(got) != as_set(want) ? 1 : 0;
                    order_mismatch += got != want ? 1 : 0;
                }
            }
        }
    }
    const double secs = seconds_since(start);
    return {set_mismatch == 0 && secs < 300.0,
            fmt("%zu comparisons, %zu set mismatches, %zu order mismatches, %.1f s (limit 300 s)", checks,
                set_mismatch, order_mismatch, secs)};
}

// 3. Whole-set inverted index with L = N equals the linear scan.
Outcome path_consistency() {
    std::mt19937_64 rng(3);
    std::size_t checks = 0, mismatch = 0;
    for (int inst = 0; inst < 20; ++inst) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(300, 2000)(rng);
        FloatMatrix queries;
        auto idx = small_index(n, inst % 2 == 0 ? 2 : 4, inst < 10 ? 16 : 256, 300 + static_cast<std::uint64_t>(inst),
                               &queries);
        for (std::size_t qi = 0; qi < queries.rows(); ++qi) {
            for (std::size_t r : {1u, 10u, 100u}) {
                ++checks;
                mismatch += inverted_index_search(idx, queries.row(qi), r, AllIds{}, n).neighbors !=
                                    pq_linear_scan(idx, queries.row(qi), r).neighbors
                                ? 1
                                : 0;
            }
        }
    }
    return {mismatch == 0, fmt("%zu comparisons, %zu mismatches", checks, mismatch)};
}

struct Desk {
    FloatMatrix base;
    FloatMatrix queries;
    RiiIndex idx;
};

/// N = 1e5, D = 32 mixture, M = 8, Z = 256.
Desk desk_index(std::size_t k, std::uint64_t seed, std::size_t n_queries) {
    Desk d;
    d.base = generate_synthetic(100000, 32, 64, seed);
    d.queries = generate_synthetic(n_queries, 32, 64, seed, {.sample_seed = seed + 1});
    auto cb = train_codebooks(d.base.slice(0, 20000), 8, 256, 10, seed);
    d.idx = build(cb, std::nullopt, d.base, {k, seed, 10, {}});
    return d;
}

// 4. Every id returned over the bench-subset grid belongs to S.
Outcome subset_containment() {
    auto d = desk_index(316, 4, 10);
    SubsetBenchOptions opts;
    opts.subset_sizes = {100, 1000, 10000};
    opts.top_r = {1, 10, 100};
    opts.seed = 4;
    opts.dataset = "synthetic-1e5";
    auto report = bench_subset(d.idx, d.base, d.queries, opts);
    double worst = 1.0;
    std::ostringstream cells;
    for (const auto& row : report.rows) {
        worst = std::min(worst, row.containment);
        if (row.method == "rii") {
            cells << " |S|=" << row.subset_size << ",R=" << row.top_r << ":" << fmt("%.3f", row.latency_ms) << "ms";
        }
    }
    return {worst == 1.0, fmt("minimum containment %.6f over %zu rows (theta=%llu); rii latency", worst,
                              report.rows.size(), static_cast<unsigned long long>(d.idx.threshold())) +
                              cells.str()};
}

// 5. Linear scan grows with |S|, inverted index stays flat, auto-selection tracks the faster path.
Outcome crossover_shape() {
    auto d = desk_index(1000, 5, 200);
    const std::size_t l = 1000;
    d.idx.set_default_candidates(l);
    recalibrate(d.idx, CalibrationOptions{.mode = CalibrationMode::kTimed, .candidate_grid = {250, 500, 1000, 2000}, .seed = 5, .min_sample_seconds = 1e-3});
    std::mt19937_64 rng(5);
    const std::vector<std::size_t> sizes{1000, 10000, 100000};
    std::vector<double> lin, ivf, aut;
    for (std::size_t size : sizes) {
        const SubsetIds s(sorted_sample(d.idx.size(), size, rng));
        auto time = [&](auto fn) {
            return mean_latency_ms(d.queries.rows(), [&](std::size_t i) { (void)fn(d.queries.row(i)); });
        };
        lin.push_back(time([&](auto q) { return pq_linear_scan(d.idx, q, 1, s); }));
        ivf.push_back(time([&](auto q) { return inverted_index_search(d.idx, q, 1, s, l); }));
        aut.push_back(time([&](auto q) { return query(d.idx, q, 1, s, l); }));
    }
    const double lin_growth = lin.back() / lin.front();
    const double ivf_spread = *std::max_element(ivf.begin(), ivf.end()) / *std::min_element(ivf.begin(), ivf.end());
    double worst_auto = 0.0;
    std::ostringstream cells;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        worst_auto = std::max(worst_auto, aut[i] / std::min(lin[i], ivf[i]));
        cells << fmt(" |S|=%zu lin=%.3f ivf=%.3f auto=%.3f ms;", sizes[i], lin[i], ivf[i], aut[i]);
    }
    const bool growth_ok = lin_growth >= 5.0;
    const bool flat_ok = ivf_spread < 2.0;
    const bool auto_ok = worst_auto <= 2.0;
    return {growth_ok && flat_ok && auto_ok,
            fmt("linear growth %.1fx (need >= 5), inverted spread %.2fx (need < 2), auto/best worst %.2fx "
                "(need <= 2), theta=%llu;",
                lin_growth, ivf_spread, worst_auto, static_cast<unsigned long long>(d.idx.threshold())) +
                cells.str()};
}

// 6. After growing 10x, reconfigure(316) makes whole-set search no slower (L = N/K on both sides).
// Both indexes are timed in alternating rounds so machine drift affects them equally.
Outcome reconfigure_benefit() {
    auto base = generate_synthetic(100000, 32, 64, 6);
    auto queries = generate_synthetic(200, 32, 64, 6, {.sample_seed = 7});
    auto cb = train_codebooks(base.slice(0, 10000), 8, 256, 10, 6);
    auto before = build(cb, std::nullopt, base.slice(0, 10000), {100, 6, 10, {}});
    for (std::size_t i = 10000; i < base.rows(); ++i) {
        before.add(base.row(i));
    }
    auto after = before;
    const auto t0 = Clock::now();
    reconfigure(after, 316, 6);
    const double reconf_s = seconds_since(t0);

    const auto truth = ground_truth(base, queries, 1);
    struct Side {
        const RiiIndex* idx;
        std::size_t l;
        double total_ms = 0.0;
        double recall = 0.0;
        double scored = 0.0;
    };
    std::array<Side, 2> sides{Side{&before, before.size() / before.num_lists()},
                              Side{&after, after.size() / after.num_lists()}};
    for (auto& side : sides) {
        std::vector<std::vector<Id>> res(queries.rows());
        for (std::size_t i = 0; i < queries.rows(); ++i) {
            const auto top = query(*side.idx, queries.row(i), 1, AllIds{}, side.l);
            res[i] = top.ids();
            side.scored += static_cast<double>(query(*side.idx, queries.row(i), side.l, AllIds{}, side.l).size());
        }
        side.recall = recall_at_r(res, truth, 1);
        side.scored /= static_cast<double>(queries.rows());
    }
    const int rounds = 25;
    for (int round = 0; round < rounds; ++round) {
        for (auto& side : sides) {
            side.total_ms += mean_latency_ms(queries.rows(), [&](std::size_t i) {
                (void)query(*side.idx, queries.row(i), 1, AllIds{}, side.l);
            });
        }
    }
    const double ms_before = sides[0].total_ms / rounds;
    const double ms_after = sides[1].total_ms / rounds;
    return {ms_after <= ms_before,
            fmt("before K=100 L=%zu: %.4f ms, %.0f codes scored, R@1 %.3f; after K=316 L=%zu: %.4f ms, %.0f codes "
                "scored, R@1 %.3f; speedup %.2fx over %d x %zu queries; reconfigure %.2f s",
                sides[0].l, ms_before, sides[0].scored, sides[0].recall, sides[1].l, ms_after, sides[1].scored,
                sides[1].recall, ms_before / ms_after, rounds, queries.rows(), reconf_s)};
}

// 7. Recall@1 grows with L and exhaustive PQ is at least as good as L = N/K.
Outcome recall_sanity() {
    const std::size_t n = 10000;
    auto base = generate_synthetic(n, 32, 64, 8);
    auto queries = generate_synthetic(1000, 32, 64, 8, {.sample_seed = 9});
    auto cb = train_codebooks(base, 8, 256, 15, 8);
    auto idx = build(cb, std::nullopt, base, {100, 8, 10, {}});
    const auto truth = ground_truth(base, queries, 1);
    const std::vector<std::size_t> ls{n / 100, 5 * n / 100, n};
    auto report = bench_recall(idx, queries, truth, ls, 1, "synthetic-1e4", 8);
    std::vector<double> rec;
    for (const auto& row : report.rows) {
        rec.push_back(row.recall);
    }
    bool ok = rec[2] >= rec[0];
    for (std::size_t i = 1; i < rec.size(); ++i) {
        ok = ok && rec[i] + 0.01 >= rec[i - 1];
    }
    return {ok, fmt("Recall@1 at L=%zu: %.3f, L=%zu: %.3f, L=%zu: %.3f", ls[0], rec[0], ls[1], rec[1], ls[2], rec[2])};
}

// 8. save -> load answers identically; save -> load -> save is byte-identical.
Outcome persistence_roundtrip() {
    std::size_t query_mismatch = 0, byte_mismatch = 0;
    for (int inst = 0; inst < 10; ++inst) {
        const auto seed = 800 + static_cast<std::uint64_t>(inst);
        auto data = generate_synthetic(1500, 16, 12, seed);
        RiiIndex idx;
        if (inst % 2 == 0) {
            auto model = train_rotation(data, 4, 64, seed, OpqOptions{3, 8, 2});
            idx = build(model.codebook, model.rotation, data, {0, seed, 10, {}});
        } else {
            idx = build(train_codebooks(data, 4, 64, 8, seed), std::nullopt, data, {0, seed, 10, {}});
        }
        std::ostringstream first;
        save_index(idx, first);
        std::istringstream in(first.str());
        auto back = load_index(in);
        std::ostringstream second;
        save_index(back, second);
        byte_mismatch += first.str() != second.str() ? 1 : 0;
        auto queries = generate_synthetic(100, 16, 12, seed, {.sample_seed = seed + 1});
        std::mt19937_64 rng(seed);
        const SubsetIds s(sorted_sample(idx.size(), 200, rng));
        for (std::size_t i = 0; i < queries.rows(); ++i) {
            query_mismatch += query(idx, queries.row(i), 10).neighbors != query(back, queries.row(i), 10).neighbors;
            query_mismatch += query(idx, queries.row(i), 10, s).neighbors != query(back, queries.row(i), 10, s).neighbors;
        }
    }
    return {query_mismatch == 0 && byte_mismatch == 0,
            fmt("10 indexes, 2000 queries: %zu result mismatches, %zu byte mismatches", query_mismatch, byte_mismatch)};
}

// 9. pq_kmeans objective never rises; K' distinct repeated values are recovered exactly.
Outcome pq_kmeans_properties() {
    std::size_t violations = 0;
    std::mt19937_64 rng(9);
    for (int run = 0; run < 20; ++run) {
        const std::size_t m = 2 + static_cast<std::size_t>(run % 3) * 2;
        const std::size_t z = run % 2 == 0 ? 16 : 256;
        auto data = generate_synthetic(1000, m * 2, 10, 900 + static_cast<std::uint64_t>(run));
        auto cb = train_codebooks(data, m, z, 5, static_cast<std::uint64_t>(run));
        const auto st = build_symmetric_tables(cb);
        std::vector<std::uint8_t> codes;
        for (std::size_t i = 0; i < data.rows(); ++i) {
            const auto c = encode(cb, data.row(i));
            codes.insert(codes.end(), c.begin(), c.end());
        }
        auto res = pq_kmeans(st, codes, 5 + static_cast<std::size_t>(run) * 3, 15, static_cast<std::uint64_t>(run));
        for (std::size_t i = 1; i < res.objective.size(); ++i) {
            violations += res.objective[i] > res.objective[i - 1] ? 1 : 0;
        }
    }
    // Exact recovery.
    const std::size_t m = 4, k = 12;
    auto cb = train_codebooks(generate_synthetic(2000, 8, 10, 990), m, 64, 5, 1);
    const auto st = build_symmetric_tables(cb);
    std::set<std::vector<std::uint8_t>> values;
    std::uniform_int_distribution<int> sym(0, 63);
    while (values.size() < k) {
        values.insert({static_cast<std::uint8_t>(sym(rng)), static_cast<std::uint8_t>(sym(rng)),
                       static_cast<std::uint8_t>(sym(rng)), static_cast<std::uint8_t>(sym(rng))});
    }
    std::vector<std::uint8_t> codes;
    for (int rep = 0; rep < 9; ++rep) {
        for (const auto& v : values) {
            codes.insert(codes.end(), v.begin(), v.end());
        }
    }
    auto res = pq_kmeans(st, codes, k, 10, 3);
    std::set<std::vector<std::uint8_t>> centers;
    for (std::size_t c = 0; c < k; ++c) {
        centers.insert({res.centers.begin() + static_cast<long>(c * m), res.centers.begin() + static_cast<long>((c + 1) * m)});
    }
    const bool recovered = centers == values && res.objective.back() == 0.0;
    return {violations == 0 && recovered,
            fmt("20 runs, %zu objective increases; distinct-value recovery %s (final objective %g)", violations,
                recovered ? "exact" : "FAILED", res.objective.back())};
}

// 10. SIFT1M, K = 1000, M = 64, L = 5000: Recall@1 >= 0.60. Needs RII_SIFT1M_DIR.
Outcome sift1m_recall() {
    const char* dir = std::getenv("RII_SIFT1M_DIR");
    if (dir == nullptr) {
        return {true, "SKIPPED: set RII_SIFT1M_DIR to a directory with sift_{learn,base,query}.fvecs and "
                      "sift_groundtruth.ivecs"};
    }
    const std::filesystem::path root(dir);
    auto learn = read_vecs<float>(root / "sift_learn.fvecs");
    auto base = read_vecs<float>(root / "sift_base.fvecs");
    auto queries = read_vecs<float>(root / "sift_query.fvecs");
    auto gt_raw = read_vecs<std::int32_t>(root / "sift_groundtruth.ivecs");
    std::vector<std::vector<Id>> truth;
    for (std::size_t i = 0; i < gt_raw.rows(); ++i) {
        truth.push_back({static_cast<Id>(gt_raw.row(i)[0])});
    }
    auto cb = train_codebooks(learn, 64, 256, 20, 10);
    auto idx = build(cb, std::nullopt, base, {1000, 10, 10, {}});
    auto report = bench_recall(idx, queries, truth, {5000}, 1, "sift1m", 10);
    const double rec = report.rows[0].recall;
    return {rec >= 0.60, fmt("Recall@1 %.3f (need >= 0.60), %.3f ms/query", rec, report.rows[0].latency_ms)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria{
        {1, {"memory formula", memory_formula}},
        {2, {"oracle equivalence", oracle_equivalence}},
        {3, {"path consistency", path_consistency}},
        {4, {"subset containment", subset_containment}},
        {5, {"crossover shape", crossover_shape}},
        {6, {"reconfigure benefit", reconfigure_benefit}},
        {7, {"recall sanity", recall_sanity}},
        {8, {"persistence", persistence_roundtrip}},
        {9, {"pq_kmeans", pq_kmeans_properties}},
        {10, {"SIFT1M recall (optional)", sift1m_recall}},
    };
    int only = 0;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--only") {
            only = std::atoi(argv[i + 1]);
        }
    }
    int failures = 0;
    for (const auto& [id, entry] : criteria) {
        if (only != 0 && id != only) {
            continue;
        }
        Outcome out{false, ""};
        try {
            out = entry.second();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] C%d %s: %s\n", out.pass ? "PASS" : "FAIL", id, entry.first, out.detail.c_str());
        std::fflush(stdout);
        failures += out.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
