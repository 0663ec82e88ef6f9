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
#include <optional>
#include <random>
#include <tuple>
#include <vector>

#include "rii/common.hpp"
#include "rii/index.hpp"
#include "rii/search.hpp"

namespace rii {

enum class CalibrationMode : std::uint8_t { kTimed, kAnalytic };

struct CalibrationOptions {
    CalibrationMode mode = CalibrationMode::kTimed;
    /// Candidate budgets to sample. Empty means {L/2, L, 2L} around the index's default L.
    std::vector<std::size_t> candidate_grid{};
    std::size_t n_trial_queries = 10;
    std::size_t top_r = 1;
    std::uint64_t seed = 0;
    /// Each (size, path) timing repeats the trial queries until at least this much wall time has passed.
    double min_sample_seconds = 2e-4;
};

struct CrossoverSample {
    std::size_t subset_size;
    double linear_seconds;
    double inverted_seconds;
};

struct CrossoverPoint {
    std::size_t candidates;  // L
    double crossover;        // |S| at which both paths cost the same
    std::vector<CrossoverSample> samples;
};

struct Calibration {
    std::uint64_t theta = 0;
    bool analytic = false;
    /// crossover ~= slope * L + intercept
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<CrossoverPoint> points;
};

/// Average-case operation counts with unit constants.
struct CostModel {
    double dim;
    double codewords;
    double subspaces;
    double lists;
    double database;

    static CostModel of(const RiiIndex& idx) {
        return {static_cast<double>(idx.dim()), static_cast<double>(idx.codebook().num_codewords()),
                static_cast<double>(idx.code_size()), static_cast<double>(idx.num_lists()),
                static_cast<double>(idx.size())};
    }

    double linear_scan(double s, double r) const {
        return dim * codewords + subspaces * s + s * std::log2(std::max(r, 1.0));
    }

    double inverted_index(double s, double l, double r) const {
        const double visit = std::min(lists * l / s, lists);
        return dim * codewords + lists * subspaces + lists * std::log2(std::max(visit, 1.0)) +
               (l * database / s) * std::log2(std::max(s, 2.0)) + l * subspaces + l * std::log2(std::max(r, 1.0));
    }

    /// Smallest integer |S| in [1, N] where the inverted index is no costlier; N when it never is.
    double crossover(double l, double r) const {
        auto ivf_wins = [&](double s) { return inverted_index(s, l, r) <= linear_scan(s, r); };
        if (database < 1.0 || !ivf_wins(database)) {
            return database;
        }
        double lo = 1.0;
        double hi = database;
        while (hi - lo > 1.0) {
            const double mid = std::floor((lo + hi) / 2.0);
            (ivf_wins(mid) ? hi : lo) = mid;
        }
        return ivf_wins(lo) ? lo : hi;
    }
};

namespace detail {

/// Sorted sample of `size` distinct ids from [0, n).
inline SubsetIds random_subset(std::size_t n, std::size_t size, std::mt19937_64& rng) {
    std::vector<Id> all(n);
    for (std::size_t i = 0; i < n; ++i) {
        all[i] = static_cast<Id>(i);
    }
    std::vector<Id> picked;
    picked.reserve(size);
    std::sample(all.begin(), all.end(), std::back_inserter(picked), size, rng);
    return SubsetIds(std::move(picked));
}

template <typename Fn>
double seconds_per_call(const Fn& fn, std::size_t calls_per_round, double min_seconds) {
    using clock = std::chrono::steady_clock;
    std::size_t rounds = 0;
    const auto start = clock::now();
    double elapsed = 0.0;
    do {
        fn();
        ++rounds;
        elapsed = std::chrono::duration<double>(clock::now() - start).count();
    } while (elapsed < min_seconds);
    return elapsed / static_cast<double>(rounds * calls_per_round);
}

/// |S| where log(t_linear / t_inverted) crosses zero, interpolated in log |S|.
inline double interpolate_crossover(const std::vector<CrossoverSample>& samples, std::size_t n) {
    auto log_ratio = [](const CrossoverSample& s) { return std::log(s.linear_seconds / s.inverted_seconds); };
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (log_ratio(samples[i]) < 0.0) {
            continue;
        }
        if (i == 0) {
            return static_cast<double>(samples[0].subset_size);
        }
        const double y0 = log_ratio(samples[i - 1]);
        const double y1 = log_ratio(samples[i]);
        const double x0 = std::log(static_cast<double>(samples[i - 1].subset_size));
        const double x1 = std::log(static_cast<double>(samples[i].subset_size));
        const double t = (y1 == y0) ? 1.0 : (0.0 - y0) / (y1 - y0);
        return std::exp(x0 + t * (x1 - x0));
    }
    return static_cast<double>(n);
}

inline std::pair<double, double> fit_line(const std::vector<CrossoverPoint>& pts) {
    if (pts.size() == 1) {
        return {0.0, pts[0].crossover};
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : pts) {
        const double x = static_cast<double>(p.candidates);
        sx += x;
        sy += p.crossover;
        sxx += x * x;
        sxy += x * p.crossover;
    }
    const double k = static_cast<double>(pts.size());
    const double denom = k * sxx - sx * sx;
    if (denom == 0.0) {
        return {0.0, sy / k};
    }
    const double slope = (k * sxy - sx * sy) / denom;
    return {slope, (sy - slope * sx) / k};
}

inline std::vector<std::size_t> default_grid(std::size_t l) {
    std::vector<std::size_t> grid{std::max<std::size_t>(1, l / 2), l, 2 * l};
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

}  // namespace detail

/// Finds the subset size below which PQ-linear-scan beats the inverted index. For every L on the grid the
/// crossover is measured (or modelled), a line is fitted through (L, crossover), and theta is that line
/// evaluated at the index's default L, clamped to [2, N]. Indexes with N < 100 get theta = N.
inline Calibration calibrate_threshold(const RiiIndex& idx, const CalibrationOptions& opts = {},
                                       const FloatMatrix* trial_queries = nullptr) {
    Calibration cal;
    const std::size_t n = idx.size();
    cal.analytic = opts.mode == CalibrationMode::kAnalytic;
    if (n < 100 || idx.num_lists() == 0) {
        cal.theta = n;
        return cal;
    }
    const std::size_t r = std::max<std::size_t>(1, opts.top_r);
    auto grid = opts.candidate_grid.empty() ? detail::default_grid(idx.default_candidates()) : opts.candidate_grid;
    std::sort(grid.begin(), grid.end());

    if (cal.analytic) {
        const auto model = CostModel::of(idx);
        for (std::size_t l : grid) {
            cal.points.push_back({l, model.crossover(static_cast<double>(l), static_cast<double>(r)), {}});
        }
        const double at_default = model.crossover(static_cast<double>(idx.default_candidates()),
                                                  static_cast<double>(r));
        std::tie(cal.slope, cal.intercept) = detail::fit_line(cal.points);
        cal.theta = static_cast<std::uint64_t>(std::clamp(std::round(at_default), 2.0, static_cast<double>(n)));
        return cal;
    }

    std::mt19937_64 rng(opts.seed);
    std::vector<DistanceTable> tables;
    if (trial_queries != nullptr && !trial_queries->empty()) {
        for (std::size_t i = 0; i < trial_queries->rows(); ++i) {
            tables.push_back(idx.distance_table(trial_queries->row(i)));
        }
    } else {
        // Reconstructions of stored codes already live in the rotated space.
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (std::size_t i = 0; i < std::max<std::size_t>(1, opts.n_trial_queries); ++i) {
            tables.push_back(build_distance_table(idx.codebook(), decode(idx.codebook(), idx.code(static_cast<Id>(pick(rng))))));
        }
    }

    std::vector<std::size_t> sizes;
    for (std::size_t s = 128; s <= n; s *= 4) {
        sizes.push_back(s);
    }
    if (sizes.empty() || sizes.back() < n) {
        sizes.push_back(n);
    }
    std::vector<SubsetIds> subsets;
    for (std::size_t s : sizes) {
        subsets.push_back(detail::random_subset(n, s, rng));
    }

    for (std::size_t l : grid) {
        CrossoverPoint point{l, 0.0, {}};
        for (const auto& subset : subsets) {
            const double lin = detail::seconds_per_call(
                [&] {
                    for (const auto& t : tables) {
                        auto res = detail::linear_scan(idx, t, r, subset);
                        (void)res;
                    }
                },
                tables.size(), opts.min_sample_seconds);
            const double ivf = detail::seconds_per_call(
                [&] {
                    for (const auto& t : tables) {
                        auto res = detail::inverted(idx, t, r, subset, l);
                        (void)res;
                    }
                },
                tables.size(), opts.min_sample_seconds);
            point.samples.push_back({subset.size(), lin, ivf});
        }
        point.crossover = detail::interpolate_crossover(point.samples, n);
        cal.points.push_back(std::move(point));
    }
    std::tie(cal.slope, cal.intercept) = detail::fit_line(cal.points);
    const double theta = cal.slope * static_cast<double>(idx.default_candidates()) + cal.intercept;
    cal.theta = static_cast<std::uint64_t>(std::clamp(std::round(theta), 2.0, static_cast<double>(n)));
    return cal;
}

/// Calibrates and stores the threshold in the index.
inline Calibration recalibrate(RiiIndex& idx, const CalibrationOptions& opts = {}) {
    auto cal = calibrate_threshold(idx, opts);
    idx.set_threshold(cal.theta, cal.analytic);
    return cal;
}

}  // namespace rii
