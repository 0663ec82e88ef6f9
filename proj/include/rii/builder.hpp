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

#include <cmath>
#include <cstdint>
#include <optional>

#include "rii/calibrate.hpp"
#include "rii/common.hpp"
#include "rii/index.hpp"

namespace rii {

struct BuildOptions {
    /// Number of posting lists K. Zero picks ceil(sqrt(N)).
    std::size_t num_lists = 0;
    std::uint64_t seed = 0;
    std::size_t kmeans_iters = 10;
    CalibrationOptions calibration{};
};

inline std::size_t sqrt_lists(std::size_t n) {
    auto k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    return std::max<std::size_t>(1, std::min(k, n));
}

/// Re-clusters the codes into k posting lists and recalibrates the threshold.
inline Calibration reconfigure(RiiIndex& idx, std::size_t k, std::uint64_t seed, std::size_t kmeans_iters = 10,
                               const CalibrationOptions& calibration = {}) {
    idx.recluster(k, seed, kmeans_iters);
    return recalibrate(idx, calibration);
}

/// Encodes every vector in input order, then clusters the codes. Empty input yields an empty index
/// with no posting lists, which always answers by PQ-linear-scan.
inline RiiIndex build(Codebook codebook, std::optional<Rotation> rotation, const FloatMatrix& vectors,
                      const BuildOptions& opts = {}) {
    RiiIndex idx(std::move(codebook), std::move(rotation));
    if (vectors.empty()) {
        idx.set_threshold(0, opts.calibration.mode == CalibrationMode::kAnalytic);
        return idx;
    }
    check_dim(vectors.cols(), idx.dim(), "build");
    const std::size_t k = opts.num_lists == 0 ? sqrt_lists(vectors.rows()) : opts.num_lists;
    if (k > vectors.rows()) {
        throw InputError("build: K=" + std::to_string(k) + " exceeds N=" + std::to_string(vectors.rows()));
    }
    idx.add_batch(vectors);
    reconfigure(idx, k, opts.seed, opts.kmeans_iters, opts.calibration);
    return idx;
}

}  // namespace rii
