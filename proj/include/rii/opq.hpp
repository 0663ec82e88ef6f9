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

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rii/common.hpp"
#include "rii/pq_codec.hpp"

namespace rii {

/// Orthonormal D x D matrix applied to every vector before PQ encoding. Stored row-major.
class Rotation {
 public:
    Rotation() = default;
    Rotation(std::size_t dim, std::vector<float> row_major) : dim_(dim), matrix_(std::move(row_major)) {
        if (matrix_.size() != dim_ * dim_) {
            throw InputError("Rotation: expected " + std::to_string(dim_ * dim_) + " entries");
        }
    }

    static Rotation identity(std::size_t dim) {
        std::vector<float> m(dim * dim, 0.0f);
        for (std::size_t i = 0; i < dim; ++i) {
            m[i * dim + i] = 1.0f;
        }
        return Rotation(dim, std::move(m));
    }

    std::size_t dim() const noexcept { return dim_; }
    float at(std::size_t r, std::size_t c) const { return matrix_[r * dim_ + c]; }
    const std::vector<float>& data() const noexcept { return matrix_; }

    void apply(std::span<const float> x, std::span<float> out) const {
        check_dim(x.size(), dim_, "rotate");
        for (std::size_t r = 0; r < dim_; ++r) {
            const float* row = matrix_.data() + r * dim_;
            double acc = 0.0;
            for (std::size_t c = 0; c < dim_; ++c) {
                acc += static_cast<double>(row[c]) * x[c];
            }
            out[r] = static_cast<float>(acc);
        }
    }

    /// Largest |(R R^T - I)_ij|.
    double orthonormality_error() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            for (std::size_t j = 0; j < dim_; ++j) {
                double dot = 0.0;
                for (std::size_t k = 0; k < dim_; ++k) {
                    dot += static_cast<double>(at(i, k)) * at(j, k);
                }
                worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
            }
        }
        return worst;
    }

    bool operator==(const Rotation&) const = default;

 private:
    std::size_t dim_ = 0;
    std::vector<float> matrix_;
};

inline std::vector<float> rotate(const Rotation& rot, std::span<const float> x) {
    std::vector<float> out(rot.dim());
    rot.apply(x, out);
    return out;
}

inline FloatMatrix rotate_rows(const Rotation& rot, const FloatMatrix& x) {
    check_dim(x.cols(), rot.dim(), "rotate_rows");
    FloatMatrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        rot.apply(x.row(i), out.row(i));
    }
    return out;
}

struct OpqOptions {
    std::size_t n_opq_iters = 10;
    std::size_t n_kmeans_iters = 20;
    /// Lloyd steps used to refresh the codebook after each rotation update.
    std::size_t n_refine_iters = 4;
};

struct OpqModel {
    Rotation rotation;
    Codebook codebook;
};

/// Total squared reconstruction error of PQ on `x` (already rotated if applicable).
inline double quantization_error(const Codebook& cb, const FloatMatrix& x) {
    double total = 0.0;
    PQCode code(cb.num_subspaces());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        encode_into(cb, x.row(i), code);
        const auto rec = decode(cb, code);
        total += squared_l2(x.row(i), rec);
    }
    return total;
}

/// Non-parametric OPQ: alternate PQ encoding and an orthogonal Procrustes update of the rotation.
/// Codebooks are warm-started across iterations so the training error never rises above plain PQ.
inline OpqModel train_rotation(const FloatMatrix& training, std::size_t num_subspaces, std::size_t num_codewords,
                               std::uint64_t seed, const OpqOptions& opts = {}) {
    const std::size_t dim = training.cols();
    OpqModel model{Rotation::identity(dim),
                   train_codebooks(training, num_subspaces, num_codewords, opts.n_kmeans_iters, seed)};
    if (opts.n_opq_iters == 0) {
        return model;
    }

    using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> xf(
        training.data().data(), static_cast<Eigen::Index>(training.rows()), static_cast<Eigen::Index>(dim));
    const Mat x = xf.cast<double>();

    FloatMatrix rotated = training;
    Mat recon(static_cast<Eigen::Index>(training.rows()), static_cast<Eigen::Index>(dim));
    PQCode code(num_subspaces);
    for (std::size_t it = 0; it < opts.n_opq_iters; ++it) {
        for (std::size_t i = 0; i < rotated.rows(); ++i) {
            encode_into(model.codebook, rotated.row(i), code);
            const auto rec = decode(model.codebook, code);
            for (std::size_t j = 0; j < dim; ++j) {
                recon(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rec[j];
            }
        }
        // argmin_R sum ||R x_i - y_i||^2 over orthonormal R: R = U V^T with Y^T X = U S V^T.
        const Mat cross = recon.transpose() * x;
        Eigen::JacobiSVD<Mat> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Mat r = svd.matrixU() * svd.matrixV().transpose();
        std::vector<float> rm(dim * dim);
        for (std::size_t a = 0; a < dim; ++a) {
            for (std::size_t b = 0; b < dim; ++b) {
                rm[a * dim + b] = static_cast<float>(r(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
            }
        }
        model.rotation = Rotation(dim, std::move(rm));
        rotated = rotate_rows(model.rotation, training);
        model.codebook = refine_codebooks(model.codebook, rotated, opts.n_refine_iters);
    }
    return model;
}

}  // namespace rii
