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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../oracles.hpp"
#include "rii/opq.hpp"

namespace rii {
namespace {

/// Explicit reconstruction error through the oracle encoder.
double reconstruction_error(const OpqModel& model, const FloatMatrix& x) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto r = rotate(model.rotation, x.row(i));
        const auto code = testing::ref_encode(model.codebook, r.data());
        const auto rec = testing::ref_decode(model.codebook, code);
        total += testing::ref_sq_dist(r.data(), rec.data(), x.cols());
    }
    return total;
}

/// Gaussian data mixed by a fixed random linear map so dimensions are correlated across subspaces.
FloatMatrix correlated(std::size_t n, std::size_t d, std::uint64_t seed) {
    auto z = testing::random_matrix(n, d, seed);
    auto mix = testing::random_matrix(d, d, seed + 1);
    FloatMatrix x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < d; ++a) {
            float acc = 0.0f;
            for (std::size_t b = 0; b < d; ++b) {
                acc += mix.row(a)[b] * z.row(i)[b];
            }
            x.row(i)[a] = acc;
        }
    }
    return x;
}

TEST(Opq, ZeroIterationsIsPlainPq) {
    auto x = correlated(500, 8, 1);
    OpqOptions opts;
    opts.n_opq_iters = 0;
    auto model = train_rotation(x, 2, 16, 7, opts);
    EXPECT_EQ(model.rotation, Rotation::identity(8));
    EXPECT_EQ(model.codebook, train_codebooks(x, 2, 16, opts.n_kmeans_iters, 7));
}

TEST(Opq, ReducesErrorOnCorrelatedData) {
    auto x = correlated(2000, 16, 3);
    OpqOptions plain;
    plain.n_opq_iters = 0;
    const double pq_err = reconstruction_error(train_rotation(x, 4, 16, 11, plain), x);
    auto model = train_rotation(x, 4, 16, 11, OpqOptions{});
    const double opq_err = reconstruction_error(model, x);
    EXPECT_LE(opq_err, pq_err * 1.01);
    EXPECT_LT(model.rotation.orthonormality_error(), 1e-5);
}

TEST(Opq, AxisAlignedIndependentDataGainsLittle) {
    // Each subspace carries its own independent scale; PQ is already well matched.
    auto x = testing::random_matrix(1000, 8, 5);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < 8; ++j) {
            x.row(i)[j] *= (j < 4 ? 3.0f : 0.5f);
        }
    }
    OpqOptions plain;
    plain.n_opq_iters = 0;
    const double pq_err = reconstruction_error(train_rotation(x, 2, 16, 4, plain), x);
    const double opq_err = reconstruction_error(train_rotation(x, 2, 16, 4, OpqOptions{}), x);
    EXPECT_LE(opq_err, pq_err * 1.01);
    EXPECT_GE(opq_err, pq_err * 0.8);
}

TEST(Rotate, IdentityNormAndDistancePreservation) {
    auto x = testing::random_matrix(20, 16, 9);
    auto id = Rotation::identity(16);
    const auto same = rotate(id, x.row(0));
    EXPECT_TRUE(std::equal(same.begin(), same.end(), x.row(0).begin()));

    auto model = train_rotation(correlated(600, 16, 2), 4, 16, 1, OpqOptions{3, 10, 2});
    for (std::size_t i = 0; i + 1 < x.rows(); ++i) {
        const auto a = rotate(model.rotation, x.row(i));
        const auto b = rotate(model.rotation, x.row(i + 1));
        const double na = testing::ref_sq_dist(a.data(), std::vector<float>(16, 0.0f).data(), 16);
        const double nx = testing::ref_sq_dist(x.row(i).data(), std::vector<float>(16, 0.0f).data(), 16);
        EXPECT_NEAR(std::sqrt(na), std::sqrt(nx), 1e-5 * std::sqrt(nx));
        const double dr = std::sqrt(testing::ref_sq_dist(a.data(), b.data(), 16));
        const double dx = std::sqrt(testing::ref_sq_dist(x.row(i).data(), x.row(i + 1).data(), 16));
        EXPECT_NEAR(dr, dx, 1e-5 * dx);
    }
    const std::vector<float> wrong(15);
    EXPECT_THROW(rotate(model.rotation, wrong), InputError);
}

}  // namespace
}  // namespace rii
