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
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rii/common.hpp"

namespace rii {

/// One PQ-code: M sub-quantizer symbols, one byte each.
using PQCode = std::vector<std::uint8_t>;
using CodeView = std::span<const std::uint8_t>;

/// Per-subspace codeword tables. Codeword (m, z) occupies sub_dim() floats at offset (m*Z + z)*sub_dim().
class Codebook {
 public:
    static constexpr std::size_t kMaxCodewords = 256;

    Codebook() = default;
    Codebook(std::size_t dim, std::size_t num_subspaces, std::size_t num_codewords, std::vector<float> codewords)
        : dim_(dim), m_(num_subspaces), z_(num_codewords), codewords_(std::move(codewords)) {
        validate_shape(dim_, m_, z_);
        if (codewords_.size() != dim_ * z_) {
            throw InputError("Codebook: expected " + std::to_string(dim_ * z_) + " codeword floats, got " +
                             std::to_string(codewords_.size()));
        }
    }

    static void validate_shape(std::size_t dim, std::size_t num_subspaces, std::size_t num_codewords) {
        if (dim == 0 || num_subspaces == 0 || num_codewords == 0) {
            throw InputError("Codebook: D, M and Z must be positive");
        }
        if (dim % num_subspaces != 0) {
            throw InputError("Codebook: D=" + std::to_string(dim) + " is not divisible by M=" +
                             std::to_string(num_subspaces));
        }
        if (num_codewords > kMaxCodewords) {
            throw InputError("Codebook: Z=" + std::to_string(num_codewords) + " exceeds byte storage (256)");
        }
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t num_subspaces() const noexcept { return m_; }
    std::size_t num_codewords() const noexcept { return z_; }
    std::size_t sub_dim() const noexcept { return m_ == 0 ? 0 : dim_ / m_; }
    bool empty() const noexcept { return m_ == 0; }

    std::span<const float> codeword(std::size_t m, std::size_t z) const {
        return {codewords_.data() + (m * z_ + z) * sub_dim(), sub_dim()};
    }
    /// All Z codewords of subspace m, contiguous.
    std::span<const float> subspace(std::size_t m) const {
        return {codewords_.data() + m * z_ * sub_dim(), z_ * sub_dim()};
    }
    const std::vector<float>& codewords() const noexcept { return codewords_; }

    bool operator==(const Codebook&) const = default;

 private:
    std::size_t dim_ = 0;
    std::size_t m_ = 0;
    std::size_t z_ = 0;
    std::vector<float> codewords_;
};

namespace detail {

/// Index of the row of `centers` (k rows of width d) closest to x. Ties go to the lowest index.
inline std::uint32_t nearest_row(std::span<const float> x, const float* centers, std::size_t k, std::size_t d,
                                 float* best_dist = nullptr) {
    std::uint32_t best = 0;
    float best_d = std::numeric_limits<float>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
        const float dist = squared_l2(x, {centers + c * d, d});
        if (dist < best_d) {
            best_d = dist;
            best = static_cast<std::uint32_t>(c);
        }
    }
    if (best_dist != nullptr) {
        *best_dist = best_d;
    }
    return best;
}

struct KMeansResult {
    std::vector<float> centers;  // k x d
    std::vector<std::uint32_t> assignment;
};

/// k-means++ seeding. When every remaining point coincides with a chosen center the lowest unchosen index is used.
inline std::vector<float> kmeanspp_seed(const float* data, std::size_t n, std::size_t d, std::size_t k,
                                        std::mt19937_64& rng) {
    std::vector<float> centers(k * d);
    std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
    std::vector<char> chosen(n, 0);
    std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t pick = first;
        if (c > 0) {
            double total = 0.0;
            for (double v : min_dist) {
                total += v;
            }
            if (total > 0.0) {
                double target = std::uniform_real_distribution<double>(0.0, total)(rng);
                pick = n;
                for (std::size_t i = 0; i < n; ++i) {
                    if (min_dist[i] <= 0.0) {
                        continue;
                    }
                    target -= min_dist[i];
                    pick = i;
                    if (target < 0.0) {
                        break;
                    }
                }
            } else {
                pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), 0) - chosen.begin());
                if (pick == n) {
                    pick = c % n;
                }
            }
        }
        chosen[pick] = 1;
        std::copy_n(data + pick * d, d, centers.begin() + static_cast<std::ptrdiff_t>(c * d));
        std::span<const float> center(centers.data() + c * d, d);
        for (std::size_t i = 0; i < n; ++i) {
            const double dist = squared_l2({data + i * d, d}, center);
            min_dist[i] = std::min(min_dist[i], dist);
        }
    }
    return centers;
}

/// Lloyd iterations. Empty clusters are re-seeded with the point farthest from its current center.
inline KMeansResult lloyd(const float* data, std::size_t n, std::size_t d, std::size_t k, std::size_t n_iters,
                          std::vector<float> centers) {
    KMeansResult out{std::move(centers), std::vector<std::uint32_t>(n, 0)};
    std::vector<float> dist(n);
    std::vector<double> sums(k * d);
    std::vector<std::size_t> counts(k);
    for (std::size_t it = 0; it < n_iters; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            out.assignment[i] = nearest_row({data + i * d, d}, out.centers.data(), k, d, &dist[i]);
        }
        std::fill(counts.begin(), counts.end(), 0);
        for (std::uint32_t a : out.assignment) {
            ++counts[a];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) {
                continue;
            }
            std::size_t far = 0;
            float far_d = -1.0f;
            for (std::size_t i = 0; i < n; ++i) {
                if (dist[i] > far_d && counts[out.assignment[i]] > 1) {
                    far_d = dist[i];
                    far = i;
                }
            }
            if (far_d < 0.0f) {
                break;  // every cluster is a singleton already
            }
            --counts[out.assignment[far]];
            out.assignment[far] = static_cast<std::uint32_t>(c);
            counts[c] = 1;
            dist[far] = 0.0f;
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double* s = sums.data() + out.assignment[i] * d;
            const float* x = data + i * d;
            for (std::size_t j = 0; j < d; ++j) {
                s[j] += x[j];
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                continue;
            }
            for (std::size_t j = 0; j < d; ++j) {
                out.centers[c * d + j] = static_cast<float>(sums[c * d + j] / static_cast<double>(counts[c]));
            }
        }
    }
    return out;
}

/// Copies subspace m of every row into a contiguous n x sub_dim buffer.
inline std::vector<float> extract_subspace(const FloatMatrix& x, std::size_t m, std::size_t sub_dim) {
    std::vector<float> out(x.rows() * sub_dim);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto r = x.row(i).subspan(m * sub_dim, sub_dim);
        std::copy(r.begin(), r.end(), out.begin() + static_cast<std::ptrdiff_t>(i * sub_dim));
    }
    return out;
}

}  // namespace detail

/// Per-subspace k-means (k-means++ seeding, n_iters Lloyd steps). Deterministic for a fixed seed.
inline Codebook train_codebooks(const FloatMatrix& training, std::size_t num_subspaces, std::size_t num_codewords,
                                std::size_t n_iters, std::uint64_t seed) {
    Codebook::validate_shape(training.cols(), num_subspaces, num_codewords);
    if (training.rows() < num_codewords) {
        throw TrainingError("train_codebooks: " + std::to_string(training.rows()) +
                            " training vectors is fewer than Z=" + std::to_string(num_codewords));
    }
    const std::size_t n = training.rows();
    const std::size_t ds = training.cols() / num_subspaces;
    std::mt19937_64 rng(seed);
    std::vector<float> codewords;
    codewords.reserve(training.cols() * num_codewords);
    for (std::size_t m = 0; m < num_subspaces; ++m) {
        const auto sub = detail::extract_subspace(training, m, ds);
        auto init = detail::kmeanspp_seed(sub.data(), n, ds, num_codewords, rng);
        auto result = detail::lloyd(sub.data(), n, ds, num_codewords, n_iters, std::move(init));
        codewords.insert(codewords.end(), result.centers.begin(), result.centers.end());
    }
    return Codebook(training.cols(), num_subspaces, num_codewords, std::move(codewords));
}

/// Continues Lloyd iterations from an existing codebook instead of re-seeding.
inline Codebook refine_codebooks(const Codebook& start, const FloatMatrix& training, std::size_t n_iters) {
    check_dim(training.cols(), start.dim(), "refine_codebooks");
    const std::size_t ds = start.sub_dim();
    std::vector<float> codewords;
    codewords.reserve(start.codewords().size());
    for (std::size_t m = 0; m < start.num_subspaces(); ++m) {
        const auto sub = detail::extract_subspace(training, m, ds);
        auto init = start.subspace(m);
        auto result = detail::lloyd(sub.data(), training.rows(), ds, start.num_codewords(), n_iters,
                                    std::vector<float>(init.begin(), init.end()));
        codewords.insert(codewords.end(), result.centers.begin(), result.centers.end());
    }
    return Codebook(start.dim(), start.num_subspaces(), start.num_codewords(), std::move(codewords));
}

inline void encode_into(const Codebook& cb, std::span<const float> x, std::span<std::uint8_t> out) {
    check_dim(x.size(), cb.dim(), "encode");
    const std::size_t ds = cb.sub_dim();
    for (std::size_t m = 0; m < cb.num_subspaces(); ++m) {
        out[m] = static_cast<std::uint8_t>(
            detail::nearest_row(x.subspan(m * ds, ds), cb.subspace(m).data(), cb.num_codewords(), ds));
    }
}

inline PQCode encode(const Codebook& cb, std::span<const float> x) {
    PQCode code(cb.num_subspaces());
    encode_into(cb, x, code);
    return code;
}

inline void validate_code(const Codebook& cb, CodeView c) {
    if (c.size() != cb.num_subspaces()) {
        throw InputError("PQ-code length " + std::to_string(c.size()) + " != M=" +
                         std::to_string(cb.num_subspaces()));
    }
    for (std::size_t m = 0; m < c.size(); ++m) {
        if (c[m] >= cb.num_codewords()) {
            throw InputError("PQ-code symbol " + std::to_string(c[m]) + " in subspace " + std::to_string(m) +
                             " is not below Z=" + std::to_string(cb.num_codewords()));
        }
    }
}

inline std::vector<float> decode(const Codebook& cb, CodeView c) {
    validate_code(cb, c);
    std::vector<float> x;
    x.reserve(cb.dim());
    for (std::size_t m = 0; m < c.size(); ++m) {
        auto w = cb.codeword(m, c[m]);
        x.insert(x.end(), w.begin(), w.end());
    }
    return x;
}

/// Query-specific M x Z lookup table for asymmetric distances.
class DistanceTable {
 public:
    DistanceTable(std::size_t num_subspaces, std::size_t num_codewords)
        : m_(num_subspaces), z_(num_codewords), entries_(num_subspaces * num_codewords) {}

    std::size_t num_subspaces() const noexcept { return m_; }
    std::size_t num_codewords() const noexcept { return z_; }
    float at(std::size_t m, std::size_t z) const { return entries_[m * z_ + z]; }
    float& at(std::size_t m, std::size_t z) { return entries_[m * z_ + z]; }
    const float* data() const noexcept { return entries_.data(); }

    /// Sum of M lookups; no validation of the code.
    float adc_unchecked(const std::uint8_t* code) const noexcept {
        float d = 0.0f;
        const float* t = entries_.data();
        for (std::size_t m = 0; m < m_; ++m, t += z_) {
            d += t[code[m]];
        }
        return d;
    }

 private:
    std::size_t m_;
    std::size_t z_;
    std::vector<float> entries_;
};

inline DistanceTable build_distance_table(const Codebook& cb, std::span<const float> q) {
    check_dim(q.size(), cb.dim(), "build_distance_table");
    const std::size_t ds = cb.sub_dim();
    DistanceTable table(cb.num_subspaces(), cb.num_codewords());
    for (std::size_t m = 0; m < cb.num_subspaces(); ++m) {
        auto sub = q.subspan(m * ds, ds);
        for (std::size_t z = 0; z < cb.num_codewords(); ++z) {
            table.at(m, z) = squared_l2(sub, cb.codeword(m, z));
        }
    }
    return table;
}

inline float adc(const DistanceTable& table, CodeView c) {
    if (c.size() != table.num_subspaces()) {
        throw InputError("adc: code length " + std::to_string(c.size()) + " != M=" +
                         std::to_string(table.num_subspaces()));
    }
    for (std::uint8_t s : c) {
        if (s >= table.num_codewords()) {
            throw InputError("adc: symbol " + std::to_string(s) + " is not below Z");
        }
    }
    return table.adc_unchecked(c.data());
}

/// Codeword-pair distances, one Z x Z grid per subspace.
class SymmetricTables {
 public:
    SymmetricTables() = default;
    SymmetricTables(std::size_t num_subspaces, std::size_t num_codewords)
        : m_(num_subspaces), z_(num_codewords), entries_(num_subspaces * num_codewords * num_codewords) {}

    std::size_t num_subspaces() const noexcept { return m_; }
    std::size_t num_codewords() const noexcept { return z_; }
    float at(std::size_t m, std::size_t i, std::size_t j) const { return entries_[(m * z_ + i) * z_ + j]; }
    float& at(std::size_t m, std::size_t i, std::size_t j) { return entries_[(m * z_ + i) * z_ + j]; }
    /// Row i of subspace m: distances from codeword i to every codeword.
    const float* row(std::size_t m, std::size_t i) const { return entries_.data() + (m * z_ + i) * z_; }

    /// Accumulated in double so clustering objectives are stable.
    double sdc_unchecked(const std::uint8_t* a, const std::uint8_t* b) const noexcept {
        double d = 0.0;
        const float* t = entries_.data();
        const std::size_t zz = z_ * z_;
        for (std::size_t m = 0; m < m_; ++m, t += zz) {
            d += t[a[m] * z_ + b[m]];
        }
        return d;
    }

 private:
    std::size_t m_ = 0;
    std::size_t z_ = 0;
    std::vector<float> entries_;
};

inline SymmetricTables build_symmetric_tables(const Codebook& cb) {
    SymmetricTables st(cb.num_subspaces(), cb.num_codewords());
    for (std::size_t m = 0; m < cb.num_subspaces(); ++m) {
        for (std::size_t i = 0; i < cb.num_codewords(); ++i) {
            st.at(m, i, i) = 0.0f;
            for (std::size_t j = i + 1; j < cb.num_codewords(); ++j) {
                const float d = squared_l2(cb.codeword(m, i), cb.codeword(m, j));
                st.at(m, i, j) = d;
                st.at(m, j, i) = d;
            }
        }
    }
    return st;
}

inline double sdc(const SymmetricTables& st, CodeView a, CodeView b) {
    if (a.size() != st.num_subspaces() || b.size() != st.num_subspaces()) {
        throw InputError("sdc: code length does not match M=" + std::to_string(st.num_subspaces()));
    }
    for (std::size_t m = 0; m < a.size(); ++m) {
        if (a[m] >= st.num_codewords() || b[m] >= st.num_codewords()) {
            throw InputError("sdc: symbol is not below Z");
        }
    }
    return st.sdc_unchecked(a.data(), b.data());
}

}  // namespace rii
