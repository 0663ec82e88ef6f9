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
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rii/common.hpp"
#include "rii/opq.hpp"
#include "rii/pq_codec.hpp"

namespace rii {

/// Clustering of PQ-codes. centers holds K codes back to back (K*M bytes).
struct PqKMeansResult {
    std::vector<std::uint8_t> centers;
    std::vector<std::uint32_t> assignment;
    /// Sum of SDC(code, assigned center) after each assignment step.
    std::vector<double> objective;
};

namespace detail {

/// SDC-nearest center; ties go to the lowest center index.
inline std::uint32_t nearest_center(const SymmetricTables& st, const std::uint8_t* code, const std::uint8_t* centers,
                                    std::size_t k, double* best_dist = nullptr) {
    const std::size_t m = st.num_subspaces();
    std::uint32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
        const double d = st.sdc_unchecked(code, centers + c * m);
        if (d < best_d) {
            best_d = d;
            best = static_cast<std::uint32_t>(c);
        }
    }
    if (best_dist != nullptr) {
        *best_dist = best_d;
    }
    return best;
}

/// K distinct code values where possible, in seeded random order; duplicates fill the remainder.
inline std::vector<std::uint8_t> pick_initial_centers(std::span<const std::uint8_t> codes, std::size_t m,
                                                      std::size_t k, std::mt19937_64& rng) {
    const std::size_t n = codes.size() / m;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::uint8_t> centers;
    centers.reserve(k * m);
    std::unordered_set<std::string_view> seen;
    std::vector<std::size_t> leftovers;
    for (std::size_t i : order) {
        if (centers.size() == k * m) {
            break;
        }
        std::string_view key(reinterpret_cast<const char*>(codes.data() + i * m), m);
        if (seen.insert(key).second) {
            centers.insert(centers.end(), codes.begin() + static_cast<std::ptrdiff_t>(i * m),
                           codes.begin() + static_cast<std::ptrdiff_t>((i + 1) * m));
        } else {
            leftovers.push_back(i);
        }
    }
    for (std::size_t j = 0; centers.size() < k * m; ++j) {
        const std::size_t i = leftovers[j];
        centers.insert(centers.end(), codes.begin() + static_cast<std::ptrdiff_t>(i * m),
                       codes.begin() + static_cast<std::ptrdiff_t>((i + 1) * m));
    }
    return centers;
}

}  // namespace detail

/// k-means over PQ-codes under the symmetric distance. Centers stay PQ-codes: each center symbol is
/// argmin_z sum_{members} d_m(z, member_m), computed per subspace from the symmetric tables.
inline PqKMeansResult pq_kmeans(const SymmetricTables& st, std::span<const std::uint8_t> codes, std::size_t k,
                                std::size_t n_iters, std::uint64_t seed) {
    const std::size_t m = st.num_subspaces();
    const std::size_t z = st.num_codewords();
    if (m == 0 || codes.size() % m != 0) {
        throw InputError("pq_kmeans: code buffer is not a multiple of M");
    }
    const std::size_t n = codes.size() / m;
    if (k == 0) {
        throw InputError("pq_kmeans: K' must be positive");
    }
    if (k > n) {
        throw InputError("pq_kmeans: K'=" + std::to_string(k) + " exceeds the number of codes " + std::to_string(n));
    }
    std::mt19937_64 rng(seed);
    PqKMeansResult out;
    out.centers = detail::pick_initial_centers(codes, m, k, rng);
    out.assignment.assign(n, 0);

    std::vector<double> dist(n);
    std::vector<std::size_t> counts(k);
    std::vector<std::size_t> offsets(k + 1);
    std::vector<std::uint32_t> members(n);
    std::vector<std::uint32_t> hist(z);
    std::vector<std::uint8_t> distinct;
    distinct.reserve(z);

    auto assign_all = [&]() {
        double total = 0.0;
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const auto a = detail::nearest_center(st, codes.data() + i * m, out.centers.data(), k, &dist[i]);
            changed |= (a != out.assignment[i]);
            out.assignment[i] = a;
            total += dist[i];
        }
        return std::pair{total, changed};
    };

    for (std::size_t it = 0; it < n_iters; ++it) {
        auto [objective, changed] = assign_all();
        std::fill(counts.begin(), counts.end(), 0);
        for (auto a : out.assignment) {
            ++counts[a];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) {
                continue;
            }
            const auto largest = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
            if (counts[largest] < 2) {
                break;
            }
            std::size_t far = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (out.assignment[i] == largest && (far == n || dist[i] > dist[far])) {
                    far = i;
                }
            }
            std::copy_n(codes.data() + far * m, m, out.centers.data() + c * m);
            out.assignment[far] = static_cast<std::uint32_t>(c);
            objective -= dist[far];
            dist[far] = 0.0;
            --counts[largest];
            counts[c] = 1;
            changed = true;
        }
        out.objective.push_back(objective);
        if (it > 0 && !changed) {
            break;
        }

        // Update: group members by cluster, then per-subspace argmin over all Z symbols.
        offsets[0] = 0;
        for (std::size_t c = 0; c < k; ++c) {
            offsets[c + 1] = offsets[c] + counts[c];
        }
        {
            auto cursor = offsets;
            for (std::size_t i = 0; i < n; ++i) {
                members[cursor[out.assignment[i]]++] = static_cast<std::uint32_t>(i);
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                continue;
            }
            for (std::size_t sub = 0; sub < m; ++sub) {
                distinct.clear();
                for (std::size_t p = offsets[c]; p < offsets[c + 1]; ++p) {
                    const std::uint8_t s = codes[members[p] * m + sub];
                    if (hist[s]++ == 0) {
                        distinct.push_back(s);
                    }
                }
                std::size_t best = 0;
                double best_cost = std::numeric_limits<double>::infinity();
                for (std::size_t cand = 0; cand < z; ++cand) {
                    const float* row = st.row(sub, cand);
                    double cost = 0.0;
                    for (std::uint8_t s : distinct) {
                        cost += static_cast<double>(hist[s]) * row[s];
                    }
                    if (cost < best_cost) {
                        best_cost = cost;
                        best = cand;
                    }
                }
                out.centers[c * m + sub] = static_cast<std::uint8_t>(best);
                for (std::uint8_t s : distinct) {
                    hist[s] = 0;
                }
            }
        }
    }
    out.objective.push_back(assign_all().first);
    return out;
}

/// Flat PQ-code array plus coarse centers (themselves PQ-codes) and posting lists.
///
/// Readers may share a const index. add() and recluster() need exclusive access.
class RiiIndex {
 public:
    RiiIndex() = default;
    explicit RiiIndex(Codebook codebook, std::optional<Rotation> rotation = std::nullopt)
        : codebook_(std::move(codebook)), rotation_(std::move(rotation)), sym_(build_symmetric_tables(codebook_)) {
        if (codebook_.empty()) {
            throw InputError("RiiIndex: empty codebook");
        }
        if (rotation_ && rotation_->dim() != codebook_.dim()) {
            throw InputError("RiiIndex: rotation dimension does not match the codebook");
        }
    }

    const Codebook& codebook() const noexcept { return codebook_; }
    const std::optional<Rotation>& rotation() const noexcept { return rotation_; }
    const SymmetricTables& symmetric_tables() const noexcept { return sym_; }

    std::size_t dim() const noexcept { return codebook_.dim(); }
    std::size_t code_size() const noexcept { return codebook_.num_subspaces(); }
    std::size_t size() const noexcept { return code_size() == 0 ? 0 : codes_.size() / code_size(); }
    bool empty() const noexcept { return codes_.empty(); }
    std::size_t num_lists() const noexcept { return postings_.size(); }

    CodeView code(Id n) const { return {codes_.data() + static_cast<std::size_t>(n) * code_size(), code_size()}; }
    const std::vector<std::uint8_t>& codes() const noexcept { return codes_; }
    CodeView center(std::size_t k) const { return {centers_.data() + k * code_size(), code_size()}; }
    const std::vector<std::uint8_t>& centers() const noexcept { return centers_; }
    const std::vector<Id>& posting_list(std::size_t k) const { return postings_[k]; }
    const std::vector<std::vector<Id>>& posting_lists() const noexcept { return postings_; }

    std::uint64_t threshold() const noexcept { return theta_; }
    bool threshold_is_analytic() const noexcept { return theta_analytic_; }
    void set_threshold(std::uint64_t theta, bool analytic) noexcept {
        theta_ = theta;
        theta_analytic_ = analytic;
    }
    std::size_t default_candidates() const noexcept { return default_l_; }
    void set_default_candidates(std::size_t l) noexcept { default_l_ = l; }

    /// Applies the rotation when one is present.
    std::vector<float> prepare_query(std::span<const float> q) const {
        check_dim(q.size(), dim(), "query");
        if (rotation_) {
            return rotate(*rotation_, q);
        }
        return {q.begin(), q.end()};
    }

    DistanceTable distance_table(std::span<const float> q) const {
        return build_distance_table(codebook_, prepare_query(q));
    }

    PQCode encode_vector(std::span<const float> x) const { return encode(codebook_, prepare_query(x)); }

    /// SDC-nearest coarse center of a code; requires num_lists() >= 1.
    std::size_t nearest_list(CodeView c) const {
        return detail::nearest_center(sym_, c.data(), centers_.data(), num_lists());
    }

    /// Appends a vector at identifier size(). Its id joins the posting list of the nearest center.
    Id add(std::span<const float> x) { return add_code(encode_vector(x)); }

    Id add_code(CodeView c) {
        validate_code(codebook_, c);
        if (size() >= std::numeric_limits<Id>::max()) {
            throw InputError("RiiIndex: identifier space exhausted");
        }
        const auto id = static_cast<Id>(size());
        codes_.insert(codes_.end(), c.begin(), c.end());
        if (!postings_.empty()) {
            postings_[nearest_list(c)].push_back(id);
        }
        return id;
    }

    /// Appends every row. Returns the identifier of the first row.
    Id add_batch(const FloatMatrix& xs) {
        check_dim(xs.cols(), dim(), "add");
        const auto first = static_cast<Id>(size());
        codes_.reserve(codes_.size() + xs.rows() * code_size());
        for (std::size_t i = 0; i < xs.rows(); ++i) {
            add(xs.row(i));
        }
        return first;
    }

    /// Re-clusters the stored codes into k lists: centers from pq_kmeans on at most min(N, 100k) codes
    /// sampled with the seed, then every code is assigned to its nearest new center.
    /// Leaves the threshold untouched; see rii::reconfigure for the full operation.
    void recluster(std::size_t k, std::uint64_t seed, std::size_t kmeans_iters = 10) {
        const std::size_t n = size();
        if (k == 0 || k > n) {
            throw InputError("reconfigure: K'=" + std::to_string(k) + " must lie in [1, N=" + std::to_string(n) +
                             "]");
        }
        const std::size_t m = code_size();
        const std::size_t sample_size = std::min<std::size_t>(n, 100 * k);
        std::mt19937_64 rng(seed);
        std::vector<std::uint8_t> sample;
        if (sample_size == n) {
            sample = codes_;
        } else {
            std::vector<std::size_t> all(n);
            std::iota(all.begin(), all.end(), 0);
            std::vector<std::size_t> picked;
            picked.reserve(sample_size);
            std::sample(all.begin(), all.end(), std::back_inserter(picked), sample_size, rng);
            sample.reserve(sample_size * m);
            for (std::size_t i : picked) {
                auto c = code(static_cast<Id>(i));
                sample.insert(sample.end(), c.begin(), c.end());
            }
        }
        auto clustered = pq_kmeans(sym_, sample, k, kmeans_iters, rng());
        centers_ = std::move(clustered.centers);
        postings_.assign(k, {});
        for (std::size_t i = 0; i < n; ++i) {
            postings_[nearest_list(code(static_cast<Id>(i)))].push_back(static_cast<Id>(i));
        }
        default_l_ = (n + k - 1) / k;
    }

    /// Reassembles an index from stored parts, checking every structural invariant.
    static RiiIndex from_parts(Codebook codebook, std::optional<Rotation> rotation, std::vector<std::uint8_t> codes,
                               std::vector<std::uint8_t> centers, std::vector<std::vector<Id>> postings,
                               std::uint64_t theta, bool theta_analytic, std::size_t default_l) {
        RiiIndex idx(std::move(codebook), std::move(rotation));
        const std::size_t m = idx.code_size();
        if (codes.size() % m != 0 || centers.size() != postings.size() * m) {
            throw FormatError("RiiIndex: code or center buffer size is inconsistent with M");
        }
        const std::size_t z = idx.codebook_.num_codewords();
        auto symbols_ok = [z](const std::vector<std::uint8_t>& v) {
            return std::all_of(v.begin(), v.end(), [z](std::uint8_t s) { return s < z; });
        };
        if (!symbols_ok(codes) || !symbols_ok(centers)) {
            throw FormatError("RiiIndex: PQ-code symbol out of range");
        }
        const std::size_t n = codes.size() / m;
        std::vector<char> seen(n, 0);
        std::size_t total = 0;
        for (const auto& list : postings) {
            for (std::size_t i = 0; i < list.size(); ++i) {
                if (list[i] >= n || seen[list[i]] || (i > 0 && list[i] <= list[i - 1])) {
                    throw FormatError("RiiIndex: posting lists are not a sorted partition of the identifiers");
                }
                seen[list[i]] = 1;
            }
            total += list.size();
        }
        if (!postings.empty() && total != n) {
            throw FormatError("RiiIndex: posting lists do not cover every identifier");
        }
        idx.codes_ = std::move(codes);
        idx.centers_ = std::move(centers);
        idx.postings_ = std::move(postings);
        idx.theta_ = theta;
        idx.theta_analytic_ = theta_analytic;
        idx.default_l_ = default_l;
        return idx;
    }

 private:
    Codebook codebook_;
    std::optional<Rotation> rotation_;
    SymmetricTables sym_;
    std::vector<std::uint8_t> codes_;
    std::vector<std::uint8_t> centers_;
    std::vector<std::vector<Id>> postings_;
    std::uint64_t theta_ = 0;
    bool theta_analytic_ = false;
    std::size_t default_l_ = 1;
};

}  // namespace rii
