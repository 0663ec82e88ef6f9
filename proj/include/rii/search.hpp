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
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "rii/common.hpp"
#include "rii/index.hpp"
#include "rii/pq_codec.hpp"

namespace rii {

enum class SearchPath : std::uint8_t { kLinearScan, kInvertedIndex };

inline const char* to_string(SearchPath p) {
    return p == SearchPath::kLinearScan ? "pq-linear-scan" : "inverted-index";
}

struct Neighbor {
    Id id;
    float distance;
    bool operator==(const Neighbor&) const = default;
};

/// Ranked neighbors, distances ascending (ties: lower id first), plus the path that produced them.
struct ResultList {
    std::vector<Neighbor> neighbors;
    SearchPath path = SearchPath::kLinearScan;

    std::size_t size() const noexcept { return neighbors.size(); }
    bool empty() const noexcept { return neighbors.empty(); }
    std::vector<Id> ids() const {
        std::vector<Id> out;
        out.reserve(neighbors.size());
        for (const auto& n : neighbors) {
            out.push_back(n.id);
        }
        return out;
    }
};

/// Tag for a search over the whole database. Membership checks are compiled out.
struct AllIds {};

/// Strictly ascending target identifiers.
class SubsetIds {
 public:
    SubsetIds() = default;
    explicit SubsetIds(std::vector<Id> ids) : ids_(std::move(ids)) {
        for (std::size_t i = 1; i < ids_.size(); ++i) {
            if (ids_[i] <= ids_[i - 1]) {
                throw InputError("SubsetIds: identifiers must be strictly ascending (position " + std::to_string(i) +
                                 ")");
            }
        }
    }

    /// Sorts and de-duplicates arbitrary input.
    static SubsetIds from_unsorted(std::vector<Id> ids) {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        return SubsetIds(std::move(ids));
    }

    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }
    bool contains(Id n) const { return std::binary_search(ids_.begin(), ids_.end(), n); }
    auto begin() const noexcept { return ids_.begin(); }
    auto end() const noexcept { return ids_.end(); }
    const std::vector<Id>& ids() const noexcept { return ids_; }

 private:
    std::vector<Id> ids_;
};

namespace detail {

inline bool ranks_before(const Neighbor& a, const Neighbor& b) noexcept {
    return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
}

/// Keeps the R best of u, sorted.
inline void take_top(std::vector<Neighbor>& u, std::size_t r) {
    if (u.size() > r) {
        std::partial_sort(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(r), u.end(), ranks_before);
        u.resize(r);
    } else {
        std::sort(u.begin(), u.end(), ranks_before);
    }
}

inline std::size_t target_size(const RiiIndex& idx, const AllIds&) { return idx.size(); }
inline std::size_t target_size(const RiiIndex&, const SubsetIds& s) { return s.size(); }

inline void check_target(const RiiIndex&, const AllIds&) {}
inline void check_target(const RiiIndex& idx, const SubsetIds& s) {
    if (!s.empty() && s.ids().back() >= idx.size()) {
        throw InputError("subset identifier " + std::to_string(s.ids().back()) + " is out of range for N=" +
                         std::to_string(idx.size()));
    }
}

inline void check_r(std::size_t r) {
    if (r == 0) {
        throw InputError("R must be at least 1");
    }
}

inline ResultList linear_scan(const RiiIndex& idx, const DistanceTable& table, std::size_t r, const AllIds&) {
    ResultList out;
    out.path = SearchPath::kLinearScan;
    const std::size_t n = idx.size();
    const std::size_t m = idx.code_size();
    const std::uint8_t* codes = idx.codes().data();
    out.neighbors.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.neighbors.push_back({static_cast<Id>(i), table.adc_unchecked(codes + i * m)});
    }
    take_top(out.neighbors, r);
    return out;
}

inline ResultList linear_scan(const RiiIndex& idx, const DistanceTable& table, std::size_t r, const SubsetIds& s) {
    ResultList out;
    out.path = SearchPath::kLinearScan;
    const std::size_t m = idx.code_size();
    const std::uint8_t* codes = idx.codes().data();
    out.neighbors.reserve(s.size());
    for (Id id : s) {
        out.neighbors.push_back({id, table.adc_unchecked(codes + static_cast<std::size_t>(id) * m)});
    }
    take_top(out.neighbors, r);
    return out;
}

/// Number of nearest posting lists to visit: min(ceil(K*L/|S|), K).
inline std::size_t lists_to_visit(std::size_t k, std::size_t l, std::size_t target) {
    if (target == 0) {
        return 0;
    }
    const auto kl = static_cast<unsigned __int128>(k) * l;
    const auto need = (kl + target - 1) / target;
    return need >= k ? k : static_cast<std::size_t>(need);
}

template <typename Target>
ResultList inverted(const RiiIndex& idx, const DistanceTable& table, std::size_t r, const Target& target,
                    std::size_t l) {
    ResultList out;
    out.path = SearchPath::kInvertedIndex;
    const std::size_t k = idx.num_lists();
    const std::size_t m = idx.code_size();
    const std::size_t visit = lists_to_visit(k, l, target_size(idx, target));
    if (visit == 0) {
        return out;
    }
    std::vector<Neighbor> lists;
    lists.reserve(k);
    const std::uint8_t* centers = idx.centers().data();
    for (std::size_t c = 0; c < k; ++c) {
        lists.push_back({static_cast<Id>(c), table.adc_unchecked(centers + c * m)});
    }
    std::partial_sort(lists.begin(), lists.begin() + static_cast<std::ptrdiff_t>(visit), lists.end(), ranks_before);

    const std::uint8_t* codes = idx.codes().data();
    out.neighbors.reserve(l);
    for (std::size_t v = 0; v < visit; ++v) {
        for (Id id : idx.posting_list(lists[v].id)) {
            if constexpr (std::is_same_v<Target, SubsetIds>) {
                if (!target.contains(id)) {
                    continue;
                }
            }
            out.neighbors.push_back({id, table.adc_unchecked(codes + static_cast<std::size_t>(id) * m)});
            if (out.neighbors.size() == l) {
                take_top(out.neighbors, r);
                return out;
            }
        }
    }
    // Selected lists ran out before L candidates: rank what was collected.
    take_top(out.neighbors, r);
    return out;
}

}  // namespace detail

/// Scores every target code against the query (ADC) and keeps the R best.
template <typename Target = AllIds>
ResultList pq_linear_scan(const RiiIndex& idx, std::span<const float> q, std::size_t r, const Target& target = {}) {
    detail::check_r(r);
    detail::check_target(idx, target);
    return detail::linear_scan(idx, idx.distance_table(q), r, target);
}

/// Visits the nearest posting lists and scores up to L members of the target set.
template <typename Target = AllIds>
ResultList inverted_index_search(const RiiIndex& idx, std::span<const float> q, std::size_t r, const Target& target,
                                 std::size_t l) {
    detail::check_r(r);
    detail::check_target(idx, target);
    if (idx.num_lists() == 0) {
        throw InputError("inverted_index_search: index has no coarse centers");
    }
    if (l == 0) {
        throw InputError("inverted_index_search: L must be at least 1");
    }
    return detail::inverted(idx, idx.distance_table(q), r, target, l);
}

/// Picks PQ-linear-scan when |S| < theta (or when the index has no posting lists), inverted-index otherwise.
template <typename Target = AllIds>
ResultList query(const RiiIndex& idx, std::span<const float> q, std::size_t r, const Target& target = {},
                 std::optional<std::size_t> l = std::nullopt) {
    detail::check_r(r);
    detail::check_target(idx, target);
    const std::size_t s = detail::target_size(idx, target);
    const auto table = idx.distance_table(q);
    if (idx.num_lists() == 0 || s < idx.threshold()) {
        return detail::linear_scan(idx, table, r, target);
    }
    const std::size_t budget = l.value_or(idx.default_candidates());
    if (budget == 0) {
        throw InputError("query: L must be at least 1");
    }
    return detail::inverted(idx, table, r, target, budget);
}

}  // namespace rii
