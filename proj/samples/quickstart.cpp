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

// Train, build, search the whole set and a subset, then save and reload.

#include <cstdio>
#include <filesystem>

#include "rii/rii.hpp"

int main() {
    using namespace rii;
    const auto base = generate_synthetic(20000, 32, 32, 1);
    const auto queries = generate_synthetic(3, 32, 32, 1, {.sample_seed = 2});

    // Optimized PQ: 8 subspaces of 4 dims, 256 codewords each.
    const auto model = train_rotation(base.slice(0, 5000), 8, 256, 1);
    auto index = build(model.codebook, model.rotation, base, {.seed = 1});
    std::printf("N=%zu K=%zu L=%zu theta=%llu\n", index.size(), index.num_lists(), index.default_candidates(),
                static_cast<unsigned long long>(index.threshold()));

    // Ids 0..4999 are the target subset.
    std::vector<Id> ids(5000);
    for (Id i = 0; i < ids.size(); ++i) {
        ids[i] = i;
    }
    const SubsetIds subset(ids);

    for (std::size_t i = 0; i < queries.rows(); ++i) {
        const auto all = query(index, queries.row(i), 3);
        const auto sub = query(index, queries.row(i), 3, subset);
        std::printf("query %zu: whole set [%s] id %u d=%.2f; subset [%s] id %u d=%.2f\n", i, to_string(all.path),
                    all.neighbors[0].id, all.neighbors[0].distance, to_string(sub.path), sub.neighbors[0].id,
                    sub.neighbors[0].distance);
    }

    const auto path = std::filesystem::temp_directory_path() / "rii_quickstart.rii";
    save_index(index, path);
    const auto reloaded = load_index(path);
    std::filesystem::remove(path);
    const bool same = query(reloaded, queries.row(0), 3).neighbors == query(index, queries.row(0), 3).neighbors;
    std::printf("reloaded index answers identically: %s\n", same ? "yes" : "no");
    return same ? 0 : 1;
}
