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

// Grow an index tenfold with add(), then re-cluster its posting lists for the new size.

#include <cstdio>

#include "rii/rii.hpp"

int main() {
    using namespace rii;
    const auto data = generate_synthetic(50000, 32, 32, 3);
    const auto queries = generate_synthetic(200, 32, 32, 3, {.sample_seed = 4});
    const auto codebook = train_codebooks(data.slice(0, 5000), 8, 256, 10, 3);

    auto index = build(codebook, std::nullopt, data.slice(0, 5000), {.seed = 3});
    for (std::size_t i = 5000; i < data.rows(); ++i) {
        index.add(data.row(i));
    }

    auto latency = [&](const RiiIndex& idx) {
        const std::size_t l = idx.size() / idx.num_lists();
        return mean_latency_ms(queries.rows(), [&](std::size_t i) { (void)query(idx, queries.row(i), 1, AllIds{}, l); });
    };
    std::printf("after add:         K=%zu  %.4f ms/query\n", index.num_lists(), latency(index));
    reconfigure(index, sqrt_lists(index.size()), 3);
    std::printf("after reconfigure: K=%zu  %.4f ms/query\n", index.num_lists(), latency(index));
    return 0;
}
