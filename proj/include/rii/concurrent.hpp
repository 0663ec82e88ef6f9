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

#include <mutex>
#include <shared_mutex>
#include <utility>

#include "rii/index.hpp"

namespace rii {

/// Single-writer / multi-reader wrapper. Readers never observe a half-updated center/posting pair.
class SharedIndex {
 public:
    explicit SharedIndex(RiiIndex idx) : idx_(std::move(idx)) {}

    template <typename Fn>
    decltype(auto) read(Fn&& fn) const {
        std::shared_lock lock(mu_);
        return std::forward<Fn>(fn)(static_cast<const RiiIndex&>(idx_));
    }

    template <typename Fn>
    decltype(auto) write(Fn&& fn) {
        std::unique_lock lock(mu_);
        return std::forward<Fn>(fn)(idx_);
    }

 private:
    mutable std::shared_mutex mu_;
    RiiIndex idx_;
};

}  // namespace rii
