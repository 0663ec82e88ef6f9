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

#include "rii/bench.hpp"
#include "rii/builder.hpp"
#include "rii/calibrate.hpp"
#include "rii/common.hpp"
#include "rii/concurrent.hpp"
#include "rii/index.hpp"
#include "rii/opq.hpp"
#include "rii/persistence.hpp"
#include "rii/pq_codec.hpp"
#include "rii/search.hpp"
