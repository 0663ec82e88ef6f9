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

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rii {

/// Database identifier. Dense, 0-based, append-only.
using Id = std::uint32_t;

class Error : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments: dimension mismatch, out-of-range ids, bad parameters.
class InputError : public Error {
 public:
    using Error::Error;
};

class TrainingError : public Error {
 public:
    using Error::Error;
};

/// Unrecognized or corrupt file contents. The message names the failing section.
class FormatError : public Error {
 public:
    using Error::Error;
};

class IoError : public Error {
 public:
    IoError(const std::string& what, std::uint64_t bytes_written)
        : Error(what + " (" + std::to_string(bytes_written) + " bytes written)"), bytes_written_(bytes_written) {}
    std::uint64_t bytes_written() const noexcept { return bytes_written_; }

 private:
    std::uint64_t bytes_written_;
};

/// Row-major dense matrix; one vector per row.
template <typename T>
class DenseMatrix {
 public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw InputError("DenseMatrix: data size does not match rows*cols");
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }

    std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::vector<T>& data() noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    /// Appends one row; an empty matrix adopts the row's width.
    void push_back(std::span<const T> r) {
        if (rows_ == 0 && cols_ == 0) {
            cols_ = r.size();
        }
        if (r.size() != cols_) {
            throw InputError("DenseMatrix: row width " + std::to_string(r.size()) + " != " + std::to_string(cols_));
        }
        data_.insert(data_.end(), r.begin(), r.end());
        ++rows_;
    }

    /// Rows [first, first+count) as a new matrix.
    DenseMatrix slice(std::size_t first, std::size_t count) const {
        if (first + count > rows_) {
            throw InputError("DenseMatrix: slice out of range");
        }
        return DenseMatrix(count, cols_,
                           std::vector<T>(data_.begin() + first * cols_, data_.begin() + (first + count) * cols_));
    }

    bool operator==(const DenseMatrix&) const = default;

 private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using FloatMatrix = DenseMatrix<float>;

inline float squared_l2(std::span<const float> a, std::span<const float> b) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const float d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

inline void check_dim(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw InputError(std::string(what) + ": dimension " + std::to_string(got) + " != expected " +
                         std::to_string(want));
    }
}

}  // namespace rii
