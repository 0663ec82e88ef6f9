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
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "rii/common.hpp"
#include "rii/index.hpp"

namespace rii {

/// Fixed 44-byte header at the start of every index file.
struct IndexFileHeader {
    static constexpr char kMagic[4] = {'R', 'I', 'I', '1'};
    static constexpr std::uint32_t kVersion = 1;
    static constexpr std::uint32_t kFlagRotation = 1u << 0;
    static constexpr std::uint32_t kFlagAnalyticTheta = 1u << 1;
    static constexpr std::size_t kBytes = 44;

    std::uint32_t version = kVersion;
    std::uint32_t dim = 0;
    std::uint32_t num_subspaces = 0;
    std::uint32_t num_codewords = 0;
    std::uint32_t size = 0;
    std::uint32_t num_lists = 0;
    std::uint64_t theta = 0;
    std::uint32_t default_candidates = 0;
    std::uint32_t flags = 0;
};

namespace detail {

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        auto bytes = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

class ByteWriter {
 public:
    explicit ByteWriter(std::ostream& out) : out_(out) {}

    template <typename T>
    void put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        v = to_little(v);
        raw(&v, sizeof(T));
    }

    template <typename T>
    void put_all(const std::vector<T>& values) {
        if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
            raw(values.data(), values.size() * sizeof(T));
        } else {
            for (T v : values) {
                put(v);
            }
        }
    }

    void raw(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) {
            throw IoError("index write failed", written_);
        }
        written_ += n;
    }

    std::uint64_t written() const noexcept { return written_; }

 private:
    std::ostream& out_;
    std::uint64_t written_ = 0;
};

class ByteReader {
 public:
    explicit ByteReader(std::istream& in) : in_(in) {}

    template <typename T>
    T get(const char* section) {
        T v{};
        raw(&v, sizeof(T), section);
        return to_little(v);
    }

    template <typename T>
    std::vector<T> get_all(std::size_t count, const char* section) {
        std::vector<T> v(count);
        raw(v.data(), count * sizeof(T), section);
        if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
            for (auto& x : v) {
                x = to_little(x);
            }
        }
        return v;
    }

    void raw(void* p, std::size_t n, const char* section) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw FormatError(std::string("index file truncated in section '") + section + "'");
        }
    }

    bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
    std::istream& in_;
};

template <typename T>
std::uint32_t narrow_u32(T v, const char* what) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
        throw InputError(std::string(what) + " does not fit the index file header");
    }
    return static_cast<std::uint32_t>(v);
}

}  // namespace detail

/// Layout (little-endian): header, codebook (M*Z*(D/M) f32), rotation (D*D f32, if flagged),
/// codes (N*M bytes), centers (K*M bytes), postings (per list: u32 length, then u32 ids).
inline std::uint64_t save_index(const RiiIndex& idx, std::ostream& out) {
    detail::ByteWriter w(out);
    w.raw(IndexFileHeader::kMagic, 4);
    w.put<std::uint32_t>(IndexFileHeader::kVersion);
    w.put<std::uint32_t>(detail::narrow_u32(idx.dim(), "D"));
    w.put<std::uint32_t>(detail::narrow_u32(idx.code_size(), "M"));
    w.put<std::uint32_t>(detail::narrow_u32(idx.codebook().num_codewords(), "Z"));
    w.put<std::uint32_t>(detail::narrow_u32(idx.size(), "N"));
    w.put<std::uint32_t>(detail::narrow_u32(idx.num_lists(), "K"));
    w.put<std::uint64_t>(idx.threshold());
    w.put<std::uint32_t>(detail::narrow_u32(idx.default_candidates(), "default L"));
    std::uint32_t flags = 0;
    if (idx.rotation()) {
        flags |= IndexFileHeader::kFlagRotation;
    }
    if (idx.threshold_is_analytic()) {
        flags |= IndexFileHeader::kFlagAnalyticTheta;
    }
    w.put<std::uint32_t>(flags);
    w.put_all(idx.codebook().codewords());
    if (idx.rotation()) {
        w.put_all(idx.rotation()->data());
    }
    w.put_all(idx.codes());
    w.put_all(idx.centers());
    for (const auto& list : idx.posting_lists()) {
        w.put<std::uint32_t>(static_cast<std::uint32_t>(list.size()));
        w.put_all(list);
    }
    out.flush();
    if (!out) {
        throw IoError("index flush failed", w.written());
    }
    return w.written();
}

/// Exact number of bytes save_index writes.
inline std::uint64_t serialized_size(const RiiIndex& idx) {
    std::uint64_t bytes = IndexFileHeader::kBytes + idx.codebook().codewords().size() * 4;
    if (idx.rotation()) {
        bytes += idx.rotation()->data().size() * 4;
    }
    bytes += idx.codes().size() + idx.centers().size() + 4 * idx.num_lists();
    for (const auto& list : idx.posting_lists()) {
        bytes += 4 * list.size();
    }
    return bytes;
}

inline IndexFileHeader read_index_header(std::istream& in) {
    detail::ByteReader r(in);
    char magic[4];
    r.raw(magic, 4, "header");
    if (std::memcmp(magic, IndexFileHeader::kMagic, 4) != 0) {
        throw FormatError("index file: bad magic in section 'header'");
    }
    IndexFileHeader h;
    h.version = r.get<std::uint32_t>("header");
    if (h.version != IndexFileHeader::kVersion) {
        throw FormatError("index file: unsupported version " + std::to_string(h.version) + " in section 'header'");
    }
    h.dim = r.get<std::uint32_t>("header");
    h.num_subspaces = r.get<std::uint32_t>("header");
    h.num_codewords = r.get<std::uint32_t>("header");
    h.size = r.get<std::uint32_t>("header");
    h.num_lists = r.get<std::uint32_t>("header");
    h.theta = r.get<std::uint64_t>("header");
    h.default_candidates = r.get<std::uint32_t>("header");
    h.flags = r.get<std::uint32_t>("header");
    if (h.dim == 0 || h.num_subspaces == 0 || h.num_codewords == 0 || h.dim % h.num_subspaces != 0 ||
        h.num_codewords > Codebook::kMaxCodewords) {
        throw FormatError("index file: invalid D/M/Z in section 'header'");
    }
    if ((h.flags & ~(IndexFileHeader::kFlagRotation | IndexFileHeader::kFlagAnalyticTheta)) != 0) {
        throw FormatError("index file: unknown flag bits in section 'header'");
    }
    if (h.num_lists > h.size) {
        throw FormatError("index file: K exceeds N in section 'header'");
    }
    return h;
}

inline RiiIndex load_index(std::istream& in) {
    const auto h = read_index_header(in);
    detail::ByteReader r(in);
    auto codewords = r.get_all<float>(static_cast<std::size_t>(h.dim) * h.num_codewords, "codebook");
    std::optional<Rotation> rotation;
    if (h.flags & IndexFileHeader::kFlagRotation) {
        rotation.emplace(h.dim, r.get_all<float>(static_cast<std::size_t>(h.dim) * h.dim, "rotation"));
    }
    auto codes = r.get_all<std::uint8_t>(static_cast<std::size_t>(h.size) * h.num_subspaces, "codes");
    auto centers = r.get_all<std::uint8_t>(static_cast<std::size_t>(h.num_lists) * h.num_subspaces, "centers");
    std::vector<std::vector<Id>> postings(h.num_lists);
    std::uint64_t total = 0;
    for (auto& list : postings) {
        const auto len = r.get<std::uint32_t>("postings");
        total += len;
        if (total > h.size) {
            throw FormatError("index file: posting lists longer than N in section 'postings'");
        }
        list = r.get_all<Id>(len, "postings");
    }
    if (!r.at_end()) {
        throw FormatError("index file: trailing bytes after section 'postings'");
    }
    try {
        return RiiIndex::from_parts(Codebook(h.dim, h.num_subspaces, h.num_codewords, std::move(codewords)),
                                    std::move(rotation), std::move(codes), std::move(centers), std::move(postings),
                                    h.theta, (h.flags & IndexFileHeader::kFlagAnalyticTheta) != 0,
                                    h.default_candidates);
    } catch (const FormatError&) {
        throw;
    } catch (const Error& e) {
        throw FormatError(std::string("index file: ") + e.what());
    }
}

inline std::uint64_t save_index(const RiiIndex& idx, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing", 0);
    }
    return save_index(idx, out);
}

inline RiiIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string(), 0);
    }
    return load_index(in);
}

// ---- fvecs / bvecs / ivecs ----

enum class VecsFormat : std::uint8_t { kFvecs, kBvecs, kIvecs };

inline VecsFormat vecs_format_from_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".fvecs") {
        return VecsFormat::kFvecs;
    }
    if (ext == ".bvecs") {
        return VecsFormat::kBvecs;
    }
    if (ext == ".ivecs") {
        return VecsFormat::kIvecs;
    }
    throw InputError("unrecognized vector file extension '" + ext + "' (want .fvecs, .bvecs or .ivecs)");
}

template <typename T>
constexpr VecsFormat vecs_format_of() {
    if constexpr (std::is_same_v<T, float>) {
        return VecsFormat::kFvecs;
    } else if constexpr (std::is_same_v<T, std::uint8_t>) {
        return VecsFormat::kBvecs;
    } else {
        static_assert(std::is_same_v<T, std::int32_t>, "vecs element must be float, uint8_t or int32_t");
        return VecsFormat::kIvecs;
    }
}

/// Each record: little-endian i32 dimension d, then d elements. All records share one d.
template <typename T>
DenseMatrix<T> parse_vecs(std::span<const char> bytes) {
    DenseMatrix<T> out;
    std::size_t pos = 0;
    std::size_t record = 0;
    std::int32_t dim = -1;
    while (pos < bytes.size()) {
        if (bytes.size() - pos < 4) {
            throw FormatError("vecs: partial dimension field at record " + std::to_string(record));
        }
        std::int32_t d;
        std::memcpy(&d, bytes.data() + pos, 4);
        d = detail::to_little(d);
        pos += 4;
        if (d <= 0 || (dim >= 0 && d != dim)) {
            throw FormatError("vecs: inconsistent dimension " + std::to_string(d) + " at record " +
                              std::to_string(record));
        }
        dim = d;
        const std::size_t payload = static_cast<std::size_t>(d) * sizeof(T);
        if (bytes.size() - pos < payload) {
            throw FormatError("vecs: truncated record " + std::to_string(record));
        }
        std::vector<T> row(static_cast<std::size_t>(d));
        std::memcpy(row.data(), bytes.data() + pos, payload);
        for (auto& v : row) {
            v = detail::to_little(v);
        }
        out.push_back(row);
        pos += payload;
        ++record;
    }
    return out;
}

template <typename T>
DenseMatrix<T> read_vecs(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string(), 0);
    }
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_vecs<T>(bytes);
}

template <typename T>
void write_vecs(const std::filesystem::path& path, const DenseMatrix<T>& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing", 0);
    }
    detail::ByteWriter w(out);
    const auto d = static_cast<std::int32_t>(m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        w.put<std::int32_t>(d);
        for (T v : m.row(i)) {
            w.put<T>(v);
        }
    }
}

/// Reads any of the three formats, widening elements to float.
inline FloatMatrix read_vectors(const std::filesystem::path& path, VecsFormat format) {
    auto widen = [](const auto& m) {
        FloatMatrix out(m.rows(), m.cols());
        std::transform(m.data().begin(), m.data().end(), out.data().begin(),
                       [](auto v) { return static_cast<float>(v); });
        return out;
    };
    switch (format) {
        case VecsFormat::kFvecs:
            return read_vecs<float>(path);
        case VecsFormat::kBvecs:
            return widen(read_vecs<std::uint8_t>(path));
        case VecsFormat::kIvecs:
            return widen(read_vecs<std::int32_t>(path));
    }
    throw InputError("unknown vecs format");
}

inline FloatMatrix read_vectors(const std::filesystem::path& path) {
    return read_vectors(path, vecs_format_from_path(path));
}

}  // namespace rii
