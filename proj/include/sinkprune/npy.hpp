// Copyright (C) 2026 The sinkprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "sinkprune/core.hpp"

namespace sinkprune::npy {

static_assert(std::endian::native == std::endian::little, "NPY I/O assumes a little-endian host");

/// A C-ordered array as read from or written to an .npy file.
struct Array {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    std::string descr = "<f4";  ///< source dtype

    std::size_t element_count() const {
        std::size_t n = 1;
        for (auto s : shape) {
            n *= s;
        }
        return n;
    }
};

inline constexpr char kMagic[] = "\x93NUMPY";
inline constexpr std::size_t kMagicLen = 6;
inline constexpr std::size_t kAlign = 64;

namespace detail {

inline std::string shape_tuple(const std::vector<std::size_t>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        s += std::to_string(shape[i]);
        s += (shape.size() == 1 ? "," : (i + 1 < shape.size() ? ", " : ""));
    }
    return s + ")";
}

inline std::vector<std::size_t> parse_shape(const std::string& text) {
    std::vector<std::size_t> shape;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) {
            continue;
        }
        try {
            shape.push_back(static_cast<std::size_t>(std::stoull(item.substr(b))));
        } catch (const std::exception&) {
            throw IoError("npy: malformed shape '" + text + "'");
        }
    }
    return shape;
}

inline void check_shape(const std::vector<std::size_t>& shape) {
    if (shape.empty()) {
        throw ValidationError("npy: scalar (0-d) arrays are not supported");
    }
    for (auto s : shape) {
        if (s == 0) {
            throw ValidationError("npy: zero-length axes are not supported");
        }
    }
}

}  // namespace detail

/// Parses an NPY v1.0/v2.0 byte image holding little-endian float32 or float64 data.
inline Array parse(const std::string& bytes) {
    if (bytes.size() < kMagicLen + 4 || bytes.compare(0, kMagicLen, kMagic, kMagicLen) != 0) {
        throw IoError("npy: bad magic");
    }
    const auto major = static_cast<unsigned char>(bytes[6]);
    std::size_t header_len = 0;
    std::size_t prefix = 0;
    if (major == 1) {
        header_len = static_cast<unsigned char>(bytes[8]) | (static_cast<unsigned char>(bytes[9]) << 8);
        prefix = 10;
    } else if (major == 2) {
        if (bytes.size() < 12) {
            throw IoError("npy: truncated header");
        }
        for (int b = 3; b >= 0; --b) {
            header_len = (header_len << 8) | static_cast<unsigned char>(bytes[8 + b]);
        }
        prefix = 12;
    } else {
        throw IoError("npy: unsupported format version " + std::to_string(major));
    }
    if (bytes.size() < prefix + header_len) {
        throw IoError("npy: truncated header");
    }
    const std::string header = bytes.substr(prefix, header_len);

    static const std::regex descr_re(R"('descr'\s*:\s*'([^']*)')");
    static const std::regex fortran_re(R"('fortran_order'\s*:\s*(True|False))");
    static const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
    std::smatch m;
    Array out;
    if (!std::regex_search(header, m, descr_re)) {
        throw IoError("npy: header has no descr");
    }
    out.descr = m[1];
    std::size_t width = 0;
    if (out.descr == "<f4") {
        width = 4;
    } else if (out.descr == "<f8") {
        width = 8;
    } else {
        throw IoError("npy: unsupported dtype '" + out.descr + "' (expected <f4 or <f8)");
    }
    if (!std::regex_search(header, m, fortran_re)) {
        throw IoError("npy: header has no fortran_order");
    }
    if (m[1] == "True") {
        throw IoError("npy: unsupported layout (fortran_order=True)");
    }
    if (!std::regex_search(header, m, shape_re)) {
        throw IoError("npy: header has no shape");
    }
    out.shape = detail::parse_shape(m[1]);
    detail::check_shape(out.shape);

    const std::size_t count = out.element_count();
    const std::size_t offset = prefix + header_len;
    if (bytes.size() - offset != count * width) {
        throw IoError("npy: payload is " + std::to_string(bytes.size() - offset) + " bytes, expected " +
                      std::to_string(count * width));
    }
    out.data.resize(count);
    const char* payload = bytes.data() + offset;
    for (std::size_t i = 0; i < count; ++i) {
        if (width == 4) {
            float f;
            std::memcpy(&f, payload + i * 4, 4);
            out.data[i] = f;
        } else {
            std::memcpy(&out.data[i], payload + i * 8, 8);
        }
    }
    return out;
}

/// Serializes as NPY v1.0, little-endian float32, C order, header padded to 64 bytes.
inline std::string serialize(const std::vector<std::size_t>& shape, const std::vector<double>& data) {
    detail::check_shape(shape);
    Array probe{shape, {}, "<f4"};
    if (probe.element_count() != data.size()) {
        throw ValidationError("npy: data length does not match shape");
    }
    std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': " + detail::shape_tuple(shape) + ", }";
    const std::size_t unpadded = kMagicLen + 2 + 2 + header.size() + 1;
    header.append((kAlign - unpadded % kAlign) % kAlign, ' ');
    header.push_back('\n');
    if (header.size() > 0xFFFF) {
        throw ValidationError("npy: header too long for format 1.0");
    }

    std::string out(kMagic, kMagicLen);
    out.push_back('\x01');
    out.push_back('\x00');
    out.push_back(static_cast<char>(header.size() & 0xFF));
    out.push_back(static_cast<char>((header.size() >> 8) & 0xFF));
    out += header;
    const std::size_t offset = out.size();
    out.resize(offset + data.size() * 4);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto f = static_cast<float>(data[i]);
        std::memcpy(out.data() + offset + i * 4, &f, 4);
    }
    return out;
}

inline Array read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("error reading '" + path + "'");
    }
    try {
        return parse(bytes);
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
}

/// Reads and checks the shape against what the caller expects.
inline Array read(const std::string& path, const std::vector<std::size_t>& expected_shape) {
    Array a = read(path);
    if (a.shape != expected_shape) {
        throw ValidationError(path + ": shape " + detail::shape_tuple(a.shape) + " does not match expected " +
                              detail::shape_tuple(expected_shape));
    }
    return a;
}

inline void write(const std::string& path, const std::vector<std::size_t>& shape, const std::vector<double>& data) {
    const std::string bytes = serialize(shape, data);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("error writing '" + path + "'");
    }
}

}  // namespace sinkprune::npy
