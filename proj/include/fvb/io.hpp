/* Copyright 2026 The fvb authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License. */

#ifndef FVB_IO_HPP
#define FVB_IO_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "fvb/tensor.hpp"

namespace fvb {

// FVT1 tensor container: magic "FVT1", four little-endian u32 dims
// (n, c, h, w), then n*c*h*w little-endian f32 values. All golden fixtures
// and model tensors use this format.

namespace detail {

inline void put_u32_le(std::string& buf, uint32_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
    buf.push_back(static_cast<char>((v >> 16) & 0xff));
    buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw format_error("cannot open file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return bytes;
}

} // namespace detail

inline std::string encode_fvt(const Tensor& t) {
    std::string buf;
    buf.reserve(20 + t.numel() * 4);
    buf += "FVT1";
    detail::put_u32_le(buf, static_cast<uint32_t>(t.n));
    detail::put_u32_le(buf, static_cast<uint32_t>(t.c));
    detail::put_u32_le(buf, static_cast<uint32_t>(t.h));
    detail::put_u32_le(buf, static_cast<uint32_t>(t.w));
    for (float v : t.data) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        detail::put_u32_le(buf, bits);
    }
    return buf;
}

inline void write_fvt(const std::string& path, const Tensor& t) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw format_error("cannot open file for writing: " + path);
    const std::string buf = encode_fvt(t);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw format_error("short write to " + path);
}

inline Tensor decode_fvt(const std::string& bytes, const std::string& origin) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 4 || std::memcmp(p, "FVT1", 4) != 0)
        throw format_error(origin + ": bad magic, expected FVT1");
    if (bytes.size() < 20)
        throw format_error(origin + ": truncated header at byte offset " +
                           std::to_string(bytes.size()));
    uint32_t dims[4];
    for (int i = 0; i < 4; ++i) dims[i] = detail::get_u32_le(p + 4 + 4 * i);
    for (int i = 0; i < 4; ++i)
        if (dims[i] == 0)
            throw format_error(origin + ": zero dimension in header");
    const uint64_t count = static_cast<uint64_t>(dims[0]) * dims[1] * dims[2] * dims[3];
    const uint64_t want = 20 + count * 4;
    if (bytes.size() < want)
        throw format_error(origin + ": truncated payload at byte offset " +
                           std::to_string(bytes.size()) + ", expected " + std::to_string(want) +
                           " bytes");
    Tensor t(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]),
             static_cast<int>(dims[3]));
    for (uint64_t i = 0; i < count; ++i) {
        const uint32_t bits = detail::get_u32_le(p + 20 + i * 4);
        std::memcpy(&t.data[i], &bits, 4);
    }
    return t;
}

inline Tensor read_fvt(const std::string& path) {
    return decode_fvt(detail::read_file_bytes(path), path);
}

// Binary PPM (P6, 8-bit). Pixel bytes are scaled to [0, 1]; the result is a
// (1, 3, h, w) tensor in RGB channel order.
inline Tensor read_ppm(const std::string& path) {
    const std::string bytes = detail::read_file_bytes(path);
    size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> long {
        skip_space();
        const size_t start = pos;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
        if (pos == start)
            throw format_error(path + ": expected integer at byte offset " + std::to_string(pos));
        return std::stol(bytes.substr(start, pos - start));
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
        throw format_error(path + ": bad magic, expected P6");
    pos = 2;
    const long w = read_int();
    const long h = read_int();
    const long maxval = read_int();
    if (w < 1 || h < 1)
        throw format_error(path + ": invalid dimensions " + std::to_string(w) + "x" +
                           std::to_string(h));
    if (maxval != 255)
        throw format_error(path + ": only 8-bit (maxval 255) PPM is supported, got " +
                           std::to_string(maxval));
    ++pos; // single whitespace after maxval
    const uint64_t want = static_cast<uint64_t>(w) * h * 3;
    if (bytes.size() < pos + want)
        throw format_error(path + ": truncated pixel data at byte offset " +
                           std::to_string(bytes.size()) + ", expected " +
                           std::to_string(pos + want) + " bytes");
    Tensor t(1, 3, static_cast<int>(h), static_cast<int>(w));
    const auto* px = reinterpret_cast<const unsigned char*>(bytes.data()) + pos;
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x)
            for (int ch = 0; ch < 3; ++ch)
                t.at(0, ch, static_cast<int>(y), static_cast<int>(x)) =
                    static_cast<float>(px[(y * w + x) * 3 + ch]) / 255.0f;
    return t;
}

inline void write_ppm(const std::string& path, const Tensor& t) {
    if (t.n != 1 || t.c != 3)
        throw shape_error("write_ppm: tensor must be 1x3xHxW, got " + t.shape_str());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw format_error("cannot open file for writing: " + path);
    f << "P6\n" << t.w << " " << t.h << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(t.w) * 3);
    for (int y = 0; y < t.h; ++y) {
        for (int x = 0; x < t.w; ++x)
            for (int ch = 0; ch < 3; ++ch) {
                float v = t.at(0, ch, y, x) * 255.0f;
                v = v < 0.0f ? 0.0f : (v > 255.0f ? 255.0f : v);
                row[static_cast<size_t>(x) * 3 + ch] = static_cast<unsigned char>(v + 0.5f);
            }
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!f) throw format_error("short write to " + path);
}

} // namespace fvb

#endif // FVB_IO_HPP
