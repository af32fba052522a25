#pragma once

// Little-endian binary serialization helpers shared by all file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "qread/error.hpp"

namespace qread {

class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { put_uint(v, 2); }
    void u32(std::uint32_t v) { put_uint(v, 4); }
    void u64(std::uint64_t v) { put_uint(v, 8); }
    void i16(std::int16_t v) { u16(static_cast<std::uint16_t>(v)); }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void magic(const char (&m)[5]) {
        buf_.insert(buf_.end(), m, m + 4);
    }

    void bytes(std::span<const std::uint8_t> b) {
        buf_.insert(buf_.end(), b.begin(), b.end());
    }

    const std::vector<std::uint8_t>& data() const { return buf_; }

private:
    void put_uint(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get_uint(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get_uint(4)); }
    std::uint64_t u64() { return get_uint(8); }
    std::int16_t i16() { return static_cast<std::int16_t>(u16()); }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    void expect_magic(const char (&m)[5], const std::string& format_name) {
        std::uint64_t at = pos_;
        const std::uint8_t* p = take(4).data();
        if (std::memcmp(p, m, 4) != 0)
            throw ParseError("bad " + format_name + " magic", at);
    }

    std::span<const std::uint8_t> take(std::uint64_t n) {
        if (n > data_.size() - pos_)
            throw ParseError("truncated payload (need " + std::to_string(n) + " more bytes)", pos_);
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::uint64_t pos() const { return pos_; }
    std::uint64_t remaining() const { return data_.size() - pos_; }

    void expect_end(const std::string& format_name) {
        if (remaining() != 0)
            throw ParseError("trailing bytes after " + format_name + " payload", pos_);
    }

private:
    std::uint64_t get_uint(int n) {
        auto b = take(static_cast<std::uint64_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }

    std::span<const std::uint8_t> data_;
    std::uint64_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    in.seekg(0, std::ios::end);
    auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> buf(size);
    if (size > 0) in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size));
    if (!in) throw DataError("short read: " + path.string());
    return buf;
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot create file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write: " + path.string());
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    write_file(path, std::span<const std::uint8_t>(
                         reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace qread
