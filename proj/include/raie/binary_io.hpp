#ifndef RAIE_BINARY_IO_HPP
#define RAIE_BINARY_IO_HPP

#include <raie/error.hpp>

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace raie::io {

inline std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks for very large buffers.
    std::size_t offset = 0;
    while (offset < bytes.size()) {
        const std::size_t chunk = std::min<std::size_t>(bytes.size() - offset, 1u << 30);
        crc = ::crc32(crc, bytes.data() + offset, static_cast<uInt>(chunk));
        offset += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

/// Little-endian encoder, independent of host byte order.
class ByteWriter {
public:
    void put_magic(std::string_view magic) {
        buf_.insert(buf_.end(), magic.begin(), magic.end());
    }
    void put_u8(std::uint8_t v) { buf_.push_back(v); }
    void put_u32(std::uint32_t v) { put_le(v, 4); }
    void put_u64(std::uint64_t v) { put_le(v, 8); }
    void put_f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }

    /// Appends the CRC32 of everything written so far.
    void seal() { put_u32(crc32(buf_)); }

    const std::vector<std::uint8_t>& bytes() const { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    void put_le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked little-endian decoder; every failure is a CorruptSnapshot.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    /// Checks the trailing CRC32 and narrows the readable range to the payload.
    void verify_checksum() {
        if (bytes_.size() < 4) fail("file too short for checksum");
        const auto payload = bytes_.first(bytes_.size() - 4);
        ByteReader tail(bytes_.last(4));
        if (tail.get_u32() != crc32(payload)) fail("checksum mismatch");
        bytes_ = payload;
    }

    void expect_magic(std::string_view magic) {
        need(magic.size());
        if (std::memcmp(bytes_.data() + pos_, magic.data(), magic.size()) != 0) fail("bad magic");
        pos_ += magic.size();
    }

    std::uint8_t get_u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint32_t get_u32() { return static_cast<std::uint32_t>(get_le(4)); }
    std::uint64_t get_u64() { return get_le(8); }
    double get_f64() { return std::bit_cast<double>(get_le(8)); }

    std::size_t remaining() const { return bytes_.size() - pos_; }

    void expect_end() const {
        if (remaining() != 0) fail("trailing bytes");
    }

    [[noreturn]] static void fail(const std::string& why) {
        throw Error(ErrorCode::CorruptSnapshot, why);
    }

private:
    void need(std::size_t n) const {
        if (remaining() < n) fail("truncated");
    }
    std::uint64_t get_le(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::UnreadableInput, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::UnreadableInput, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace raie::io

#endif  // RAIE_BINARY_IO_HPP
