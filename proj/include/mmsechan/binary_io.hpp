#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mmsechan {

/// Decode failure with the byte offset at which the input stopped making sense.
class DecodeError : public std::runtime_error {
public:
    enum class Kind { BadMagic, VersionMismatch, TypeMismatch, Truncated, TrailingBytes, Io };

    DecodeError(Kind kind, std::size_t offset, const std::string& what)
        : std::runtime_error(what + " at byte offset " + std::to_string(offset)), kind_(kind), offset_(offset) {}

    Kind kind() const noexcept { return kind_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    Kind kind_;
    std::size_t offset_;
};

namespace le {

template <class U>
void put(std::string& out, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFFu));
}

inline void put_f64(std::string& out, double v) { put(out, std::bit_cast<std::uint64_t>(v)); }

/// Sequential little-endian reader over a byte buffer.
class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    template <class U>
    U get() {
        if (remaining() < sizeof(U))
            throw DecodeError(DecodeError::Kind::Truncated, pos_, "unexpected end of input");
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i)
            v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += sizeof(U);
        return v;
    }

    double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }

    std::string_view take(std::size_t n) {
        if (remaining() < n) throw DecodeError(DecodeError::Kind::Truncated, pos_, "unexpected end of input");
        const auto v = bytes_.substr(pos_, n);
        pos_ += n;
        return v;
    }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace le

std::string read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::string& bytes);

}  // namespace mmsechan
