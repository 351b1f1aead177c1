#pragma once

// Little-endian primitives shared by the index and hash-dataset file
// formats. Readers take the field name being parsed so truncation errors
// can say exactly what was missing.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "chasm/error.hpp"

namespace chasm::wire {

inline void write_bytes(std::ostream& out, const void* data, std::size_t size) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_integral_v<T>);
    unsigned char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i)
        bytes[i] = static_cast<unsigned char>((static_cast<std::make_unsigned_t<T>>(value) >> (8 * i)) & 0xff);
    write_bytes(out, bytes, sizeof(T));
}

inline void write_f64(std::ostream& out, double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    write_le(out, bits);
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_le(out, static_cast<std::uint32_t>(s.size()));
    write_bytes(out, s.data(), s.size());
}

inline void read_bytes(std::istream& in, void* data, std::size_t size, const char* field) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
    if (static_cast<std::size_t>(in.gcount()) != size)
        throw ParseError(std::string("truncated while reading ") + field);
}

template <typename T>
T read_le(std::istream& in, const char* field) {
    static_assert(std::is_integral_v<T>);
    unsigned char bytes[sizeof(T)];
    read_bytes(in, bytes, sizeof(T), field);
    std::make_unsigned_t<T> value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        value |= static_cast<std::make_unsigned_t<T>>(bytes[i]) << (8 * i);
    return static_cast<T>(value);
}

inline double read_f64(std::istream& in, const char* field) {
    const std::uint64_t bits = read_le<std::uint64_t>(in, field);
    double value;
    std::memcpy(&value, &bits, sizeof(value));
    return value;
}

inline std::string read_string(std::istream& in, const char* field) {
    const auto size = read_le<std::uint32_t>(in, field);
    if (size > (1u << 24)) throw ParseError(std::string("implausible length for ") + field);
    std::string s(size, '\0');
    if (size > 0) read_bytes(in, s.data(), size, field);
    return s;
}

inline void expect_magic(std::istream& in, const char (&magic)[5], const char* what) {
    char buf[4];
    read_bytes(in, buf, 4, "magic");
    if (std::memcmp(buf, magic, 4) != 0)
        throw ParseError(std::string("bad magic: expected \"") + magic + "\" for " + what);
}

}  // namespace chasm::wire
