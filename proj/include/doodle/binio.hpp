#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "doodle/errors.hpp"

// Little-endian primitives shared by the SDQW / SDQD container formats.
namespace doodle::binio {

template <typename T>
void write_pod(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw DataFormatError("unexpected end of stream");
    return value;
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_pod<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
    auto n = read_pod<std::uint16_t>(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw DataFormatError("unexpected end of stream");
    return s;
}

inline void write_bytes(std::ostream& out, const std::vector<std::uint8_t>& v) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(v.size()));
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size()));
}

inline std::vector<std::uint8_t> read_bytes(std::istream& in) {
    auto n = read_pod<std::uint32_t>(in);
    std::vector<std::uint8_t> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n));
    if (!in) throw DataFormatError("unexpected end of stream");
    return v;
}

inline void write_doubles(std::ostream& out, const std::vector<double>& v) {
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(v.size()));
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline std::vector<double> read_doubles(std::istream& in) {
    auto n = read_pod<std::uint64_t>(in);
    std::vector<double> v(n);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw DataFormatError("unexpected end of stream");
    return v;
}

inline void expect_magic(std::istream& in, const char (&magic)[5], const std::string& what) {
    char buf[4];
    in.read(buf, 4);
    if (!in || std::string(buf, 4) != std::string(magic, 4))
        throw DataFormatError("bad magic, not a " + what + " file");
}

}  // namespace doodle::binio
