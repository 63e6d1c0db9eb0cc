#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "skssl/error.hpp"

namespace skssl {

// Little-endian binary readers/writers. All pack/checkpoint/feature files are
// little-endian regardless of host order.

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian hosts unsupported");

template <typename T>
void write_le(std::ostream& os, T v) {
  static_assert(std::is_arithmetic_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
      std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  }
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const char* what) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (is.gcount() != static_cast<std::streamsize>(sizeof(T)))
    throw DataError(std::string("truncated file while reading ") + what);
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
      std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  }
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

inline void write_str(std::ostream& os, const std::string& s) {
  if (s.size() > 0xffff) throw ValidationError("string too long for format");
  write_le<std::uint16_t>(os, static_cast<std::uint16_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_str(std::istream& is, const char* what) {
  auto n = read_le<std::uint16_t>(is, what);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (is.gcount() != static_cast<std::streamsize>(n))
    throw DataError(std::string("truncated file while reading ") + what);
  return s;
}

// 32-bit length prefix for strings that may exceed 64 KiB (arch JSON).
inline void write_str32(std::ostream& os, const std::string& s) {
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_str32(std::istream& is, const char* what) {
  auto n = read_le<std::uint32_t>(is, what);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (is.gcount() != static_cast<std::streamsize>(n))
    throw DataError(std::string("truncated file while reading ") + what);
  return s;
}

template <typename T>
void write_le_array(std::ostream& os, const T* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data),
             static_cast<std::streamsize>(n * sizeof(T)));
  } else {
    for (std::size_t i = 0; i < n; ++i) write_le<T>(os, data[i]);
  }
}

template <typename T>
void read_le_array(std::istream& is, T* data, std::size_t n, const char* what) {
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(data),
            static_cast<std::streamsize>(n * sizeof(T)));
    if (is.gcount() != static_cast<std::streamsize>(n * sizeof(T)))
      throw DataError(std::string("truncated file while reading ") + what);
  } else {
    for (std::size_t i = 0; i < n; ++i) data[i] = read_le<T>(is, what);
  }
}

inline void expect_magic(std::istream& is, const char magic[4],
                         const char* format_name) {
  char got[4] = {};
  is.read(got, 4);
  if (is.gcount() != 4)
    throw DataError(std::string("truncated ") + format_name +
                    " file: missing magic");
  if (std::memcmp(got, magic, 4) != 0)
    throw DataError(std::string("bad magic for ") + format_name + " file");
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open for writing: " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open for reading: " + path);
  return is;
}

}  // namespace skssl
