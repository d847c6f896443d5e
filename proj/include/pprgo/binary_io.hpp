#pragma once

// Flat little-endian array files: no header, the element count is implied by
// the file size and cross-checked against the owning metadata.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "pprgo/error.hpp"

namespace pprgo::io {

namespace detail {

template <typename T>
T byteswap_value(T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

template <typename T>
void write_array(const std::filesystem::path& path, std::span<const T> values) {
  static_assert(std::is_arithmetic_v<T>);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot open for writing: " + path.string());
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (T v : values) {
      T le = detail::byteswap_value(v);
      out.write(reinterpret_cast<const char*>(&le), sizeof(T));
    }
  }
  if (!out) throw RuntimeError("write failed: " + path.string());
}

template <typename T>
void write_array(const std::filesystem::path& path, const std::vector<T>& values) {
  write_array(path, std::span<const T>(values));
}

/// Reads a whole array file. When `expected_count` is given, a size mismatch
/// is reported as a DataError pointing at the first byte past the shorter
/// of the two lengths.
template <typename T>
std::vector<T> read_array(const std::filesystem::path& path,
                          std::optional<std::uint64_t> expected_count = std::nullopt) {
  static_assert(std::is_arithmetic_v<T>);
  const std::string name = path.filename().string();
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) throw DataError(name, 0, "missing file " + path.string());
  const auto bytes = std::filesystem::file_size(path, ec);
  if (ec) throw DataError(name, 0, "cannot stat file");
  if (bytes % sizeof(T) != 0)
    throw DataError(name, bytes - bytes % sizeof(T),
                    "size " + std::to_string(bytes) + " is not a multiple of " +
                        std::to_string(sizeof(T)));
  const std::uint64_t count = bytes / sizeof(T);
  if (expected_count && *expected_count != count)
    throw DataError(name, std::min(count, *expected_count) * sizeof(T),
                    "length mismatch: header says " + std::to_string(*expected_count) +
                        " elements, file holds " + std::to_string(count));
  std::vector<T> values(count);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(name, 0, "cannot open file");
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw DataError(name, 0, "short read");
  if constexpr (std::endian::native != std::endian::little) {
    for (T& v : values) v = detail::byteswap_value(v);
  }
  return values;
}

}  // namespace pprgo::io
