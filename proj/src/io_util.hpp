#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>

#include "camo/core.hpp"

namespace camo::detail {

// Writes through a sibling temporary file and renames it into place, so
// readers never observe a partially written file.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

// Reads a little-endian value at `pos` and advances it. Returns false when
// the buffer is too short.
template <typename T>
bool get_le(std::string_view in, std::size_t& pos, T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if (pos + sizeof(T) > in.size()) return false;
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  std::memcpy(&value, buf, sizeof(T));
  pos += sizeof(T);
  return true;
}

}  // namespace camo::detail
