// binary_io.hpp
// Little-endian scalar encoding shared by the table and spill formats.
#ifndef SCI_BINARY_IO_HPP
#define SCI_BINARY_IO_HPP

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <vector>

namespace sci::binary {

inline std::uint64_t to_le(std::uint64_t v) noexcept {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return __builtin_bswap64(v);
  }
}

inline void put_u64(std::vector<std::byte>& out, std::uint64_t v) {
  v = to_le(v);
  const auto* p = reinterpret_cast<const std::byte*>(&v);
  out.insert(out.end(), p, p + 8);
}
inline void put_f64(std::vector<std::byte>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

/// Sequential reader over a byte span; throws std::out_of_range on truncation.
class Reader {
 public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  std::uint64_t u64() {
    if (pos_ + 8 > bytes_.size()) throw std::out_of_range("truncated binary record");
    std::uint64_t v;
    std::memcpy(&v, bytes_.data() + pos_, 8);
    pos_ += 8;
    return to_le(v);
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::span<const std::byte> raw(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw std::out_of_range("truncated binary record");
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::span<const std::byte> bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace sci::binary

#endif  // SCI_BINARY_IO_HPP
