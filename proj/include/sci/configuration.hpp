// configuration.hpp
//
// Slater-determinant bitstrings over a fixed number of 64-bit words.
// Spin orbital t lives in word t / 64 at bit t % 64. Spin orbital 2k is the
// alpha partner of spatial orbital k, 2k + 1 the beta partner.
#ifndef SCI_CONFIGURATION_HPP
#define SCI_CONFIGURATION_HPP

#include <array>
#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#ifndef SCI_CONFIG_WORDS
#define SCI_CONFIG_WORDS 2
#endif

namespace sci {

inline constexpr std::size_t kConfigWords = SCI_CONFIG_WORDS;
inline constexpr int kMaxOrbitals = static_cast<int>(64 * kConfigWords);

static_assert(kConfigWords >= 1, "at least one word per configuration");

class InvalidExcitation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SectorMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Fixed-width occupation bitstring. Ordered as one big unsigned integer
/// (most significant word first); every sort and search in the library uses
/// this order.
template <std::size_t W>
class BitString {
 public:
  static constexpr std::size_t kWords = W;
  static constexpr int kBits = static_cast<int>(64 * W);

  constexpr BitString() = default;

  constexpr bool test(int t) const noexcept {
    return (words_[static_cast<std::size_t>(t) >> 6] >> (t & 63)) & 1u;
  }
  constexpr void set(int t) noexcept { words_[static_cast<std::size_t>(t) >> 6] |= bit(t); }
  constexpr void reset(int t) noexcept { words_[static_cast<std::size_t>(t) >> 6] &= ~bit(t); }
  constexpr void flip(int t) noexcept { words_[static_cast<std::size_t>(t) >> 6] ^= bit(t); }

  constexpr int popcount() const noexcept {
    int c = 0;
    for (auto w : words_) c += std::popcount(w);
    return c;
  }

  /// Number of set bits with index strictly between lo and hi (either order).
  constexpr int count_between(int lo, int hi) const noexcept {
    if (lo > hi) std::swap(lo, hi);
    if (hi - lo < 2) return 0;
    return count_below(hi) - count_below(lo + 1);
  }

  /// Number of set bits with index < t.
  constexpr int count_below(int t) const noexcept {
    int c = 0;
    const std::size_t full = static_cast<std::size_t>(t) >> 6;
    for (std::size_t k = 0; k < full && k < W; ++k) c += std::popcount(words_[k]);
    if (full < W && (t & 63) != 0) c += std::popcount(words_[full] & (bit(t) - 1));
    return c;
  }

  constexpr BitString operator^(const BitString& o) const noexcept {
    BitString r;
    for (std::size_t k = 0; k < W; ++k) r.words_[k] = words_[k] ^ o.words_[k];
    return r;
  }
  constexpr BitString operator&(const BitString& o) const noexcept {
    BitString r;
    for (std::size_t k = 0; k < W; ++k) r.words_[k] = words_[k] & o.words_[k];
    return r;
  }

  constexpr bool operator==(const BitString&) const noexcept = default;
  constexpr std::strong_ordering operator<=>(const BitString& o) const noexcept {
    for (std::size_t k = W; k-- > 0;) {
      if (words_[k] != o.words_[k]) return words_[k] <=> o.words_[k];
    }
    return std::strong_ordering::equal;
  }

  constexpr std::uint64_t word(std::size_t k) const noexcept { return words_[k]; }
  constexpr void set_word(std::size_t k, std::uint64_t v) noexcept { words_[k] = v; }
  constexpr const std::array<std::uint64_t, W>& words() const noexcept { return words_; }

  /// Ascending list of set bit indices, appended to `out`.
  void occupied(std::vector<int>& out) const {
    out.clear();
    for (std::size_t k = 0; k < W; ++k) {
      std::uint64_t w = words_[k];
      while (w) {
        out.push_back(static_cast<int>(64 * k) + std::countr_zero(w));
        w &= w - 1;
      }
    }
  }
  std::vector<int> occupied() const {
    std::vector<int> out;
    occupied(out);
    return out;
  }

 private:
  static constexpr std::uint64_t bit(int t) noexcept { return std::uint64_t{1} << (t & 63); }
  std::array<std::uint64_t, W> words_{};
};

using Configuration = BitString<kConfigWords>;

enum class SpinConvention { kInterleaved };

/// Spin-orbital count, electron count and the 2*Sz target of the sector.
struct OrbitalSpace {
  int m = 0;
  int n_elec = 0;
  int ms2 = 0;
  SpinConvention spin = SpinConvention::kInterleaved;

  int n_spatial() const noexcept { return m / 2; }
  int n_alpha() const noexcept { return (n_elec + ms2) / 2; }
  int n_beta() const noexcept { return (n_elec - ms2) / 2; }

  /// Throws std::invalid_argument when the space violates its invariants.
  void validate() const;

  friend bool operator==(const OrbitalSpace&, const OrbitalSpace&) = default;
};

inline constexpr bool is_alpha(int spin_orbital) noexcept { return (spin_orbital & 1) == 0; }
inline constexpr int spatial_of(int spin_orbital) noexcept { return spin_orbital >> 1; }

Configuration make_config(std::span<const int> occupied, const OrbitalSpace& space);
inline Configuration make_config(std::initializer_list<int> occupied, const OrbitalSpace& space) {
  return make_config(std::span<const int>(occupied.begin(), occupied.size()), space);
}

/// Text form of length m; character t is orbital t.
std::string render(const Configuration& c, int m);
Configuration parse_config(std::string_view text);

/// Exact binomial coefficient C(m, n_elec).
boost::multiprecision::cpp_int hilbert_dimension(const OrbitalSpace& space);

struct Excited {
  Configuration config;
  int parity = 1;
};

/// p -> a with parity (-1)^(occupied orbitals strictly between p and a).
Excited apply_single(const Configuration& c, int p, int a);

/// (p, q) -> (a, b), applied as p -> a then q -> b; parity is the product.
Excited apply_double(const Configuration& c, int p, int q, int a, int b);

/// Number of orbital moves separating two configurations of one sector.
int diff_degree(const Configuration& c1, const Configuration& c2);

/// Hartree-Fock reference: lowest n_alpha alpha and n_beta beta spin orbitals.
Configuration reference_config(const OrbitalSpace& space);

/// Number of alpha electrons in c.
int alpha_count(const Configuration& c);

}  // namespace sci

template <std::size_t W>
struct std::hash<sci::BitString<W>> {
  std::size_t operator()(const sci::BitString<W>& s) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    for (std::size_t k = 0; k < W; ++k) {
      h ^= s.word(k) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

#endif  // SCI_CONFIGURATION_HPP
