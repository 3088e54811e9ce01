// excitation_tables.hpp
//
// Padded excitation lookup tables. Singles rows are indexed by the source spin
// orbital p; doubles rows by the pair index of (p < q). Each row holds its real
// entries first followed by (null, 0) pads up to the common row width.
#ifndef SCI_EXCITATION_TABLES_HPP
#define SCI_EXCITATION_TABLES_HPP

#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sci/configuration.hpp"
#include "sci/integrals.hpp"

namespace sci {

inline constexpr std::uint64_t kNullTarget = std::numeric_limits<std::uint64_t>::max();

struct TableEntry {
  std::uint64_t target = kNullTarget;  // orbital a, or pair index of (a < b)
  double weight = 0.0;

  bool is_pad() const noexcept { return target == kNullTarget; }
  friend bool operator==(const TableEntry&, const TableEntry&) = default;
};
static_assert(sizeof(TableEntry) == 16);

/// Index of the pair (p < q) in lexicographic order of (q, p).
inline constexpr std::uint64_t orbital_pair_index(int p, int q) noexcept {
  return static_cast<std::uint64_t>(q) * static_cast<std::uint64_t>(q - 1) / 2 +
         static_cast<std::uint64_t>(p);
}
/// Inverse of orbital_pair_index.
std::pair<int, int> orbital_pair(std::uint64_t index) noexcept;

class TableFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExcitationTables {
 public:
  static constexpr std::size_t kHeaderBytes = 32;  // magic + m + two row widths

  ExcitationTables() = default;
  ExcitationTables(int m, std::size_t max_single, std::size_t max_double);

  int m() const noexcept { return m_; }
  std::size_t max_single_size() const noexcept { return max_single_; }
  std::size_t max_double_size() const noexcept { return max_double_; }
  std::size_t single_rows() const noexcept { return static_cast<std::size_t>(m_); }
  std::size_t double_rows() const noexcept {
    return static_cast<std::size_t>(m_) * static_cast<std::size_t>(m_ > 0 ? m_ - 1 : 0) / 2;
  }

  std::span<const TableEntry> single_row(int p) const noexcept {
    return {singles_.data() + static_cast<std::size_t>(p) * max_single_, max_single_};
  }
  std::span<const TableEntry> double_row(std::uint64_t pair) const noexcept {
    return {doubles_.data() + pair * max_double_, max_double_};
  }
  std::span<TableEntry> single_row(int p) noexcept {
    return {singles_.data() + static_cast<std::size_t>(p) * max_single_, max_single_};
  }
  std::span<TableEntry> double_row(std::uint64_t pair) noexcept {
    return {doubles_.data() + pair * max_double_, max_double_};
  }

  friend bool operator==(const ExcitationTables&, const ExcitationTables&) = default;

 private:
  int m_ = 0;
  std::size_t max_single_ = 0;
  std::size_t max_double_ = 0;
  std::vector<TableEntry> singles_;
  std::vector<TableEntry> doubles_;
};

/// Builds the tables. Singles keep same-spin targets whose screening weight
/// |h_pa| + sum_b (|(pa|bb)| + |(pb|ba)|) exceeds eps_table; the exact single
/// element depends on the source occupancy and is recomputed at generation.
/// Doubles keep spin-allowed (a < b) with |<pq||ab>| > eps_table and store
/// the signed antisymmetrized element.
ExcitationTables build_tables(const IntegralStore& ints, const OrbitalSpace& space,
                              double eps_table = 0.0);

/// Exact byte size of the padded layout; equals the size of write_tables output.
std::size_t table_footprint(const ExcitationTables& tables) noexcept;

/// Little-endian blob: "SCITBL1\0", u64 m, u64 max_single, u64 max_double, rows.
void write_tables(std::ostream& out, const ExcitationTables& tables);
ExcitationTables read_tables(std::istream& in);

}  // namespace sci

#endif  // SCI_EXCITATION_TABLES_HPP
