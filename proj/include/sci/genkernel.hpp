// genkernel.hpp
//
// Coupled-configuration generation. Every source configuration owns a virtual
// excitation-id space: ids [0, n_single) address (occupied electron, singles
// slot) and the rest address (occupied pair, doubles slot). Each id is looked
// up in the excitation tables, filtered, and turned into a CoupledRecord.
#ifndef SCI_GENKERNEL_HPP
#define SCI_GENKERNEL_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sci/configuration.hpp"
#include "sci/excitation_tables.hpp"
#include "sci/integrals.hpp"
#include "sci/slater_condon.hpp"

namespace sci {

struct CoupledRecord {
  std::uint64_t source_idx = 0;
  Configuration target;
  double element = 0.0;

  friend bool operator==(const CoupledRecord&, const CoupledRecord&) = default;
};

/// Canonical record order: (source_idx, target).
inline bool record_less(const CoupledRecord& a, const CoupledRecord& b) noexcept {
  if (a.source_idx != b.source_idx) return a.source_idx < b.source_idx;
  return a.target < b.target;
}

struct VirtualSpace {
  std::size_t n_single = 0;
  std::size_t n_double = 0;
  std::size_t max_single_size = 0;
  std::size_t max_double_size = 0;

  std::size_t total() const noexcept { return n_single + n_double; }
};

VirtualSpace virtual_space(const OrbitalSpace& space, const ExcitationTables& tables);
VirtualSpace virtual_space(int n_elec, std::size_t max_single_size, std::size_t max_double_size);

enum class ExcitationKind { kSingle, kDouble };

struct VirtualId {
  ExcitationKind kind = ExcitationKind::kSingle;
  std::size_t index = 0;  // occupied-electron index, or occupied-pair index
  std::size_t slot = 0;   // position within the table row

  friend bool operator==(const VirtualId&, const VirtualId&) = default;
};

VirtualId decompose_virtual_id(std::uint64_t id, const VirtualSpace& vs);

/// Per-source view: occupied orbitals and their (x < y) pairs in
/// lexicographic order of positions in the occupied list.
class SourceView {
 public:
  explicit SourceView(const Configuration& c) : config_(c) {
    c.occupied(occ_);
    pairs_.reserve(occ_.size() * (occ_.size() - (occ_.empty() ? 0 : 1)) / 2);
    for (std::size_t x = 0; x < occ_.size(); ++x) {
      for (std::size_t y = x + 1; y < occ_.size(); ++y) pairs_.emplace_back(occ_[x], occ_[y]);
    }
  }
  const Configuration& config() const noexcept { return config_; }
  std::span<const int> occupied() const noexcept { return occ_; }
  std::pair<int, int> pair(std::size_t k) const noexcept { return pairs_[k]; }
  std::size_t pair_count() const noexcept { return pairs_.size(); }

 private:
  Configuration config_;
  std::vector<int> occ_;
  std::vector<std::pair<int, int>> pairs_;
};

/// Walks the virtual-id space of one source and calls visit(target, element)
/// for every excitation whose exact signed element satisfies |element| > eps.
/// Singles elements are recomputed from the integrals; doubles carry the
/// stored <pq||ab> times the excitation parity.
template <class Visit>
void for_each_coupled(const SourceView& src, const VirtualSpace& vs, const ExcitationTables& tables,
                      const IntegralStore& ints, double eps, Visit&& visit) {
  const Configuration& c = src.config();
  const std::uint64_t total = vs.total();
  for (std::uint64_t id = 0; id < total; ++id) {
    const VirtualId v = decompose_virtual_id(id, vs);
    if (v.kind == ExcitationKind::kSingle) {
      const int p = src.occupied()[v.index];
      const TableEntry& e = tables.single_row(p)[v.slot];
      if (e.is_pad()) continue;
      const int a = static_cast<int>(e.target);
      if (c.test(a)) continue;
      const double element = single_element(c, src.occupied(), p, a, ints);
      if (!(std::abs(element) > eps)) continue;
      Configuration t = c;
      t.flip(p);
      t.flip(a);
      visit(t, element);
    } else {
      const auto [p, q] = src.pair(v.index);
      const TableEntry& e = tables.double_row(orbital_pair_index(p, q))[v.slot];
      if (e.is_pad()) continue;
      const auto [a, b] = orbital_pair(e.target);
      if (c.test(a) || c.test(b)) continue;
      // parity of p -> a followed by q -> b
      int between = c.count_between(p, a);
      Configuration t = c;
      t.flip(p);
      t.flip(a);
      between += t.count_between(q, b);
      t.flip(q);
      t.flip(b);
      const double element = (between & 1) ? -e.weight : e.weight;
      if (!(std::abs(element) > eps)) continue;
      visit(t, element);
    }
  }
}

struct GenOptions {
  double eps = 0.0;
  std::size_t chunk = 64;          // sources per work unit
  unsigned threads = 0;            // 0: process-wide thread limit
  std::uint64_t index_base = 0;    // added to every source_idx
};

/// Coupled records for every source, sorted by (source_idx, target).
/// Output is identical for every chunk size and thread count.
std::vector<CoupledRecord> generate_coupled(std::span<const Configuration> sources,
                                            const ExcitationTables& tables,
                                            const IntegralStore& ints, const GenOptions& opts = {});

/// Number of records generate_coupled would emit for each source.
std::vector<std::size_t> count_coupled(std::span<const Configuration> sources,
                                       const ExcitationTables& tables, const IntegralStore& ints,
                                       const GenOptions& opts = {});

struct LocalUnique {
  std::vector<Configuration> unique_targets;  // sorted, deduplicated
  std::vector<CoupledRecord> spill;           // the full record stream, untouched
};

LocalUnique local_unique(std::vector<CoupledRecord> records);

}  // namespace sci

#endif  // SCI_GENKERNEL_HPP
