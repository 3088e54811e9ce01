#include "sci/excitation_tables.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iterator>

#include "sci/binary_io.hpp"
#include "sci/slater_condon.hpp"

namespace sci {
namespace {

constexpr char kMagic[8] = {'S', 'C', 'I', 'T', 'B', 'L', '1', '\0'};

double single_screening_weight(const IntegralStore& ints, int p, int a) {
  const int sp = p >> 1;
  const int sa = a >> 1;
  double w = std::abs(ints.h(sp, sa));
  for (int b = 0; b < ints.n_spatial(); ++b) {
    w += std::abs(ints.eri(sp, sa, b, b)) + std::abs(ints.eri(sp, b, b, sa));
  }
  return w;
}

}  // namespace

std::pair<int, int> orbital_pair(std::uint64_t index) noexcept {
  // largest q with q(q-1)/2 <= index
  auto q = static_cast<std::uint64_t>((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(index))) / 2.0);
  while (q * (q - 1) / 2 > index) --q;
  while ((q + 1) * q / 2 <= index) ++q;
  return {static_cast<int>(index - q * (q - 1) / 2), static_cast<int>(q)};
}

ExcitationTables::ExcitationTables(int m, std::size_t max_single, std::size_t max_double)
    : m_(m), max_single_(max_single), max_double_(max_double) {
  singles_.assign(single_rows() * max_single_, TableEntry{});
  doubles_.assign(double_rows() * max_double_, TableEntry{});
}

ExcitationTables build_tables(const IntegralStore& ints, const OrbitalSpace& space,
                              double eps_table) {
  if (eps_table < 0.0) throw std::invalid_argument("eps_table must be non-negative");
  if (ints.n_spatial() * 2 != space.m) {
    throw std::invalid_argument("integral store does not match orbital space");
  }
  const int m = space.m;

  std::vector<std::vector<TableEntry>> singles(static_cast<std::size_t>(m));
  for (int p = 0; p < m; ++p) {
    for (int a = (p & 1); a < m; a += 2) {
      if (a == p) continue;
      const double w = single_screening_weight(ints, p, a);
      if (w > eps_table) singles[static_cast<std::size_t>(p)].push_back({static_cast<std::uint64_t>(a), w});
    }
  }

  const std::size_t n_pairs = static_cast<std::size_t>(m) * static_cast<std::size_t>(m - 1) / 2;
  std::vector<std::vector<TableEntry>> doubles(n_pairs);
  for (int q = 1; q < m; ++q) {
    for (int p = 0; p < q; ++p) {
      auto& row = doubles[orbital_pair_index(p, q)];
      const int spin = (p & 1) + (q & 1);
      for (int b = 1; b < m; ++b) {
        if (b == p || b == q) continue;
        for (int a = 0; a < b; ++a) {
          if (a == p || a == q || (a & 1) + (b & 1) != spin) continue;
          const double w = antisymmetrized(ints, p, q, a, b);
          if (std::abs(w) > eps_table) row.push_back({orbital_pair_index(a, b), w});
        }
      }
    }
  }

  std::size_t max_single = 0;
  std::size_t max_double = 0;
  for (const auto& r : singles) max_single = std::max(max_single, r.size());
  for (const auto& r : doubles) max_double = std::max(max_double, r.size());

  ExcitationTables t(m, max_single, max_double);
  for (int p = 0; p < m; ++p) {
    std::ranges::copy(singles[static_cast<std::size_t>(p)], t.single_row(p).begin());
  }
  for (std::size_t k = 0; k < n_pairs; ++k) std::ranges::copy(doubles[k], t.double_row(k).begin());
  return t;
}

std::size_t table_footprint(const ExcitationTables& t) noexcept {
  return ExcitationTables::kHeaderBytes +
         (t.single_rows() * t.max_single_size() + t.double_rows() * t.max_double_size()) *
             sizeof(TableEntry);
}

void write_tables(std::ostream& out, const ExcitationTables& t) {
  std::vector<std::byte> buf;
  buf.reserve(table_footprint(t));
  const auto* magic = reinterpret_cast<const std::byte*>(kMagic);
  buf.insert(buf.end(), magic, magic + 8);
  binary::put_u64(buf, static_cast<std::uint64_t>(t.m()));
  binary::put_u64(buf, t.max_single_size());
  binary::put_u64(buf, t.max_double_size());
  auto put_row = [&](std::span<const TableEntry> row) {
    for (const auto& e : row) {
      binary::put_u64(buf, e.target);
      binary::put_f64(buf, e.weight);
    }
  };
  for (int p = 0; p < t.m(); ++p) put_row(t.single_row(p));
  for (std::uint64_t k = 0; k < t.double_rows(); ++k) put_row(t.double_row(k));
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw TableFormatError("failed to write excitation tables");
}

ExcitationTables read_tables(std::istream& in) {
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::span<const std::byte> bytes(reinterpret_cast<const std::byte*>(raw.data()), raw.size());
  try {
    binary::Reader r(bytes);
    if (std::memcmp(r.raw(8).data(), kMagic, 8) != 0) throw TableFormatError("bad table magic");
    const auto m = r.u64();
    const auto ms = r.u64();
    const auto md = r.u64();
    if (m == 0 || m > static_cast<std::uint64_t>(kMaxOrbitals)) {
      throw TableFormatError("table orbital count out of range");
    }
    ExcitationTables t(static_cast<int>(m), ms, md);
    if (r.remaining() != table_footprint(t) - ExcitationTables::kHeaderBytes) {
      throw TableFormatError("table blob size does not match its header");
    }
    auto get_row = [&](std::span<TableEntry> row) {
      for (auto& e : row) {
        e.target = r.u64();
        e.weight = r.f64();
      }
    };
    for (int p = 0; p < t.m(); ++p) get_row(t.single_row(p));
    for (std::uint64_t k = 0; k < t.double_rows(); ++k) get_row(t.double_row(k));
    return t;
  } catch (const std::out_of_range&) {
    throw TableFormatError("truncated table blob");
  }
}

}  // namespace sci
