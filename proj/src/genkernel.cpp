#include "sci/genkernel.hpp"

#include <algorithm>
#include <string>

#include "sci/parallel.hpp"

namespace sci {

VirtualSpace virtual_space(int n_elec, std::size_t max_single_size, std::size_t max_double_size) {
  const auto n = static_cast<std::size_t>(n_elec);
  VirtualSpace vs;
  vs.max_single_size = max_single_size;
  vs.max_double_size = max_double_size;
  vs.n_single = n * max_single_size;
  vs.n_double = (n > 0 ? n * (n - 1) / 2 : 0) * max_double_size;
  return vs;
}

VirtualSpace virtual_space(const OrbitalSpace& space, const ExcitationTables& tables) {
  if (tables.m() != space.m) {
    throw std::invalid_argument("excitation tables built for m=" + std::to_string(tables.m()) +
                                ", space has m=" + std::to_string(space.m));
  }
  return virtual_space(space.n_elec, tables.max_single_size(), tables.max_double_size());
}

VirtualId decompose_virtual_id(std::uint64_t id, const VirtualSpace& vs) {
  if (id >= vs.total()) throw std::out_of_range("virtual id out of range");
  if (id < vs.n_single) {
    return {ExcitationKind::kSingle, id / vs.max_single_size, id % vs.max_single_size};
  }
  const std::uint64_t d = id - vs.n_single;
  return {ExcitationKind::kDouble, d / vs.max_double_size, d % vs.max_double_size};
}

namespace {

int check_sources(std::span<const Configuration> sources, const ExcitationTables& tables,
                  const IntegralStore& ints) {
  if (tables.m() != 2 * ints.n_spatial()) {
    throw std::invalid_argument("excitation tables do not match the integral store");
  }
  if (sources.empty()) return 0;
  const int n = sources.front().popcount();
  for (const auto& s : sources) {
    if (s.popcount() != n) throw SectorMismatch("sources span several particle sectors");
    if (s.count_below(tables.m()) != n) {
      throw std::invalid_argument("source has bits beyond the orbital space");
    }
  }
  return n;
}

}  // namespace

std::vector<CoupledRecord> generate_coupled(std::span<const Configuration> sources,
                                            const ExcitationTables& tables,
                                            const IntegralStore& ints, const GenOptions& opts) {
  if (opts.eps < 0.0) throw std::invalid_argument("eps must be non-negative");
  const int n_elec = check_sources(sources, tables, ints);
  if (sources.empty()) return {};
  const VirtualSpace vs = virtual_space(n_elec, tables.max_single_size(), tables.max_double_size());

  const std::size_t chunk = std::max<std::size_t>(1, opts.chunk);
  const std::size_t n_chunks = (sources.size() + chunk - 1) / chunk;
  // Each chunk compacts into a private buffer; buffers are concatenated in
  // chunk order and the result sorted canonically.
  std::vector<std::vector<CoupledRecord>> buffers(n_chunks);
  parallel_for(n_chunks, opts.threads ? opts.threads : thread_limit(), [&](std::size_t k) {
    auto& out = buffers[k];
    const std::size_t end = std::min(sources.size(), (k + 1) * chunk);
    for (std::size_t i = k * chunk; i < end; ++i) {
      const SourceView src(sources[i]);
      const std::uint64_t idx = opts.index_base + i;
      for_each_coupled(src, vs, tables, ints, opts.eps,
                       [&](const Configuration& t, double h) { out.push_back({idx, t, h}); });
    }
  });

  std::size_t total = 0;
  for (const auto& b : buffers) total += b.size();
  std::vector<CoupledRecord> records;
  records.reserve(total);
  for (auto& b : buffers) {
    records.insert(records.end(), b.begin(), b.end());
    std::vector<CoupledRecord>().swap(b);
  }
  std::sort(records.begin(), records.end(), record_less);
  return records;
}

std::vector<std::size_t> count_coupled(std::span<const Configuration> sources,
                                       const ExcitationTables& tables, const IntegralStore& ints,
                                       const GenOptions& opts) {
  const int n_elec = check_sources(sources, tables, ints);
  std::vector<std::size_t> counts(sources.size(), 0);
  if (sources.empty()) return counts;
  const VirtualSpace vs = virtual_space(n_elec, tables.max_single_size(), tables.max_double_size());
  const std::size_t chunk = std::max<std::size_t>(1, opts.chunk);
  const std::size_t n_chunks = (sources.size() + chunk - 1) / chunk;
  parallel_for(n_chunks, opts.threads ? opts.threads : thread_limit(), [&](std::size_t k) {
    const std::size_t end = std::min(sources.size(), (k + 1) * chunk);
    for (std::size_t i = k * chunk; i < end; ++i) {
      const SourceView src(sources[i]);
      for_each_coupled(src, vs, tables, ints, opts.eps,
                       [&](const Configuration&, double) { ++counts[i]; });
    }
  });
  return counts;
}

LocalUnique local_unique(std::vector<CoupledRecord> records) {
  LocalUnique out;
  out.unique_targets.reserve(records.size());
  for (const auto& r : records) out.unique_targets.push_back(r.target);
  std::sort(out.unique_targets.begin(), out.unique_targets.end());
  out.unique_targets.erase(std::unique(out.unique_targets.begin(), out.unique_targets.end()),
                           out.unique_targets.end());
  out.spill = std::move(records);
  return out;
}

}  // namespace sci
