#include "sci/memexec.hpp"

#include <algorithm>
#include <cstring>
#include <memory>
#include <tuple>

#include "sci/binary_io.hpp"
#include "sci/slater_condon.hpp"

namespace sci {

std::size_t MemoryBudget::working_bytes() const {
  if (budget_bytes <= reserved_bytes) {
    throw BudgetInfeasible("budget infeasible: " + std::to_string(budget_bytes) + " bytes does not exceed the " +
                           std::to_string(reserved_bytes) + " reserved bytes");
  }
  return budget_bytes - reserved_bytes;
}

BatchPlan plan_batches(std::size_t items, std::size_t item_bytes, const MemoryBudget& budget) {
  if (item_bytes == 0) throw std::invalid_argument("item size must be positive");
  const std::size_t per_batch = budget.per_batch_bytes();
  if (per_batch < item_bytes) {
    throw BudgetInfeasible("budget infeasible: one item of " + std::to_string(item_bytes) +
                           " bytes needs " + std::to_string(budget.reserved_bytes + kBufferMultiplicity * item_bytes) +
                           " bytes, budget is " + std::to_string(budget.budget_bytes));
  }
  BatchPlan plan;
  plan.items = items;
  plan.batch_size = std::max<std::size_t>(1, std::min(items, per_batch / item_bytes));
  plan.batch_count = (items + plan.batch_size - 1) / plan.batch_size;
  for (std::size_t b = 0; b <= plan.batch_count; ++b) plan.offsets.push_back(std::min(items, b * plan.batch_size));
  return plan;
}

BatchPlan plan_weighted_batches(std::span<const std::size_t> item_bytes, const MemoryBudget& budget) {
  const std::size_t per_batch = budget.per_batch_bytes();
  BatchPlan plan;
  plan.items = item_bytes.size();
  plan.offsets.push_back(0);
  std::size_t acc = 0;
  for (std::size_t i = 0; i < item_bytes.size(); ++i) {
    if (item_bytes[i] > per_batch) {
      throw BudgetInfeasible("budget infeasible: item " + std::to_string(i) + " needs " +
                             std::to_string(item_bytes[i]) + " working bytes per batch, at most " +
                             std::to_string(per_batch) + " available");
    }
    if (acc + item_bytes[i] > per_batch) {
      plan.offsets.push_back(i);
      acc = 0;
    }
    acc += item_bytes[i];
  }
  if (!item_bytes.empty()) plan.offsets.push_back(item_bytes.size());
  plan.batch_count = plan.offsets.size() - 1;
  plan.batch_size = 1;
  for (std::size_t b = 0; b < plan.batch_count; ++b) {
    plan.batch_size = std::max(plan.batch_size, plan.offsets[b + 1] - plan.offsets[b]);
  }
  return plan;
}

MemoryTracker::Lease MemoryTracker::acquire(std::size_t bytes) {
  const std::size_t now = in_use_.fetch_add(bytes) + bytes;
  if (budget_.budget_bytes != kUnlimitedBudget && now + budget_.reserved_bytes > budget_.budget_bytes) {
    in_use_.fetch_sub(bytes);
    throw BudgetViolation("working buffers (" + std::to_string(now) + " bytes) plus reserved exceed budget " +
                          std::to_string(budget_.budget_bytes));
  }
  std::size_t prev = peak_.load();
  while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
  }
  return Lease(this, bytes);
}

// Spill segments.

std::vector<std::byte> encode_segment(std::span<const CoupledRecord> records) {
  std::vector<std::byte> out;
  out.reserve(kSpillHeaderBytes + records.size() * kSpillRecordBytes);
  for (char ch : kSpillMagic) out.push_back(static_cast<std::byte>(ch));
  binary::put_u64(out, kConfigWords);
  binary::put_u64(out, records.size());
  for (const auto& r : records) {
    binary::put_u64(out, r.source_idx);
    for (std::size_t w = 0; w < kConfigWords; ++w) binary::put_u64(out, r.target.word(w));
    binary::put_f64(out, r.element);
  }
  return out;
}

std::vector<CoupledRecord> decode_segment(std::span<const std::byte> bytes) {
  binary::Reader in(bytes);
  try {
    const auto magic = in.raw(sizeof kSpillMagic);
    if (std::memcmp(magic.data(), kSpillMagic, sizeof kSpillMagic) != 0) throw SpillError("bad spill segment magic");
    const std::uint64_t words = in.u64();
    if (words != kConfigWords) {
      throw SpillError("spill segment has " + std::to_string(words) + " words per configuration, build uses " +
                       std::to_string(kConfigWords));
    }
    const std::uint64_t count = in.u64();
    if (count > in.remaining() / kSpillRecordBytes || in.remaining() != count * kSpillRecordBytes) {
      throw SpillError("spill segment size does not match its record count");
    }
    std::vector<CoupledRecord> out(count);
    for (auto& r : out) {
      r.source_idx = in.u64();
      for (std::size_t w = 0; w < kConfigWords; ++w) r.target.set_word(w, in.u64());
      r.element = in.f64();
    }
    return out;
  } catch (const std::out_of_range&) {
    throw SpillError("truncated spill segment");
  }
}

SpillStore::SpillStore(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  path_ = dir / "segments.scispill";
  file_.open(path_, std::ios::binary | std::ios::in | std::ios::out | std::ios::trunc);
  if (!file_) throw SpillError("cannot open spill file '" + path_.string() + "'");
}

SpillStore::~SpillStore() {
  if (file_.is_open()) file_.close();
  if (!path_.empty()) {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
}

std::size_t SpillStore::seal(std::span<const CoupledRecord> records) {
  const std::vector<std::byte> bytes = encode_segment(records);
  std::lock_guard lock(mu_);
  Entry e{end_, bytes.size(), records.size(), binary::fnv1a(bytes)};
  if (file_backed()) {
    file_.seekp(static_cast<std::streamoff>(end_));
    file_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    file_.flush();
    if (!file_) throw SpillError("write to spill file '" + path_.string() + "' failed");
  } else {
    arena_.insert(arena_.end(), bytes.begin(), bytes.end());
  }
  end_ += bytes.size();
  directory_.push_back(e);
  return directory_.size() - 1;
}

std::vector<std::byte> SpillStore::read_raw(std::size_t id) const {
  std::lock_guard lock(mu_);
  if (id >= directory_.size()) throw SpillError("unknown spill segment " + std::to_string(id));
  const Entry& e = directory_[id];
  std::vector<std::byte> bytes(e.bytes);
  if (file_backed()) {
    file_.seekg(static_cast<std::streamoff>(e.offset));
    file_.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(e.bytes));
    if (!file_) throw SpillError("read from spill file '" + path_.string() + "' failed");
  } else {
    std::memcpy(bytes.data(), arena_.data() + e.offset, e.bytes);
  }
  if (binary::fnv1a(bytes) != e.checksum) {
    throw SpillError("checksum mismatch in spill segment " + std::to_string(id));
  }
  return bytes;
}

std::vector<CoupledRecord> SpillStore::read(std::size_t id) const { return decode_segment(read_raw(id)); }

std::size_t SpillStore::segment_count() const {
  std::lock_guard lock(mu_);
  return directory_.size();
}

SpillStore::Entry SpillStore::entry(std::size_t id) const {
  std::lock_guard lock(mu_);
  return directory_.at(id);
}

std::uint64_t SpillStore::total_bytes() const {
  std::lock_guard lock(mu_);
  return end_;
}

void SpillStore::clear() {
  std::lock_guard lock(mu_);
  directory_.clear();
  arena_.clear();
  end_ = 0;
}

std::vector<std::size_t> jit_reverse_index(std::span<const CoupledRecord> batch,
                                           std::span<const Configuration> unique_sorted) {
  std::vector<std::size_t> idx(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto it = std::lower_bound(unique_sorted.begin(), unique_sorted.end(), batch[k].target);
    if (it == unique_sorted.end() || *it != batch[k].target) {
      throw std::logic_error("reverse index: target of record " + std::to_string(k) +
                             " is missing from the unique set");
    }
    idx[k] = static_cast<std::size_t>(it - unique_sorted.begin());
  }
  return idx;
}

std::size_t StageTrace::batches(int stage) const {
  std::size_t n = 0;
  for (const auto& e : events_) {
    if (e.stage == stage && e.lane == Lane::kCompute) ++n;
  }
  return n;
}

double coupling_sum(std::span<const CoupledRecord> records, std::span<const std::size_t> idx,
                    std::span<const double> psi, std::span<const double> unique_amplitudes,
                    std::span<const std::uint8_t> unique_in_s) {
  double acc = 0.0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (!unique_in_s[idx[k]]) continue;
    if (records[k].source_idx >= psi.size()) throw std::logic_error("record source outside the selected space");
    acc += psi[records[k].source_idx] * records[k].element * unique_amplitudes[idx[k]];
  }
  return acc;
}

std::size_t pipeline_reserved_bytes(const ExcitationTables& tables, const IntegralStore& ints,
                                    std::size_t selected) {
  return table_footprint(tables) + ints.bytes() + selected * (sizeof(Configuration) + sizeof(double));
}

namespace {

struct Stage1Batch {
  std::size_t begin = 0, end = 0;
  MemoryTracker::Lease lease;
  std::vector<CoupledRecord> records;
};

struct Stage2Batch {
  std::size_t begin = 0, end = 0;
  MemoryTracker::Lease lease;
  std::vector<Configuration> configs;
  std::vector<double> amps;
  std::vector<std::uint8_t> in_s;
};

struct Stage3Batch {
  MemoryTracker::Lease lease;
  std::vector<CoupledRecord> records;
};

void merge_unique(std::vector<Configuration>& acc, std::vector<Configuration> batch) {
  std::sort(batch.begin(), batch.end());
  batch.erase(std::unique(batch.begin(), batch.end()), batch.end());
  std::vector<Configuration> out;
  out.reserve(acc.size() + batch.size());
  std::set_union(acc.begin(), acc.end(), batch.begin(), batch.end(), std::back_inserter(out));
  acc = std::move(out);
}

}  // namespace

PipelineResult run_pipeline(std::span<const Configuration> selected, std::span<const double> psi,
                            const ExcitationTables& tables, const IntegralStore& ints,
                            const PipelineConfig& config, const AmplitudeFn& amplitudes,
                            const SelectFn& select) {
  if (config.ranks < 1) throw std::invalid_argument("rank count must be positive");
  if (psi.size() != selected.size()) throw std::invalid_argument("amplitude vector does not cover the selected space");
  if (!std::is_sorted(selected.begin(), selected.end()) ||
      std::adjacent_find(selected.begin(), selected.end()) != selected.end()) {
    throw std::invalid_argument("selected space must be sorted and unique");
  }

  PipelineResult result;
  if (selected.empty()) {
    result.degenerate = true;
    result.energy = ints.e_core();
    return result;
  }

  const MemoryBudget budget{config.budget_bytes, pipeline_reserved_bytes(tables, ints, selected.size())};
  budget.working_bytes();  // throws when the reserved set alone does not fit
  MemoryTracker tracker(budget);
  std::unique_ptr<SpillStore> store = config.spill_dir.empty()
                                          ? std::make_unique<SpillStore>()
                                          : std::make_unique<SpillStore>(config.spill_dir);
  StageTrace& trace = result.trace;
  const auto ranks = static_cast<std::size_t>(config.ranks);

  GenOptions gen;
  gen.eps = config.eps;
  gen.threads = config.threads;

  // Stage 1: generate, local unique, spill.
  std::vector<std::vector<Configuration>> rank_unique(ranks);
  std::vector<std::vector<std::size_t>> rank_segments(ranks);
  for (std::size_t r = 0; r < ranks; ++r) {
    const std::size_t lo = selected.size() * r / ranks, hi = selected.size() * (r + 1) / ranks;
    const auto sources = selected.subspan(lo, hi - lo);
    const auto counts = count_coupled(sources, tables, ints, gen);
    std::vector<std::size_t> weights(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) weights[i] = counts[i] * kRecordWorkingBytes + sizeof(Configuration);
    const BatchPlan plan = plan_weighted_batches(weights, budget);
    const int rank = static_cast<int>(r);

    run_lanes(
        plan.batch_count, config.overlap,
        [&](std::size_t b) {
          return trace.timed(1, rank, b, Lane::kLoad, [&] {
            Stage1Batch p;
            std::tie(p.begin, p.end) = plan.range(b);
            std::size_t bytes = 0;
            for (std::size_t i = p.begin; i < p.end; ++i) bytes += weights[i];
            p.lease = tracker.acquire(bytes);
            return p;
          });
        },
        [&](std::size_t b, Stage1Batch& p) {
          trace.timed(1, rank, b, Lane::kCompute, [&] {
            GenOptions o = gen;
            o.index_base = lo + p.begin;
            p.records = generate_coupled(sources.subspan(p.begin, p.end - p.begin), tables, ints, o);
            result.generated += p.records.size();
            std::vector<Configuration> targets;
            targets.reserve(p.records.size());
            for (const auto& rec : p.records) targets.push_back(rec.target);
            merge_unique(rank_unique[r], std::move(targets));
          });
        },
        [&](std::size_t b, Stage1Batch&& p) {
          trace.timed(1, rank, b, Lane::kWriteback, [&] { rank_segments[r].push_back(store->seal(p.records)); });
        });
  }

  // Barrier 1: global de-duplication across ranks.
  dedup::DedupOptions dopts;
  dopts.samples = config.samples;
  auto dd = dedup::run_distributed_dedup(std::move(rank_unique), dopts);
  result.balance = dd.metrics;
  result.exchanged = dd.exchanged_items;
  std::vector<std::size_t> slice_offset(ranks + 1, 0);
  for (std::size_t r = 0; r < ranks; ++r) slice_offset[r + 1] = slice_offset[r] + dd.slices[r].size();
  result.unique.reserve(slice_offset[ranks]);
  for (auto& s : dd.slices) result.unique.insert(result.unique.end(), s.begin(), s.end());
  result.unique_amplitudes.assign(result.unique.size(), 0.0);
  std::vector<std::uint8_t> unique_in_s(result.unique.size(), 0);

  // Stage 2: amplitudes and selection over each rank's unique slice.
  constexpr std::size_t kStage2ItemBytes = sizeof(Configuration) + sizeof(double) + sizeof(std::uint8_t);
  for (std::size_t r = 0; r < ranks; ++r) {
    const std::span<const Configuration> slice(dd.slices[r]);
    const BatchPlan plan = plan_batches(slice.size(), kStage2ItemBytes, budget);
    const int rank = static_cast<int>(r);
    run_lanes(
        plan.batch_count, config.overlap,
        [&](std::size_t b) {
          return trace.timed(2, rank, b, Lane::kLoad, [&] {
            Stage2Batch p;
            std::tie(p.begin, p.end) = plan.range(b);
            p.lease = tracker.acquire((p.end - p.begin) * kStage2ItemBytes);
            p.configs.assign(slice.begin() + static_cast<std::ptrdiff_t>(p.begin),
                             slice.begin() + static_cast<std::ptrdiff_t>(p.end));
            return p;
          });
        },
        [&](std::size_t b, Stage2Batch& p) {
          trace.timed(2, rank, b, Lane::kCompute, [&] {
            p.amps.assign(p.configs.size(), 0.0);
            p.in_s.assign(p.configs.size(), 0);
            amplitudes(p.configs, p.amps);
            for (std::size_t k = 0; k < p.configs.size(); ++k) {
              p.in_s[k] = std::binary_search(selected.begin(), selected.end(), p.configs[k]) ? 1 : 0;
            }
            if (select) select(rank, p.configs, p.amps, p.in_s);
          });
        },
        [&](std::size_t b, Stage2Batch&& p) {
          trace.timed(2, rank, b, Lane::kWriteback, [&] {
            const std::size_t base = slice_offset[r] + p.begin;
            std::copy(p.amps.begin(), p.amps.end(), result.unique_amplitudes.begin() + static_cast<std::ptrdiff_t>(base));
            std::copy(p.in_s.begin(), p.in_s.end(), unique_in_s.begin() + static_cast<std::ptrdiff_t>(base));
          });
        });
  }
  dd.slices.clear();

  // Stage 3: stream the spilled records back and accumulate the energy.
  std::vector<std::vector<double>> partial(ranks);
  for (std::size_t r = 0; r < ranks; ++r) {
    const auto& segs = rank_segments[r];
    partial[r].assign(segs.size(), 0.0);
    const int rank = static_cast<int>(r);
    run_lanes(
        segs.size(), config.overlap,
        [&](std::size_t b) {
          return trace.timed(3, rank, b, Lane::kLoad, [&] {
            Stage3Batch p;
            p.lease = tracker.acquire(store->entry(segs[b]).records * kRecordWorkingBytes);
            p.records = store->read(segs[b]);
            return p;
          });
        },
        [&](std::size_t b, Stage3Batch& p) {
          trace.timed(3, rank, b, Lane::kCompute, [&] {
            const auto idx = jit_reverse_index(p.records, result.unique);
            partial[r][b] = coupling_sum(p.records, idx, psi, result.unique_amplitudes, unique_in_s);
          });
        },
        [&](std::size_t b, Stage3Batch&& p) {
          trace.timed(3, rank, b, Lane::kWriteback, [&] { p.records.clear(); });
        });
  }

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    num += psi[i] * psi[i] * diagonal_element(selected[i], ints);
    den += psi[i] * psi[i];
  }
  for (const auto& pr : partial) {
    for (double x : pr) num += x;
  }
  if (!(den > 0.0)) throw std::invalid_argument("selected-space amplitudes have zero norm");
  result.energy = num / den;

  trace.peak_working_bytes = tracker.peak();
  trace.reserved_bytes = budget.reserved_bytes;
  trace.budget_bytes = budget.budget_bytes;
  return result;
}

}  // namespace sci
