// memexec.hpp
//
// Budgeted batch execution. Every stage streams fixed-size batches through
// three lanes (load, compute, writeback); with overlap on, batch i+1 loads
// and batch i-1 writes back while batch i computes, so at most three batches
// are live. Working-buffer bytes are charged to a MemoryTracker whose peak
// must stay within the budget. Cold data lives in a SpillStore.
#ifndef SCI_MEMEXEC_HPP
#define SCI_MEMEXEC_HPP

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sci/configuration.hpp"
#include "sci/distdedup.hpp"
#include "sci/excitation_tables.hpp"
#include "sci/genkernel.hpp"
#include "sci/integrals.hpp"

namespace sci {

inline constexpr std::size_t kBufferMultiplicity = 3;
inline constexpr std::size_t kUnlimitedBudget = std::numeric_limits<std::size_t>::max();

class BudgetInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when instrumented usage exceeds the budget. Planning should make
/// this impossible, so it signals a bug.
class BudgetViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class SpillError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MemoryBudget {
  std::size_t budget_bytes = kUnlimitedBudget;
  std::size_t reserved_bytes = 0;

  /// Bytes left for working buffers, shared by kBufferMultiplicity live batches.
  std::size_t working_bytes() const;
  std::size_t per_batch_bytes() const { return working_bytes() / kBufferMultiplicity; }
};

struct BatchPlan {
  std::size_t items = 0;
  std::size_t batch_size = 0;
  std::size_t batch_count = 0;
  std::vector<std::size_t> offsets;  // batch_count + 1 item offsets

  std::pair<std::size_t, std::size_t> range(std::size_t b) const { return {offsets[b], offsets[b + 1]}; }
};

/// Largest uniform batch size B with reserved + 3 * B * item_bytes <= budget.
BatchPlan plan_batches(std::size_t items, std::size_t item_bytes, const MemoryBudget& budget);

/// Greedy contiguous batches for items of varying size, each batch holding at
/// most per_batch_bytes. batch_size reports the largest batch.
BatchPlan plan_weighted_batches(std::span<const std::size_t> item_bytes, const MemoryBudget& budget);

/// Thread-safe accounting of working-buffer bytes. Reserved bytes are fixed
/// for the tracker's lifetime and reported separately from the peak.
class MemoryTracker {
 public:
  class Lease {
   public:
    Lease() = default;
    Lease(MemoryTracker* owner, std::size_t bytes) : owner_(owner), bytes_(bytes) {}
    Lease(Lease&& o) noexcept : owner_(std::exchange(o.owner_, nullptr)), bytes_(std::exchange(o.bytes_, 0)) {}
    Lease& operator=(Lease&& o) noexcept {
      if (this != &o) {
        release();
        owner_ = std::exchange(o.owner_, nullptr);
        bytes_ = std::exchange(o.bytes_, 0);
      }
      return *this;
    }
    Lease(const Lease&) = delete;
    Lease& operator=(const Lease&) = delete;
    ~Lease() { release(); }

    std::size_t bytes() const noexcept { return bytes_; }
    void release() noexcept {
      if (owner_) owner_->give_back(bytes_);
      owner_ = nullptr;
      bytes_ = 0;
    }

   private:
    MemoryTracker* owner_ = nullptr;
    std::size_t bytes_ = 0;
  };

  explicit MemoryTracker(MemoryBudget budget) : budget_(budget) {}

  /// Throws BudgetViolation if reserved + in-use would exceed the budget.
  Lease acquire(std::size_t bytes);

  std::size_t in_use() const noexcept { return in_use_.load(); }
  std::size_t peak() const noexcept { return peak_.load(); }
  const MemoryBudget& budget() const noexcept { return budget_; }

 private:
  void give_back(std::size_t bytes) noexcept { in_use_.fetch_sub(bytes); }

  MemoryBudget budget_;
  std::atomic<std::size_t> in_use_{0};
  std::atomic<std::size_t> peak_{0};
};

// Spill segments.

inline constexpr char kSpillMagic[8] = {'S', 'C', 'I', 'S', 'P', 'L', '1', '\0'};
inline constexpr std::size_t kSpillHeaderBytes = 24;
inline constexpr std::size_t kSpillRecordBytes = 16 + 8 * kConfigWords;

std::vector<std::byte> encode_segment(std::span<const CoupledRecord> records);
std::vector<CoupledRecord> decode_segment(std::span<const std::byte> bytes);

/// Append-only store of sealed record segments, backed by an in-memory arena
/// or a single file in a spill directory.
class SpillStore {
 public:
  struct Entry {
    std::uint64_t offset = 0;
    std::uint64_t bytes = 0;
    std::uint64_t records = 0;
    std::uint64_t checksum = 0;
  };

  SpillStore() = default;  // in-memory
  explicit SpillStore(const std::filesystem::path& dir);
  SpillStore(const SpillStore&) = delete;
  SpillStore& operator=(const SpillStore&) = delete;
  ~SpillStore();

  std::size_t seal(std::span<const CoupledRecord> records);
  std::vector<std::byte> read_raw(std::size_t id) const;
  std::vector<CoupledRecord> read(std::size_t id) const;

  std::size_t segment_count() const;
  Entry entry(std::size_t id) const;
  std::uint64_t total_bytes() const;
  bool file_backed() const noexcept { return !path_.empty(); }
  void clear();

 private:
  mutable std::mutex mu_;
  std::vector<Entry> directory_;
  std::vector<std::byte> arena_;
  std::filesystem::path path_;
  mutable std::fstream file_;
  std::uint64_t end_ = 0;
};

/// Position of every batch target in unique_sorted. Throws std::logic_error
/// if a target is missing.
std::vector<std::size_t> jit_reverse_index(std::span<const CoupledRecord> batch,
                                           std::span<const Configuration> unique_sorted);

// Tracing and the lane executor.

enum class Lane { kLoad, kCompute, kWriteback };

struct LaneEvent {
  int stage = 0;
  int rank = 0;
  std::size_t batch = 0;
  Lane lane = Lane::kLoad;
  double begin = 0.0;  // seconds since trace start
  double end = 0.0;
};

class StageTrace {
 public:
  StageTrace() : start_(std::chrono::steady_clock::now()) {}
  StageTrace(const StageTrace& o) : start_(o.start_), events_(o.events_) {}
  StageTrace& operator=(const StageTrace& o) {
    start_ = o.start_;
    events_ = o.events_;
    return *this;
  }

  template <class Fn>
  auto timed(int stage, int rank, std::size_t batch, Lane lane, Fn&& fn) {
    const double t0 = now();
    struct Record {
      StageTrace* t;
      LaneEvent e;
      ~Record() {
        e.end = t->now();
        std::lock_guard lock(t->mu_);
        t->events_.push_back(e);
      }
    } rec{this, LaneEvent{stage, rank, batch, lane, t0, 0.0}};
    return fn();
  }

  const std::vector<LaneEvent>& events() const noexcept { return events_; }
  std::size_t batches(int stage) const;

  std::size_t peak_working_bytes = 0;
  std::size_t reserved_bytes = 0;
  std::size_t budget_bytes = kUnlimitedBudget;

 private:
  double now() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  std::chrono::steady_clock::time_point start_;
  std::mutex mu_;
  std::vector<LaneEvent> events_;
};

/// Streams n batches through load -> compute -> writeback. With overlap the
/// load of i+1 and the writeback of i-1 run beside compute(i); compute itself
/// is always sequential in batch order, so results do not depend on overlap.
template <class Load, class Compute, class Writeback>
void run_lanes(std::size_t n, bool overlap, Load&& load, Compute&& compute, Writeback&& writeback) {
  using Payload = decltype(load(std::size_t{0}));
  if (n == 0) return;
  if (!overlap) {
    for (std::size_t i = 0; i < n; ++i) {
      Payload p = load(i);
      compute(i, p);
      writeback(i, std::move(p));
    }
    return;
  }
  std::future<Payload> next = std::async(std::launch::async, [&] { return load(0); });
  std::future<void> pending;
  try {
    for (std::size_t i = 0; i < n; ++i) {
      Payload cur = next.get();
      if (i + 1 < n) next = std::async(std::launch::async, [&, j = i + 1] { return load(j); });
      compute(i, cur);
      if (pending.valid()) pending.get();
      pending = std::async(std::launch::async,
                           [&, i, p = std::move(cur)]() mutable { writeback(i, std::move(p)); });
    }
    pending.get();
  } catch (...) {
    if (next.valid()) next.wait();
    if (pending.valid()) pending.wait();
    throw;
  }
}

// The three-stage iteration pipeline.

/// Fills out[k] with the amplitude of batch[k].
using AmplitudeFn = std::function<void(std::span<const Configuration> batch, std::span<double> out)>;
/// Receives each Stage 2 batch after amplitude evaluation; in_s[k] != 0 marks
/// members of the selected space.
using SelectFn = std::function<void(int rank, std::span<const Configuration> batch,
                                    std::span<const double> amplitudes,
                                    std::span<const std::uint8_t> in_s)>;

struct PipelineConfig {
  int ranks = 1;
  std::size_t samples = 64;
  double eps = 0.0;
  std::size_t budget_bytes = kUnlimitedBudget;
  bool overlap = true;
  std::string spill_dir;  // empty: in-memory spill
  unsigned threads = 0;
};

struct PipelineResult {
  std::vector<Configuration> unique;     // global unique targets, sorted
  std::vector<double> unique_amplitudes;  // parallel to unique
  std::size_t generated = 0;
  std::size_t exchanged = 0;
  double energy = 0.0;  // variational energy of the selected space from the coupled stream
  bool degenerate = false;
  dedup::BalanceMetrics balance;
  StageTrace trace;
};

/// Reserved bytes for a run: tables, integrals, and the selected space with its amplitudes.
std::size_t pipeline_reserved_bytes(const ExcitationTables& tables, const IntegralStore& ints,
                                    std::size_t selected);

/// Bytes charged per coupled record: generation buffers during Stage 1, the
/// encoded segment, decoded records and reverse index during Stage 3.
inline constexpr std::size_t kRecordWorkingBytes = sizeof(CoupledRecord) + kSpillRecordBytes + sizeof(std::uint64_t);

/// Runs Stage 1 (generate + local unique + spill), barrier 1 (distributed
/// dedup), Stage 2 (amplitudes + selection), barrier 2, and Stage 3 (energy
/// via JIT reverse index) for the sorted selected space S with amplitudes psi.
PipelineResult run_pipeline(std::span<const Configuration> selected, std::span<const double> psi,
                            const ExcitationTables& tables, const IntegralStore& ints,
                            const PipelineConfig& config, const AmplitudeFn& amplitudes,
                            const SelectFn& select);

/// Sum of psi[source] * element * amp[target] over records whose target is in S,
/// in record order. idx is the reverse index into the unique set.
double coupling_sum(std::span<const CoupledRecord> records, std::span<const std::size_t> idx,
                    std::span<const double> psi, std::span<const double> unique_amplitudes,
                    std::span<const std::uint8_t> unique_in_s);

}  // namespace sci

#endif  // SCI_MEMEXEC_HPP
