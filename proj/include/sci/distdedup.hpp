// distdedup.hpp
//
// Sort-based global de-duplication over R logical ranks by regular sampling:
//   1. every rank sorts and locally uniques its keys, then takes S pivots at
//      fixed intervals; the pivots are gathered on the root rank;
//   2. the root sorts the pivots, picks R-1 equi-spaced splitters and
//      broadcasts them; each rank binary-searches its partition bounds;
//   3. one all-to-all exchange sends partition j to rank j, which merges the
//      received sorted runs and drops duplicates.
// Ranks run on threads and talk only through the Fabric collectives.
#ifndef SCI_DISTDEDUP_HPP
#define SCI_DISTDEDUP_HPP

#include <algorithm>
#include <cassert>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sci/configuration.hpp"

namespace sci::dedup {

class FabricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class Key>
struct RankBuffer {
  int rank = 0;
  std::vector<Key> data;
};

template <class Key>
struct SplitterSet {
  std::vector<Key> splitters;  // R-1 keys; partition j holds splitters[j-1] <= k < splitters[j]
};

struct BalanceMetrics {
  std::vector<std::size_t> per_rank_counts;
  double max_min_ratio = 1.0;
  bool degenerate = false;  // some rank received nothing; ratio reported as infinity
  double cv = 0.0;
  double throughput_items_per_sec = 0.0;
};

BalanceMetrics balance_metrics(std::span<const std::size_t> per_rank_counts, double elapsed_sec,
                               std::size_t total_in);

/// Pivots at positions k * max(1, len / S), clamped to len - 1, with repeated
/// positions dropped.
template <class Key>
std::vector<Key> regular_sample(std::span<const Key> sorted, std::size_t samples) {
  assert(std::is_sorted(sorted.begin(), sorted.end()));
  std::vector<Key> out;
  if (sorted.empty() || samples == 0) return out;
  const std::size_t step = std::max<std::size_t>(1, sorted.size() / samples);
  std::size_t last = std::numeric_limits<std::size_t>::max();
  for (std::size_t k = 0; k < samples; ++k) {
    const std::size_t idx = std::min(k * step, sorted.size() - 1);
    if (idx == last) continue;
    out.push_back(sorted[idx]);
    last = idx;
  }
  return out;
}

/// Sorts the gathered samples and takes the elements at j * (len / R), j = 1..R-1.
template <class Key>
SplitterSet<Key> compute_splitters(std::vector<Key> samples, int ranks) {
  SplitterSet<Key> sp;
  if (ranks <= 1) return sp;
  std::sort(samples.begin(), samples.end());
  const std::size_t stride = samples.size() / static_cast<std::size_t>(ranks);
  for (int j = 1; j < ranks; ++j) {
    if (samples.empty()) {
      sp.splitters.push_back(Key{});
    } else {
      sp.splitters.push_back(samples[std::min(samples.size() - 1, static_cast<std::size_t>(j) * stride)]);
    }
  }
  return sp;
}

/// R + 1 offsets; segment [o_j, o_{j+1}) is destined for rank j.
template <class Key>
std::vector<std::size_t> partition_bounds(std::span<const Key> sorted, const SplitterSet<Key>& sp) {
  std::vector<std::size_t> offsets;
  offsets.reserve(sp.splitters.size() + 2);
  offsets.push_back(0);
  for (const Key& s : sp.splitters) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), s);
    offsets.push_back(std::max(offsets.back(), static_cast<std::size_t>(it - sorted.begin())));
  }
  offsets.push_back(sorted.size());
  return offsets;
}

/// In-process collective fabric for R ranks. Every collective is a full
/// barrier; abort() wakes all waiters with FabricError.
template <class Key>
class Fabric {
 public:
  explicit Fabric(int ranks)
      : ranks_(ranks), slots_(static_cast<std::size_t>(ranks)),
        mailbox_(static_cast<std::size_t>(ranks), std::vector<std::vector<Key>>(static_cast<std::size_t>(ranks))) {}

  int ranks() const noexcept { return ranks_; }

  void abort(const std::string& reason) {
    std::lock_guard lock(mu_);
    if (!aborted_) {
      aborted_ = true;
      reason_ = reason;
    }
    cv_.notify_all();
  }

  void barrier() {
    std::unique_lock lock(mu_);
    check();
    const std::uint64_t gen = generation_;
    if (++arrived_ == ranks_) {
      arrived_ = 0;
      ++generation_;
      cv_.notify_all();
      return;
    }
    cv_.wait(lock, [&] { return generation_ != gen || aborted_; });
    check();
  }

  /// Root receives every rank's payload in rank order; others receive nothing.
  std::vector<std::vector<Key>> gather(int rank, std::vector<Key> payload, int root) {
    slots_[static_cast<std::size_t>(rank)] = std::move(payload);
    barrier();
    std::vector<std::vector<Key>> out;
    if (rank == root) out = std::move(slots_);
    barrier();
    if (rank == root) slots_.assign(static_cast<std::size_t>(ranks_), {});
    barrier();
    return out;
  }

  std::vector<Key> broadcast(int rank, std::vector<Key> payload, int root) {
    if (rank == root) slots_[static_cast<std::size_t>(root)] = std::move(payload);
    barrier();
    std::vector<Key> out = slots_[static_cast<std::size_t>(root)];
    barrier();
    return out;
  }

  /// outgoing[j] goes to rank j; returns incoming[i] from rank i.
  std::vector<std::vector<Key>> all_to_all(int rank, std::vector<std::vector<Key>> outgoing) {
    for (int j = 0; j < ranks_; ++j) {
      mailbox_[static_cast<std::size_t>(j)][static_cast<std::size_t>(rank)] =
          std::move(outgoing[static_cast<std::size_t>(j)]);
    }
    barrier();
    std::vector<std::vector<Key>> incoming = std::move(mailbox_[static_cast<std::size_t>(rank)]);
    mailbox_[static_cast<std::size_t>(rank)].assign(static_cast<std::size_t>(ranks_), {});
    barrier();
    return incoming;
  }

 private:
  void check() const {
    if (aborted_) throw FabricError("fabric aborted: " + reason_);
  }

  int ranks_;
  std::mutex mu_;
  std::condition_variable cv_;
  int arrived_ = 0;
  std::uint64_t generation_ = 0;
  bool aborted_ = false;
  std::string reason_;
  std::vector<std::vector<Key>> slots_;
  std::vector<std::vector<std::vector<Key>>> mailbox_;  // [dest][src]
};

struct DedupOptions {
  std::size_t samples = 64;        // S, pivots per rank
  std::optional<int> failing_rank; // test hook: this rank drops out before the exchange
};

template <class Key>
struct DedupResult {
  std::vector<std::vector<Key>> slices;  // per rank, sorted, disjoint, rank-ordered
  BalanceMetrics metrics;
  std::size_t exchanged_items = 0;       // keys sent to a rank other than their owner
  std::size_t local_unique_items = 0;    // sum of per-rank local-unique sizes
};

/// One global de-duplication round. All-or-nothing: a rank failure aborts
/// every rank and throws FabricError.
template <class Key>
DedupResult<Key> run_distributed_dedup(std::vector<std::vector<Key>> buffers,
                                       const DedupOptions& opts = {}) {
  const int ranks = static_cast<int>(buffers.size());
  if (ranks < 1) throw std::invalid_argument("distributed dedup needs at least one rank");
  if (opts.samples < 1) throw std::invalid_argument("sample count must be positive");

  std::size_t total_in = 0;
  for (const auto& b : buffers) total_in += b.size();

  Fabric<Key> fabric(ranks);
  DedupResult<Key> result;
  result.slices.resize(static_cast<std::size_t>(ranks));
  std::vector<std::size_t> sent(static_cast<std::size_t>(ranks), 0);
  std::vector<std::size_t> local(static_cast<std::size_t>(ranks), 0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(ranks));
  constexpr int kRoot = 0;

  const auto start = std::chrono::steady_clock::now();
  auto rank_main = [&](int rank) {
    const auto r = static_cast<std::size_t>(rank);
    try {
      std::vector<Key> data = std::move(buffers[r]);
      std::sort(data.begin(), data.end());
      data.erase(std::unique(data.begin(), data.end()), data.end());
      local[r] = data.size();

      auto gathered = fabric.gather(rank, regular_sample<Key>(data, opts.samples), kRoot);
      std::vector<Key> splitters;
      if (rank == kRoot) {
        std::vector<Key> all;
        for (auto& g : gathered) all.insert(all.end(), g.begin(), g.end());
        splitters = compute_splitters(std::move(all), ranks).splitters;
      }
      SplitterSet<Key> sp{fabric.broadcast(rank, std::move(splitters), kRoot)};

      if (opts.failing_rank && *opts.failing_rank == rank) {
        throw FabricError("rank " + std::to_string(rank) + " dropped out");
      }

      const auto bounds = partition_bounds<Key>(data, sp);
      std::vector<std::vector<Key>> outgoing(static_cast<std::size_t>(ranks));
      for (std::size_t j = 0; j < outgoing.size(); ++j) {
        outgoing[j].assign(data.begin() + static_cast<std::ptrdiff_t>(bounds[j]),
                           data.begin() + static_cast<std::ptrdiff_t>(bounds[j + 1]));
        if (j != r) sent[r] += outgoing[j].size();
      }
      std::vector<Key>().swap(data);

      auto incoming = fabric.all_to_all(rank, std::move(outgoing));
      std::vector<Key> merged;
      std::size_t total = 0;
      for (const auto& run : incoming) total += run.size();
      merged.reserve(total);
      for (auto& run : incoming) {
        const auto mid = merged.size();
        merged.insert(merged.end(), run.begin(), run.end());
        std::inplace_merge(merged.begin(), merged.begin() + static_cast<std::ptrdiff_t>(mid),
                           merged.end());
      }
      merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
      result.slices[r] = std::move(merged);
    } catch (...) {
      errors[r] = std::current_exception();
      fabric.abort("rank " + std::to_string(rank) + " failed");
    }
  };

  {
    std::vector<std::jthread> threads;
    threads.reserve(static_cast<std::size_t>(ranks));
    for (int rank = 0; rank < ranks; ++rank) threads.emplace_back(rank_main, rank);
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  // Report the originating failure rather than the abort it triggered.
  std::exception_ptr first;
  for (auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const FabricError& fe) {
      if (std::string(fe.what()).rfind("fabric aborted", 0) != 0) {
        first = e;
        break;
      }
      if (!first) first = e;
    } catch (...) {
      first = e;
      break;
    }
  }
  if (first) {
    try {
      std::rethrow_exception(first);
    } catch (const std::exception& e) {
      throw FabricError(std::string("distributed dedup aborted, no partial results: ") + e.what());
    }
  }

  std::vector<std::size_t> counts;
  for (const auto& s : result.slices) counts.push_back(s.size());
  result.metrics = balance_metrics(counts, elapsed, total_in);
  for (std::size_t r = 0; r < sent.size(); ++r) {
    result.exchanged_items += sent[r];
    result.local_unique_items += local[r];
  }
  return result;
}

// Benchmark and test key streams.

struct KeyDistribution {
  enum class Kind { kUniform, kZipf } kind = Kind::kUniform;
  double theta = 1.1;
};

/// Parses "uniform" or "zipf:THETA".
KeyDistribution parse_distribution(const std::string& text);

/// N 128-bit keys. Zipf draws ranks over a universe of N items with
/// P(rank k) ~ 1 / k^theta and maps each rank to a fixed pseudo-random key.
std::vector<Configuration> generate_keys(const KeyDistribution& dist, std::size_t n,
                                         std::uint64_t seed);

/// Splits keys into R contiguous per-rank buffers.
std::vector<std::vector<Configuration>> split_among_ranks(const std::vector<Configuration>& keys,
                                                          int ranks);

}  // namespace sci::dedup

#endif  // SCI_DISTDEDUP_HPP
