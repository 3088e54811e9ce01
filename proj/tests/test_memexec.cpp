#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <thread>

#include "sci/fixtures.hpp"
#include "sci/memexec.hpp"
#include "sci/oracle.hpp"
#include "sci/solver.hpp"

using namespace sci;

namespace {

std::vector<CoupledRecord> random_records(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::vector<CoupledRecord> out(n);
  for (auto& r : out) {
    r.source_idx = rng() % 1000;
    for (std::size_t w = 0; w < kConfigWords; ++w) r.target.set_word(w, rng());
    r.element = std::ldexp(static_cast<double>(rng() >> 11), -53) - 0.5;
  }
  return out;
}

struct PipelineFixture {
  Fcidump f;
  ExcitationTables tables;
  std::vector<Configuration> space;
  std::vector<double> psi;
  double energy;

  PipelineFixture(std::uint64_t seed, int m, int n, std::size_t size)
      : f(random_system(seed, m, n, 0.5)), tables(build_tables(f.integrals, f.space)) {
    auto basis = oracle::sector_basis(f.space);
    std::mt19937_64 rng(seed);
    std::shuffle(basis.begin(), basis.end(), rng);
    basis.resize(std::min(size, basis.size()));
    std::sort(basis.begin(), basis.end());
    space = basis;
    const auto sol = subspace_eigensolve(space, reference_config(f.space), tables, f.integrals);
    psi.assign(sol.psi.data(), sol.psi.data() + sol.psi.size());
    energy = sol.energy;
  }

  PipelineResult run(const PipelineConfig& pc) const {
    const PerturbativeOracle oracle(space, psi, energy, tables, f.integrals);
    return run_pipeline(
        space, psi, tables, f.integrals, pc,
        [&](std::span<const Configuration> b, std::span<double> out) { oracle.estimate(b, out); }, {});
  }
};

}  // namespace

TEST(PlanBatches, CeilingSplit) {
  const MemoryBudget b{100 + 3 * 4 * 10, 100};
  const BatchPlan p = plan_batches(10, 10, b);
  EXPECT_EQ(p.batch_size, 4u);
  EXPECT_EQ(p.batch_count, 3u);
  EXPECT_EQ(p.offsets, (std::vector<std::size_t>{0, 4, 8, 10}));
}

TEST(PlanBatches, HugeBudgetIsOneBatch) {
  const BatchPlan p = plan_batches(1000, 64, MemoryBudget{});
  EXPECT_EQ(p.batch_size, 1000u);
  EXPECT_EQ(p.batch_count, 1u);
  EXPECT_EQ(plan_batches(0, 64, MemoryBudget{}).batch_count, 0u);
}

TEST(PlanBatches, InfeasibleBudget) {
  EXPECT_THROW(plan_batches(10, 10, MemoryBudget{100 + 29, 100}), BudgetInfeasible);
  EXPECT_NO_THROW(plan_batches(10, 10, MemoryBudget{100 + 30, 100}));
  EXPECT_THROW(plan_batches(10, 10, MemoryBudget{100, 100}), BudgetInfeasible);
}

TEST(PlanBatches, WeightedGreedy) {
  const std::vector<std::size_t> w{5, 5, 5, 12, 1, 1};
  const BatchPlan p = plan_weighted_batches(w, MemoryBudget{36, 0});
  EXPECT_EQ(p.offsets, (std::vector<std::size_t>{0, 2, 3, 4, 6}));
  EXPECT_EQ(p.batch_size, 2u);
  EXPECT_THROW(plan_weighted_batches(std::vector<std::size_t>{13}, MemoryBudget{36, 0}), BudgetInfeasible);
}

TEST(MemoryTracker, PeakAndViolation) {
  MemoryTracker t(MemoryBudget{100, 20});
  {
    auto a = t.acquire(50);
    auto b = t.acquire(30);
    EXPECT_EQ(t.in_use(), 80u);
    EXPECT_THROW(t.acquire(1), BudgetViolation);
  }
  EXPECT_EQ(t.in_use(), 0u);
  EXPECT_EQ(t.peak(), 80u);
}

TEST(SpillStore, RoundTripInMemoryAndFile) {
  const auto dir = std::filesystem::temp_directory_path() / "sci_spill_test";
  for (bool file : {false, true}) {
    SpillStore store = file ? SpillStore(dir) : SpillStore();
    std::vector<std::vector<CoupledRecord>> segs;
    for (std::uint64_t s = 0; s < 5; ++s) segs.push_back(random_records(s, 100 * s));
    for (const auto& seg : segs) store.seal(seg);
    ASSERT_EQ(store.segment_count(), segs.size());
    for (std::size_t id = 0; id < segs.size(); ++id) {
      EXPECT_EQ(store.read(id), segs[id]);
      EXPECT_EQ(store.read_raw(id), encode_segment(segs[id]));
      EXPECT_EQ(store.entry(id).records, segs[id].size());
    }
    EXPECT_THROW(store.read(99), SpillError);
  }
  std::filesystem::remove_all(dir);
}

TEST(SpillStore, SegmentFormat) {
  const std::vector<CoupledRecord> recs = random_records(1, 3);
  const auto bytes = encode_segment(recs);
  ASSERT_EQ(bytes.size(), kSpillHeaderBytes + 3 * kSpillRecordBytes);
  EXPECT_EQ(std::memcmp(bytes.data(), "SCISPL1\0", 8), 0);
  EXPECT_EQ(static_cast<unsigned>(bytes[8]), kConfigWords);
  EXPECT_EQ(static_cast<unsigned>(bytes[16]), 3u);
  EXPECT_EQ(decode_segment(bytes), recs);
  auto bad = bytes;
  bad.pop_back();
  EXPECT_THROW(decode_segment(bad), SpillError);
  bad = bytes;
  bad[0] = std::byte{'X'};
  EXPECT_THROW(decode_segment(bad), SpillError);
}

TEST(JitReverseIndex, Examples) {
  std::vector<Configuration> unique;
  for (std::uint64_t v : {3u, 7u, 9u, 20u}) {
    Configuration c;
    c.set_word(0, v);
    unique.push_back(c);
  }
  std::vector<CoupledRecord> batch;
  for (const auto& u : unique) batch.push_back({0, u, 1.0});
  EXPECT_EQ(jit_reverse_index(batch, unique), (std::vector<std::size_t>{0, 1, 2, 3}));
  batch = {{0, unique[2], 0.0}, {1, unique[2], 0.0}, {1, unique[0], 0.0}};
  EXPECT_EQ(jit_reverse_index(batch, unique), (std::vector<std::size_t>{2, 2, 0}));
  Configuration missing;
  missing.set_word(0, 8);
  batch = {{0, missing, 0.0}};
  EXPECT_THROW(jit_reverse_index(batch, unique), std::logic_error);

  std::mt19937_64 rng(5);
  batch.clear();
  for (int k = 0; k < 200; ++k) batch.push_back({0, unique[rng() % unique.size()], 0.0});
  const auto idx = jit_reverse_index(batch, unique);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    std::size_t linear = 0;
    while (unique[linear] != batch[k].target) ++linear;
    EXPECT_EQ(idx[k], linear);
  }
}

TEST(RunLanes, OverlapKeepsComputeOrderAndBoundsLiveBatches) {
  for (bool overlap : {false, true}) {
    std::atomic<int> live{0}, max_live{0};
    std::vector<std::size_t> order;
    std::vector<int> written(20, 0);
    run_lanes(
        20, overlap,
        [&](std::size_t i) {
          const int now = ++live;
          int prev = max_live.load();
          while (now > prev && !max_live.compare_exchange_weak(prev, now)) {
          }
          std::this_thread::sleep_for(std::chrono::microseconds(200));
          return static_cast<int>(i) * 2;
        },
        [&](std::size_t i, int& p) {
          order.push_back(i);
          p += 1;
        },
        [&](std::size_t i, int&& p) {
          written[i] = p;
          --live;
        });
    for (std::size_t i = 0; i < order.size(); ++i) EXPECT_EQ(order[i], i);
    for (int i = 0; i < 20; ++i) EXPECT_EQ(written[static_cast<std::size_t>(i)], 2 * i + 1);
    EXPECT_LE(max_live.load(), static_cast<int>(kBufferMultiplicity));
  }
}

TEST(RunLanes, PropagatesErrors) {
  auto fail = [](bool overlap) {
    run_lanes(
        5, overlap, [](std::size_t i) { return i; },
        [](std::size_t i, std::size_t&) {
          if (i == 3) throw std::runtime_error("boom");
        },
        [](std::size_t, std::size_t&&) {});
  };
  EXPECT_THROW(fail(false), std::runtime_error);
  EXPECT_THROW(fail(true), std::runtime_error);
}

TEST(Pipeline, EmptySourceSetIsDegenerate) {
  const Fcidump f = random_system(1, 8, 4, 0.5);
  const auto t = build_tables(f.integrals, f.space);
  const auto r = run_pipeline({}, {}, t, f.integrals, {}, {}, {});
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.energy, f.integrals.e_core());
  EXPECT_EQ(r.trace.events().size(), 0u);
}

TEST(Pipeline, EnergyMatchesEigensolver) {
  const PipelineFixture fx(11, 12, 6, 120);
  PipelineConfig pc;
  pc.ranks = 3;
  const auto r = fx.run(pc);
  EXPECT_NEAR(r.energy, fx.energy, 1e-10);
  EXPECT_EQ(r.unique, oracle::naive_dedup(std::vector<std::vector<Configuration>>{[&] {
              std::vector<Configuration> t;
              for (const auto& rec : generate_coupled(fx.space, fx.tables, fx.f.integrals)) t.push_back(rec.target);
              return t;
            }()}));
}

TEST(PipelineProperty, OutOfCoreMatchesInCoreWithinBudget) {
  const auto dir = std::filesystem::temp_directory_path() / "sci_pipeline_spill";
  for (std::uint64_t seed : {2u, 3u}) {
    const PipelineFixture fx(seed, 12, 6, 150);
    for (int ranks : {1, 2, 4}) {
      PipelineConfig pc;
      pc.ranks = ranks;
      const auto in_core = fx.run(pc);
      ASSERT_EQ(in_core.trace.batches(1), static_cast<std::size_t>(ranks));

      pc.budget_bytes = in_core.trace.reserved_bytes + in_core.trace.peak_working_bytes / 8;
      for (bool overlap : {true, false}) {
        pc.overlap = overlap;
        pc.spill_dir = overlap ? dir.string() : "";
        const auto ooc = fx.run(pc);
        EXPECT_GT(ooc.trace.batches(1), static_cast<std::size_t>(ranks));
        EXPECT_LE(ooc.trace.reserved_bytes + ooc.trace.peak_working_bytes, pc.budget_bytes);
        EXPECT_EQ(ooc.unique, in_core.unique);
        EXPECT_EQ(ooc.unique_amplitudes, in_core.unique_amplitudes);
        EXPECT_EQ(ooc.generated, in_core.generated);
        EXPECT_NEAR(ooc.energy, in_core.energy, 1e-12);
      }
    }
  }
  std::filesystem::remove_all(dir);
}

TEST(PipelineProperty, OverlapDoesNotChangeOutputs) {
  const PipelineFixture fx(4, 12, 6, 100);
  PipelineConfig pc;
  pc.ranks = 2;
  pc.budget_bytes = fx.run(pc).trace.reserved_bytes + 20000;
  pc.overlap = true;
  const auto a = fx.run(pc);
  pc.overlap = false;
  const auto b = fx.run(pc);
  EXPECT_EQ(a.unique, b.unique);
  EXPECT_EQ(a.unique_amplitudes, b.unique_amplitudes);
  EXPECT_EQ(a.energy, b.energy);
}

TEST(Pipeline, InfeasibleBudgetIsReported) {
  const PipelineFixture fx(5, 10, 4, 20);
  PipelineConfig pc;
  pc.budget_bytes = 1000;
  EXPECT_THROW(fx.run(pc), BudgetInfeasible);
}
