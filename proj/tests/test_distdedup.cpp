#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sci/distdedup.hpp"
#include "sci/oracle.hpp"

using namespace sci;
using namespace sci::dedup;

namespace {

std::vector<int> iota_vec(int lo, int hi) {
  std::vector<int> v;
  for (int i = lo; i <= hi; ++i) v.push_back(i);
  return v;
}

template <class Key>
std::vector<Key> flatten(const std::vector<std::vector<Key>>& slices) {
  std::vector<Key> all;
  for (const auto& s : slices) all.insert(all.end(), s.begin(), s.end());
  return all;
}

template <class Key>
void expect_disjoint_ordered(const std::vector<std::vector<Key>>& slices) {
  const Key* prev = nullptr;
  for (const auto& s : slices) {
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
    if (s.empty()) continue;
    if (prev) EXPECT_LT(*prev, s.front());
    prev = &s.back();
  }
}

}  // namespace

TEST(RegularSample, FixedIntervals) {
  const auto v = iota_vec(10, 17);
  EXPECT_EQ(regular_sample<int>(v, 4), (std::vector<int>{10, 12, 14, 16}));
  EXPECT_TRUE(regular_sample<int>(std::vector<int>{}, 4).empty());
}

TEST(RegularSample, ShortBufferClampsAndDropsRepeatedPositions) {
  const std::vector<int> v{5, 6, 7};
  EXPECT_EQ(regular_sample<int>(v, 4), (std::vector<int>{5, 6, 7}));
  EXPECT_EQ(regular_sample<int>(std::vector<int>{9}, 64), (std::vector<int>{9}));
}

TEST(ComputeSplitters, EquiDistant) {
  EXPECT_EQ(compute_splitters(iota_vec(1, 8), 2).splitters, (std::vector<int>{5}));
  EXPECT_TRUE(compute_splitters(iota_vec(1, 8), 1).splitters.empty());
  EXPECT_EQ(compute_splitters(std::vector<int>(10, 7), 4).splitters, (std::vector<int>{7, 7, 7}));
  EXPECT_EQ(compute_splitters(std::vector<int>{8, 3, 1, 6, 2, 7, 5, 4}, 4).splitters,
            (std::vector<int>{3, 5, 7}));
}

TEST(PartitionBounds, LowerBoundRule) {
  const std::vector<int> v{1, 2, 3, 4};
  EXPECT_EQ(partition_bounds<int>(v, SplitterSet<int>{{3}}), (std::vector<std::size_t>{0, 2, 4}));
  EXPECT_EQ(partition_bounds<int>(std::vector<int>{}, SplitterSet<int>{{3, 5}}),
            (std::vector<std::size_t>{0, 0, 0, 0}));
  EXPECT_EQ(partition_bounds<int>(v, SplitterSet<int>{{10, 20}}), (std::vector<std::size_t>{0, 4, 4, 4}));
  EXPECT_EQ(partition_bounds<int>(v, SplitterSet<int>{{7, 7}}), (std::vector<std::size_t>{0, 4, 4, 4}));
}

TEST(DistributedDedup, SmallExamples) {
  auto r = run_distributed_dedup<int>({{1, 2, 2}, {2, 3}});
  EXPECT_EQ(flatten(r.slices), (std::vector<int>{1, 2, 3}));
  expect_disjoint_ordered(r.slices);

  r = run_distributed_dedup<int>({{4, 1, 4, 3, 1}});
  ASSERT_EQ(r.slices.size(), 1u);
  EXPECT_EQ(r.slices[0], (std::vector<int>{1, 3, 4}));
  EXPECT_EQ(r.exchanged_items, 0u);

  r = run_distributed_dedup<int>({{}, {}, {}});
  EXPECT_TRUE(flatten(r.slices).empty());
  EXPECT_FALSE(r.metrics.degenerate);
}

TEST(DistributedDedup, RejectsBadArguments) {
  EXPECT_THROW(run_distributed_dedup<int>({}), std::invalid_argument);
  DedupOptions o;
  o.samples = 0;
  EXPECT_THROW(run_distributed_dedup<int>({{1}}, o), std::invalid_argument);
}

TEST(DistributedDedup, RankFailureAbortsRound) {
  DedupOptions o;
  o.failing_rank = 2;
  std::vector<std::vector<int>> bufs(4, iota_vec(0, 100));
  try {
    run_distributed_dedup<int>(bufs, o);
    FAIL() << "expected abort";
  } catch (const FabricError& e) {
    EXPECT_NE(std::string(e.what()).find("rank 2 dropped out"), std::string::npos);
  }
}

TEST(DistributedDedupProperty, ExhaustiveTinyAlphabet) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const int ranks = 1 + static_cast<int>(rng() % 6);
    std::vector<std::vector<int>> bufs(static_cast<std::size_t>(ranks));
    for (auto& b : bufs) {
      const std::size_t len = rng() % 12;
      for (std::size_t i = 0; i < len; ++i) b.push_back(static_cast<int>(rng() % 5));
    }
    DedupOptions o;
    o.samples = 1 + rng() % 5;
    const auto r = run_distributed_dedup(bufs, o);
    ASSERT_EQ(flatten(r.slices), oracle::naive_dedup(bufs));
    expect_disjoint_ordered(r.slices);
    ASSERT_LE(r.exchanged_items, r.local_unique_items);
  }
}

TEST(DistributedDedupProperty, MatchesOracleAcrossRankCounts) {
  const auto keys = generate_keys(parse_distribution("zipf:1.1"), 60000, 17);
  const auto expected = oracle::naive_dedup<Configuration>({keys});
  for (int ranks : {1, 2, 4, 8, 16}) {
    const auto r = run_distributed_dedup(split_among_ranks(keys, ranks));
    EXPECT_EQ(flatten(r.slices), expected) << "R=" << ranks;
    expect_disjoint_ordered(r.slices);
    EXPECT_LE(r.exchanged_items, r.local_unique_items);
  }
}

TEST(DistributedDedupProperty, DeterministicOutput) {
  const auto keys = generate_keys(parse_distribution("uniform"), 20000, 3);
  const auto a = run_distributed_dedup(split_among_ranks(keys, 8));
  for (int rep = 0; rep < 5; ++rep) {
    const auto b = run_distributed_dedup(split_among_ranks(keys, 8));
    EXPECT_EQ(a.slices, b.slices);
    EXPECT_EQ(a.metrics.per_rank_counts, b.metrics.per_rank_counts);
    EXPECT_EQ(a.exchanged_items, b.exchanged_items);
  }
}

TEST(BalanceMetrics, Examples) {
  std::vector<std::size_t> c{100, 100, 100, 100};
  auto m = balance_metrics(c, 2.0, 400);
  EXPECT_DOUBLE_EQ(m.max_min_ratio, 1.0);
  EXPECT_DOUBLE_EQ(m.cv, 0.0);
  EXPECT_DOUBLE_EQ(m.throughput_items_per_sec, 200.0);

  c = {90, 110};
  m = balance_metrics(c, 1.0, 200);
  EXPECT_NEAR(m.max_min_ratio, 110.0 / 90.0, 1e-12);
  EXPECT_NEAR(m.cv, 0.1, 1e-12);

  c = {0, 10};
  m = balance_metrics(c, 1.0, 10);
  EXPECT_TRUE(m.degenerate);
  EXPECT_TRUE(std::isinf(m.max_min_ratio));

  EXPECT_THROW(balance_metrics(std::span<const std::size_t>{}, 1.0, 0), std::invalid_argument);
}

TEST(KeyDistribution, Parsing) {
  EXPECT_EQ(parse_distribution("uniform").kind, KeyDistribution::Kind::kUniform);
  const auto z = parse_distribution("zipf:1.1");
  EXPECT_EQ(z.kind, KeyDistribution::Kind::kZipf);
  EXPECT_DOUBLE_EQ(z.theta, 1.1);
  EXPECT_THROW(parse_distribution("zipf:"), std::invalid_argument);
  EXPECT_THROW(parse_distribution("zipf:-1"), std::invalid_argument);
  EXPECT_THROW(parse_distribution("normal"), std::invalid_argument);
}
