#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <cstring>
#include <random>

#include "sci/fixtures.hpp"
#include "sci/genkernel.hpp"
#include "sci/oracle.hpp"

using namespace sci;

namespace {

std::vector<Configuration> random_sources(std::uint64_t seed, const OrbitalSpace& space,
                                          std::size_t count) {
  const auto basis = oracle::sector_basis(space);
  std::mt19937_64 rng(seed);
  std::vector<Configuration> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(basis[rng() % basis.size()]);
  return out;
}

std::uint64_t binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

}  // namespace

TEST(VirtualSpace, CountsFollowElectronAndRowWidths) {
  const VirtualSpace vs = virtual_space(14, 27, 354);
  EXPECT_EQ(vs.n_single, 378u);
  EXPECT_EQ(vs.n_double, 32214u);
  EXPECT_EQ(virtual_space(1, 5, 9).n_double, 0u);
}

TEST(VirtualSpace, RejectsMismatchedTables) {
  const IntegralStore ints = random_integrals(1, 3, 0.5);
  const ExcitationTables t = build_tables(ints, OrbitalSpace{6, 2, 0});
  EXPECT_THROW(virtual_space(OrbitalSpace{8, 2, 0}, t), std::invalid_argument);
}

TEST(VirtualSpace, DecomposeBoundaries) {
  const VirtualSpace vs = virtual_space(4, 3, 5);
  EXPECT_EQ(decompose_virtual_id(0, vs), (VirtualId{ExcitationKind::kSingle, 0, 0}));
  EXPECT_EQ(decompose_virtual_id(vs.n_single - 1, vs), (VirtualId{ExcitationKind::kSingle, 3, 2}));
  EXPECT_EQ(decompose_virtual_id(vs.n_single, vs), (VirtualId{ExcitationKind::kDouble, 0, 0}));
  EXPECT_EQ(decompose_virtual_id(vs.n_single + 5, vs), (VirtualId{ExcitationKind::kDouble, 1, 0}));
  EXPECT_THROW(decompose_virtual_id(vs.total(), vs), std::out_of_range);
}

TEST(GenerateCoupled, SingleElectronTwoSpatialOrbitals) {
  IntegralStore ints(2);
  ints.set_h(0, 1, 0.3);
  const OrbitalSpace space{4, 1, 1};
  const ExcitationTables t = build_tables(ints, space);
  const std::vector<Configuration> src{parse_config("1000")};
  const auto recs = generate_coupled(src, t, ints);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(render(recs[0].target, 4), "0010");
  EXPECT_DOUBLE_EQ(recs[0].element, 0.3);
}

TEST(GenerateCoupled, InfiniteThresholdEmitsNothing) {
  const Fcidump f = random_system(3, 8, 4, 0.8);
  const ExcitationTables t = build_tables(f.integrals, f.space);
  const std::vector<Configuration> src{reference_config(f.space)};
  GenOptions opts;
  opts.eps = std::numeric_limits<double>::infinity();
  EXPECT_TRUE(generate_coupled(src, t, f.integrals, opts).empty());
}

TEST(GenerateCoupled, RejectsMixedSectorsAndMismatchedTables) {
  const Fcidump f = random_system(3, 8, 4, 0.8);
  const ExcitationTables t = build_tables(f.integrals, f.space);
  const std::vector<Configuration> mixed{parse_config("11110000"), parse_config("11100000")};
  EXPECT_THROW(generate_coupled(mixed, t, f.integrals), SectorMismatch);
  const IntegralStore other = random_integrals(1, 5, 0.5);
  const std::vector<Configuration> src{parse_config("11110000")};
  EXPECT_THROW(generate_coupled(src, t, other), std::invalid_argument);
}

// Multiset equality with the brute-force enumeration, signs included.
TEST(GenerateCoupledProperty, MatchesNaiveEnumeration) {
  const int sizes[][2] = {{8, 4}, {10, 3}, {12, 6}, {12, 5}};
  for (std::uint64_t trial = 0; trial < 4; ++trial) {
    const int m = sizes[trial][0], n = sizes[trial][1];
    const Fcidump f = random_system(100 + trial, m, n, 0.4);
    const ExcitationTables t = build_tables(f.integrals, f.space);
    const auto sources = random_sources(trial, f.space, 250);
    const double eps = trial % 2 ? 1e-3 : 0.0;
    GenOptions opts;
    opts.eps = eps;
    const auto recs = generate_coupled(sources, t, f.integrals, opts);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < sources.size(); ++i) {
      const auto expected = oracle::naive_coupled(sources[i], f.integrals, m, eps);
      for (const auto& [target, h] : expected) {
        ASSERT_LT(pos, recs.size());
        ASSERT_EQ(recs[pos].source_idx, i);
        ASSERT_EQ(recs[pos].target, target);
        ASSERT_NEAR(recs[pos].element, h, 1e-12);
        ++pos;
      }
    }
    EXPECT_EQ(pos, recs.size());
  }
}

TEST(GenerateCoupledProperty, IndependentOfChunkAndThreads) {
  const Fcidump f = random_system(21, 12, 6, 0.5);
  const ExcitationTables t = build_tables(f.integrals, f.space);
  const auto sources = random_sources(5, f.space, 300);
  std::vector<CoupledRecord> ref;
  for (std::size_t chunk : {1u, 17u, 4096u}) {
    for (unsigned threads : {1u, 4u}) {
      GenOptions opts;
      opts.chunk = chunk;
      opts.threads = threads;
      auto recs = generate_coupled(sources, t, f.integrals, opts);
      if (ref.empty()) {
        ref = std::move(recs);
      } else {
        ASSERT_EQ(recs.size(), ref.size());
        ASSERT_EQ(std::memcmp(recs.data(), ref.data(), recs.size() * sizeof(CoupledRecord)), 0);
      }
    }
  }
}

TEST(GenerateCoupledProperty, ClosedFormCountAndSelfExclusion) {
  for (int m = 4; m <= 10; m += 2) {
    for (int n = 1; n < m; ++n) {
      const Fcidump f = random_system(static_cast<std::uint64_t>(m * 31 + n), m, n, 1.0);
      const ExcitationTables t = build_tables(f.integrals, f.space);
      const auto basis = oracle::sector_basis(f.space);
      const VirtualSpace vs = virtual_space(f.space, t);
      const auto recs = generate_coupled(basis, t, f.integrals);
      const int na = f.space.n_alpha(), nb = f.space.n_beta();
      const int va = m / 2 - na, vb = m / 2 - nb;
      const std::uint64_t per_source = static_cast<std::uint64_t>(na * va + nb * vb) +
                                       binom(na, 2) * binom(va, 2) + binom(nb, 2) * binom(vb, 2) +
                                       static_cast<std::uint64_t>(na * va * nb * vb);
      EXPECT_EQ(recs.size(), per_source * basis.size()) << "m=" << m << " n=" << n;
      for (const auto& r : recs) {
        ASSERT_NE(r.target, basis[r.source_idx]);
        const int d = diff_degree(r.target, basis[r.source_idx]);
        ASSERT_TRUE(d == 1 || d == 2);
      }
      EXPECT_LE(per_source, vs.total());
    }
  }
}

TEST(GenerateCoupledProperty, ElementsEqualSlaterCondon) {
  const Fcidump f = random_system(77, 14, 6, 0.6);
  const ExcitationTables t = build_tables(f.integrals, f.space);
  const auto sources = random_sources(9, f.space, 60);
  for (const auto& r : generate_coupled(sources, t, f.integrals)) {
    ASSERT_NEAR(r.element, slater_condon(sources[r.source_idx], r.target, f.integrals), 1e-12);
    ASSERT_GT(std::abs(r.element), 0.0);
  }
}

TEST(GenerateCoupled, CountMatchesGeneration) {
  const Fcidump f = random_system(31, 12, 6, 0.5);
  const ExcitationTables t = build_tables(f.integrals, f.space);
  const auto sources = random_sources(2, f.space, 40);
  GenOptions opts;
  opts.eps = 1e-3;
  const auto counts = count_coupled(sources, t, f.integrals, opts);
  const auto recs = generate_coupled(sources, t, f.integrals, opts);
  std::vector<std::size_t> seen(sources.size(), 0);
  for (const auto& r : recs) ++seen[r.source_idx];
  EXPECT_EQ(counts, seen);
}

TEST(LocalUnique, KeepsSpillAndDeduplicatesTargets) {
  const Configuration a = parse_config("0011");
  auto lu = local_unique({{0, a, 0.1}, {1, a, 0.2}});
  EXPECT_EQ(lu.unique_targets.size(), 1u);
  EXPECT_EQ(lu.spill.size(), 2u);
  lu = local_unique({});
  EXPECT_TRUE(lu.unique_targets.empty());
  EXPECT_TRUE(lu.spill.empty());

  std::mt19937_64 rng(4);
  std::vector<CoupledRecord> recs;
  std::vector<Configuration> all;
  for (int i = 0; i < 2000; ++i) {
    Configuration c;
    c.set_word(0, rng() % 300);
    recs.push_back({static_cast<std::uint64_t>(i), c, 1.0});
    all.push_back(c);
  }
  lu = local_unique(recs);
  EXPECT_EQ(lu.unique_targets, oracle::naive_dedup<Configuration>({all}));
  EXPECT_EQ(lu.spill, recs);
}
