#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "sci/configuration.hpp"
#include "sci/oracle.hpp"

using namespace sci;

namespace {

OrbitalSpace space_of(int m, int n) { return OrbitalSpace{m, n, n % 2}; }

Configuration random_config(std::mt19937_64& rng, int m, int n) {
  std::vector<int> idx(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(n));
  return make_config(idx, OrbitalSpace{m, n, 0});
}

}  // namespace

TEST(Configuration, RendersOrbitalZeroLeftmost) {
  EXPECT_EQ(render(make_config({1, 2, 6}, space_of(8, 3)), 8), "01100010");
  EXPECT_EQ(render(Configuration{}, 8), "00000000");
  EXPECT_EQ(render(make_config({0, 1, 2, 3, 4, 5, 6, 7}, space_of(8, 8)), 8), "11111111");
}

TEST(Configuration, MakeConfigRejectsBadIndices) {
  EXPECT_THROW(make_config({1, 1}, space_of(8, 2)), std::invalid_argument);
  EXPECT_THROW(make_config({8}, space_of(8, 1)), std::invalid_argument);
  EXPECT_THROW(make_config({-1}, space_of(8, 1)), std::invalid_argument);
}

TEST(Configuration, HilbertDimensionIsExact) {
  EXPECT_EQ(hilbert_dimension(space_of(8, 3)), 56);
  EXPECT_EQ(hilbert_dimension(OrbitalSpace{56, 14, 0}), boost::multiprecision::cpp_int("5804731963800"));
  EXPECT_EQ(hilbert_dimension(OrbitalSpace{4, 4, 0}), 1);
  EXPECT_EQ(hilbert_dimension(OrbitalSpace{128, 64, 0}),
            boost::multiprecision::cpp_int("23951146041928082866135587776380551750"));
}

TEST(Configuration, ApplySingleExamples) {
  auto r = apply_single(parse_config("1100"), 0, 2);
  EXPECT_EQ(render(r.config, 4), "0110");
  EXPECT_EQ(r.parity, -1);

  r = apply_single(parse_config("1000"), 0, 1);
  EXPECT_EQ(render(r.config, 4), "0100");
  EXPECT_EQ(r.parity, 1);

  r = apply_single(parse_config("1010"), 2, 3);
  EXPECT_EQ(render(r.config, 4), "1001");
  EXPECT_EQ(r.parity, 1);

  EXPECT_THROW(apply_single(parse_config("1010"), 1, 3), InvalidExcitation);
  EXPECT_THROW(apply_single(parse_config("1010"), 0, 2), InvalidExcitation);
}

TEST(Configuration, ApplyDoubleExamples) {
  auto r = apply_double(parse_config("1100"), 0, 1, 2, 3);
  EXPECT_EQ(render(r.config, 4), "0011");
  EXPECT_EQ(r.parity, 1);

  r = apply_double(parse_config("110000"), 0, 1, 4, 5);
  EXPECT_EQ(render(r.config, 6), "000011");
  EXPECT_EQ(r.parity, 1);

  EXPECT_THROW(apply_double(parse_config("1110"), 0, 1, 2, 3), InvalidExcitation);
}

TEST(Configuration, DiffDegree) {
  EXPECT_EQ(diff_degree(parse_config("1100"), parse_config("1100")), 0);
  EXPECT_EQ(diff_degree(parse_config("1100"), parse_config("1010")), 1);
  EXPECT_EQ(diff_degree(parse_config("1100"), parse_config("0011")), 2);
  EXPECT_THROW(diff_degree(parse_config("1100"), parse_config("1110")), SectorMismatch);
}

TEST(Configuration, OrderIsBigUnsignedInteger) {
  Configuration lo, hi;
  lo.set(63);
  hi.set(64);
  EXPECT_LT(lo, hi);
  Configuration a = parse_config("1");  // value 1
  Configuration b = parse_config("01");  // value 2
  EXPECT_LT(a, b);
}

TEST(ConfigurationProperty, RenderParseRoundTrip) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    const int m = 1 + static_cast<int>(rng() % kMaxOrbitals);
    const int n = static_cast<int>(rng() % (m + 1));
    const Configuration c = random_config(rng, m, n);
    EXPECT_EQ(render(parse_config(render(c, m)), m), render(c, m));
    EXPECT_EQ(parse_config(render(c, m)), c);
  }
}

TEST(ConfigurationProperty, SingleThenInverseRestores) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const int m = 2 + static_cast<int>(rng() % (kMaxOrbitals - 1));
    const int n = 1 + static_cast<int>(rng() % (m - 1));
    const Configuration c = random_config(rng, m, n);
    const auto occ = c.occupied();
    std::vector<int> vir;
    for (int t = 0; t < m; ++t) {
      if (!c.test(t)) vir.push_back(t);
    }
    const int p = occ[rng() % occ.size()];
    const int a = vir[rng() % vir.size()];
    const auto fwd = apply_single(c, p, a);
    const auto back = apply_single(fwd.config, a, p);
    EXPECT_EQ(back.config, c);
    EXPECT_EQ(fwd.parity * back.parity, 1);
  }
}

TEST(ConfigurationProperty, OrderIsTotalAndSortIdempotent) {
  std::mt19937_64 rng(3);
  std::vector<Configuration> v;
  for (int i = 0; i < 500; ++i) {
    Configuration c;
    for (std::size_t k = 0; k < kConfigWords; ++k) c.set_word(k, rng() % 4);  // force ties
    v.push_back(c);
  }
  for (std::size_t i = 0; i + 2 < v.size(); i += 3) {
    const auto &x = v[i], &y = v[i + 1], &z = v[i + 2];
    EXPECT_EQ((x < y) + (y < x) + (x == y), 1);
    if (x < y && y < z) EXPECT_LT(x, z);
    if (x <= y && y <= x) EXPECT_EQ(x, y);
  }
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  auto twice = sorted;
  std::sort(twice.begin(), twice.end());
  EXPECT_EQ(sorted, twice);
  EXPECT_TRUE(std::is_sorted(sorted.begin(), sorted.end()));
}

// Parity against explicit operator algebra: exhaustive for m <= 8.
TEST(ConfigurationProperty, ParityMatchesOperatorOracleExhaustive) {
  for (int m = 2; m <= 8; ++m) {
    for (std::uint64_t bits = 0; bits < (1u << m); ++bits) {
      Configuration c;
      c.set_word(0, bits);
      for (int p = 0; p < m; ++p) {
        for (int a = 0; a < m; ++a) {
          if (!c.test(p) || c.test(a)) continue;
          const auto r = apply_single(c, p, a);
          const auto [cfg, sign] = oracle::ladder(c, m, {{p, a}});
          ASSERT_EQ(cfg, r.config);
          ASSERT_EQ(sign, r.parity);
        }
      }
      for (int p = 0; p < m; ++p) {
        for (int q = p + 1; q < m; ++q) {
          for (int a = 0; a < m; ++a) {
            for (int b = a + 1; b < m; ++b) {
              if (!c.test(p) || !c.test(q) || c.test(a) || c.test(b)) continue;
              const auto r = apply_double(c, p, q, a, b);
              const auto [cfg, sign] = oracle::ladder(c, m, {{p, a}, {q, b}});
              ASSERT_EQ(cfg, r.config);
              ASSERT_EQ(sign, r.parity);
            }
          }
        }
      }
    }
  }
}

TEST(ConfigurationProperty, ParityMatchesOperatorOracleSampled) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 10000; ++trial) {
    const int m = 4 + static_cast<int>(rng() % (kMaxOrbitals - 3));
    const int n = 2 + static_cast<int>(rng() % (m - 3));
    const Configuration c = random_config(rng, m, n);
    auto occ = c.occupied();
    std::vector<int> vir;
    for (int t = 0; t < m; ++t) {
      if (!c.test(t)) vir.push_back(t);
    }
    std::shuffle(occ.begin(), occ.end(), rng);
    std::shuffle(vir.begin(), vir.end(), rng);
    if (trial % 2 == 0) {
      const auto r = apply_single(c, occ[0], vir[0]);
      const auto [cfg, sign] = oracle::ladder(c, m, {{occ[0], vir[0]}});
      ASSERT_EQ(cfg, r.config);
      ASSERT_EQ(sign, r.parity);
    } else {
      const int p = std::min(occ[0], occ[1]), q = std::max(occ[0], occ[1]);
      const int a = std::min(vir[0], vir[1]), b = std::max(vir[0], vir[1]);
      const auto r = apply_double(c, p, q, a, b);
      const auto [cfg, sign] = oracle::ladder(c, m, {{p, a}, {q, b}});
      ASSERT_EQ(cfg, r.config);
      ASSERT_EQ(sign, r.parity);
    }
  }
}
