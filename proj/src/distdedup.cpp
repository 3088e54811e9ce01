#include "sci/distdedup.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace sci::dedup {

BalanceMetrics balance_metrics(std::span<const std::size_t> per_rank_counts, double elapsed_sec,
                               std::size_t total_in) {
  if (per_rank_counts.empty()) throw std::invalid_argument("balance metrics need at least one rank");
  BalanceMetrics m;
  m.per_rank_counts.assign(per_rank_counts.begin(), per_rank_counts.end());
  const auto [lo, hi] = std::minmax_element(per_rank_counts.begin(), per_rank_counts.end());
  if (*lo == 0) {
    m.degenerate = *hi != 0;
    m.max_min_ratio = m.degenerate ? std::numeric_limits<double>::infinity() : 1.0;
  } else {
    m.max_min_ratio = static_cast<double>(*hi) / static_cast<double>(*lo);
  }
  const double n = static_cast<double>(per_rank_counts.size());
  const double mean =
      static_cast<double>(std::accumulate(per_rank_counts.begin(), per_rank_counts.end(), std::size_t{0})) / n;
  double var = 0.0;
  for (std::size_t c : per_rank_counts) var += (static_cast<double>(c) - mean) * (static_cast<double>(c) - mean);
  var /= n;
  m.cv = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
  m.throughput_items_per_sec = elapsed_sec > 0.0 ? static_cast<double>(total_in) / elapsed_sec : 0.0;
  return m;
}

KeyDistribution parse_distribution(const std::string& text) {
  KeyDistribution d;
  if (text == "uniform") return d;
  if (text.rfind("zipf:", 0) == 0) {
    d.kind = KeyDistribution::Kind::kZipf;
    std::size_t used = 0;
    const std::string arg = text.substr(5);
    try {
      d.theta = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != arg.size() || !(d.theta > 0.0) || !std::isfinite(d.theta)) {
      throw std::invalid_argument("bad zipf exponent in '" + text + "'");
    }
    return d;
  }
  throw std::invalid_argument("unknown key distribution '" + text + "' (expected uniform or zipf:THETA)");
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Configuration key_of(std::uint64_t id, std::uint64_t seed) {
  Configuration c;
  std::uint64_t h = splitmix(id ^ splitmix(seed));
  for (std::size_t w = 0; w < kConfigWords; ++w) {
    c.set_word(w, h);
    h = splitmix(h);
  }
  return c;
}

}  // namespace

std::vector<Configuration> generate_keys(const KeyDistribution& dist, std::size_t n,
                                         std::uint64_t seed) {
  std::vector<Configuration> keys;
  keys.reserve(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (dist.kind == KeyDistribution::Kind::kUniform) {
    for (std::size_t i = 0; i < n; ++i) keys.push_back(key_of(rng(), seed));
    return keys;
  }
  // Inverse-CDF over ranks 1..n.
  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    acc += 1.0 / std::pow(static_cast<double>(k + 1), dist.theta);
    cdf[k] = acc;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double u = unit(rng) * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto rank = static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(n) - 1));
    keys.push_back(key_of(rank, seed));
  }
  return keys;
}

std::vector<std::vector<Configuration>> split_among_ranks(const std::vector<Configuration>& keys,
                                                          int ranks) {
  if (ranks < 1) throw std::invalid_argument("rank count must be positive");
  std::vector<std::vector<Configuration>> out(static_cast<std::size_t>(ranks));
  const std::size_t r = out.size();
  for (std::size_t j = 0; j < r; ++j) {
    const std::size_t lo = keys.size() * j / r, hi = keys.size() * (j + 1) / r;
    out[j].assign(keys.begin() + static_cast<std::ptrdiff_t>(lo), keys.begin() + static_cast<std::ptrdiff_t>(hi));
  }
  return out;
}

}  // namespace sci::dedup
