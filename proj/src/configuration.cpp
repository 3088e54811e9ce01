#include "sci/configuration.hpp"

#include <string>

namespace sci {

void OrbitalSpace::validate() const {
  if (m <= 0 || m > kMaxOrbitals) {
    throw std::invalid_argument("orbital count " + std::to_string(m) + " outside (0, " +
                                std::to_string(kMaxOrbitals) + "]");
  }
  if (n_elec <= 0 || n_elec > m) {
    throw std::invalid_argument("electron count " + std::to_string(n_elec) +
                                " outside (0, m]");
  }
  if ((n_elec + ms2) % 2 != 0 || n_alpha() < 0 || n_beta() < 0 ||
      n_alpha() > (m + 1) / 2 || n_beta() > m / 2) {
    throw std::invalid_argument("MS2=" + std::to_string(ms2) + " inconsistent with NELEC=" +
                                std::to_string(n_elec));
  }
}

Configuration make_config(std::span<const int> occupied, const OrbitalSpace& space) {
  Configuration c;
  for (int t : occupied) {
    if (t < 0 || t >= space.m) {
      throw std::invalid_argument("orbital index " + std::to_string(t) + " out of range");
    }
    if (c.test(t)) {
      throw std::invalid_argument("duplicate orbital index " + std::to_string(t));
    }
    c.set(t);
  }
  return c;
}

std::string render(const Configuration& c, int m) {
  std::string s(static_cast<std::size_t>(m), '0');
  for (int t = 0; t < m; ++t) {
    if (c.test(t)) s[static_cast<std::size_t>(t)] = '1';
  }
  return s;
}

Configuration parse_config(std::string_view text) {
  if (text.size() > static_cast<std::size_t>(kMaxOrbitals)) {
    throw std::invalid_argument("configuration text longer than " +
                                std::to_string(kMaxOrbitals));
  }
  Configuration c;
  for (std::size_t t = 0; t < text.size(); ++t) {
    if (text[t] == '1') {
      c.set(static_cast<int>(t));
    } else if (text[t] != '0') {
      throw std::invalid_argument("configuration text must contain only 0 and 1");
    }
  }
  return c;
}

boost::multiprecision::cpp_int hilbert_dimension(const OrbitalSpace& space) {
  boost::multiprecision::cpp_int r = 1;
  const int k = std::min(space.n_elec, space.m - space.n_elec);
  // r stays integral: after step i it equals C(m - k + i, i).
  for (int i = 1; i <= k; ++i) {
    r *= space.m - k + i;
    r /= i;
  }
  return r;
}

Excited apply_single(const Configuration& c, int p, int a) {
  if (p == a || !c.test(p) || c.test(a)) {
    throw InvalidExcitation("invalid excitation " + std::to_string(p) + "->" +
                            std::to_string(a));
  }
  Excited r{c, (c.count_between(p, a) & 1) ? -1 : 1};
  r.config.flip(p);
  r.config.flip(a);
  return r;
}

Excited apply_double(const Configuration& c, int p, int q, int a, int b) {
  if (!(p < q) || !(a < b) || p == a || p == b || q == a || q == b) {
    throw InvalidExcitation("invalid double excitation index pattern");
  }
  if (!c.test(p) || !c.test(q) || c.test(a) || c.test(b)) {
    throw InvalidExcitation("invalid excitation (" + std::to_string(p) + "," +
                            std::to_string(q) + ")->(" + std::to_string(a) + "," +
                            std::to_string(b) + ")");
  }
  const Excited first = apply_single(c, p, a);
  Excited second = apply_single(first.config, q, b);
  second.parity *= first.parity;
  return second;
}

int diff_degree(const Configuration& c1, const Configuration& c2) {
  if (c1.popcount() != c2.popcount()) {
    throw SectorMismatch("configurations belong to different particle sectors");
  }
  return (c1 ^ c2).popcount() / 2;
}

Configuration reference_config(const OrbitalSpace& space) {
  Configuration c;
  for (int k = 0; k < space.n_alpha(); ++k) c.set(2 * k);
  for (int k = 0; k < space.n_beta(); ++k) c.set(2 * k + 1);
  return c;
}

int alpha_count(const Configuration& c) {
  int n = 0;
  for (std::size_t k = 0; k < Configuration::kWords; ++k) {
    n += std::popcount(c.word(k) & 0x5555555555555555ull);
  }
  return n;
}

}  // namespace sci
