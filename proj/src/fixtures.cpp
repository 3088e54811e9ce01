#include "sci/fixtures.hpp"

#include <random>
#include <sstream>
#include <stdexcept>

namespace sci {
namespace {

// mt19937_64 output is fixed by the standard; the distributions are not, so
// the conversion to [0, 1) is done by hand.
class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : engine_(seed) {}
  double operator()() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double symmetric() { return 2.0 * (*this)() - 1.0; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

IntegralStore random_integrals(std::uint64_t seed, int n, double density, double coupling) {
  if (n <= 0) throw std::invalid_argument("fixture needs at least one spatial orbital");
  if (density < 0.0 || density > 1.0) throw std::invalid_argument("density must be in [0, 1]");
  Uniform u(seed);
  IntegralStore ints(n);
  ints.set_e_core(1.0);
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q <= p; ++q) {
      if (p == q) {
        ints.set_h(p, p, -2.0 + 0.6 * p + 0.1 * u());
      } else if (u() < density) {
        ints.set_h(p, q, 0.05 * coupling * u.symmetric());
      }
    }
  }
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q <= p; ++q) {
      for (int r = 0; r <= p; ++r) {
        for (int s = 0; s <= r; ++s) {
          if (IntegralStore::pair_index(r, s) > IntegralStore::pair_index(p, q)) continue;
          double v = 0.0;
          if (p == q && r == s) {
            v = (p == r ? 0.6 : 0.4) + 0.1 * u();  // Coulomb (pp|rr)
          } else if (p == r && q == s) {
            v = 0.02 + 0.03 * u();  // exchange (pq|pq)
          } else if (u() < density) {
            v = 0.02 * coupling * u.symmetric();
          }
          ints.set_eri(p, q, r, s, v);
        }
      }
    }
  }
  return ints;
}

Fcidump random_system(std::uint64_t seed, int m, int n, double density, double coupling) {
  if (m <= 0 || m % 2 != 0) throw std::invalid_argument("fixture m must be positive and even");
  Fcidump f;
  f.space.m = m;
  f.space.n_elec = n;
  f.space.ms2 = n % 2;
  f.space.validate();
  f.integrals = random_integrals(seed, m / 2, density, coupling);
  return f;
}

std::string gen_fixture(std::uint64_t seed, int m, int n, double density, double coupling) {
  const Fcidump f = random_system(seed, m, n, density, coupling);
  std::ostringstream out;
  write_fcidump(out, f.integrals, f.space);
  return out.str();
}

}  // namespace sci
