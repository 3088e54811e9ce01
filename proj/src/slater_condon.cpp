#include "sci/slater_condon.hpp"

#include <vector>

namespace sci {

double diagonal_element(std::span<const int> occ, const IntegralStore& ints) {
  double e = ints.e_core();
  for (std::size_t i = 0; i < occ.size(); ++i) {
    const int p = occ[i];
    e += ints.h(p >> 1, p >> 1);
    for (std::size_t j = 0; j < i; ++j) {
      const int q = occ[j];
      // <pq||pq> = (pp|qq) - (pq|qp) for parallel spins
      e += ints.eri(p >> 1, p >> 1, q >> 1, q >> 1);
      if (((p ^ q) & 1) == 0) e -= ints.eri(p >> 1, q >> 1, q >> 1, p >> 1);
    }
  }
  return e;
}

double diagonal_element(const Configuration& c, const IntegralStore& ints) {
  const std::vector<int> occ = c.occupied();
  return diagonal_element(occ, ints);
}

double single_element(const Configuration& c, std::span<const int> occ, int p, int a,
                      const IntegralStore& ints) {
  const int sp = p >> 1;
  const int sa = a >> 1;
  double v = one_body(ints, p, a);
  for (int k : occ) {
    if (k == p) continue;
    const int sk = k >> 1;
    v += ints.eri(sp, sa, sk, sk);
    if (((k ^ p) & 1) == 0) v -= ints.eri(sp, sk, sk, sa);
  }
  return (c.count_between(p, a) & 1) ? -v : v;
}

double slater_condon(const Configuration& ci, const Configuration& cj, const IntegralStore& ints) {
  const int degree = diff_degree(ci, cj);
  if (degree > 2) return 0.0;
  if (degree == 0) return diagonal_element(ci, ints);

  const Configuration diff = ci ^ cj;
  const Configuration holes = diff & ci;      // occupied in ci only
  const Configuration particles = diff & cj;  // occupied in cj only
  const std::vector<int> h = holes.occupied();
  const std::vector<int> pa = particles.occupied();
  if (degree == 1) {
    if ((h[0] ^ pa[0]) & 1) return 0.0;
    const std::vector<int> occ = ci.occupied();
    return single_element(ci, occ, h[0], pa[0], ints);
  }
  const Excited ex = apply_double(ci, h[0], h[1], pa[0], pa[1]);
  return ex.parity * antisymmetrized(ints, h[0], h[1], pa[0], pa[1]);
}

}  // namespace sci
