// slater_condon.hpp
//
// Hamiltonian matrix elements between determinants built from spin-free
// spatial integrals. Spin orbital t has spatial index t / 2 and spin t % 2.
#ifndef SCI_SLATER_CONDON_HPP
#define SCI_SLATER_CONDON_HPP

#include <span>

#include "sci/configuration.hpp"
#include "sci/integrals.hpp"

namespace sci {

/// <pq||ab> over spin orbitals: (pa|qb) d(p,a) d(q,b) - (pb|qa) d(p,b) d(q,a).
inline double antisymmetrized(const IntegralStore& ints, int p, int q, int a, int b) noexcept {
  double v = 0.0;
  if (((p ^ a) & 1) == 0 && ((q ^ b) & 1) == 0) v += ints.eri(p >> 1, a >> 1, q >> 1, b >> 1);
  if (((p ^ b) & 1) == 0 && ((q ^ a) & 1) == 0) v -= ints.eri(p >> 1, b >> 1, q >> 1, a >> 1);
  return v;
}

/// One-electron integral between spin orbitals (zero across spins).
inline double one_body(const IntegralStore& ints, int p, int a) noexcept {
  return ((p ^ a) & 1) ? 0.0 : ints.h(p >> 1, a >> 1);
}

/// <c|H|c>, including the core energy.
double diagonal_element(std::span<const int> occupied, const IntegralStore& ints);
double diagonal_element(const Configuration& c, const IntegralStore& ints);

/// Signed element <c|H|c'> for c' = p -> a applied to c, given c's occupied list.
double single_element(const Configuration& c, std::span<const int> occupied, int p, int a,
                      const IntegralStore& ints);

/// <ci|H|cj>; zero when the configurations differ by more than two moves.
double slater_condon(const Configuration& ci, const Configuration& cj, const IntegralStore& ints);

}  // namespace sci

#endif  // SCI_SLATER_CONDON_HPP
