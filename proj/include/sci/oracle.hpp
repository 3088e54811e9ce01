// oracle.hpp
//
// Brute-force references used to check the production path: explicit
// second-quantized operator algebra, full CI, naive enumeration and dedup.
// Only the configuration type is shared with the code under test; the
// Hamiltonian here is applied operator by operator with its own sign tracking.
#ifndef SCI_ORACLE_HPP
#define SCI_ORACLE_HPP

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sci/configuration.hpp"
#include "sci/integrals.hpp"

namespace sci::oracle {

inline constexpr int kOperatorMaxOrbitals = 12;
inline constexpr std::uint64_t kFciMaxDimension = 100000;

class GuardExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// <ci|H|cj> by applying every creation/annihilation string of H to |cj>.
/// Requires m <= kOperatorMaxOrbitals.
double operator_element(const Configuration& ci, const Configuration& cj,
                        const IntegralStore& ints);

/// Applies a+_to a_from for each move in order to |c> with explicit operator
/// sign tracking. Returns the resulting configuration and sign, or sign 0 if
/// any operator annihilates the state.
std::pair<Configuration, int> ladder(const Configuration& c, int m,
                                     const std::vector<std::pair<int, int>>& moves);

struct FciResult {
  double energy = 0.0;
  std::vector<Configuration> basis;  // sorted in configuration order
  Eigen::VectorXd vector;            // ground state, reference amplitude >= 0
};

/// Lowest eigenpair of H over the configurations of the space's Sz sector.
/// C(m, n_elec) must not exceed kFciMaxDimension.
FciResult fci_energy(const IntegralStore& ints, const OrbitalSpace& space);

/// Every single and double excitation of c with |slater_condon| > eps, sorted by target.
std::vector<std::pair<Configuration, double>> naive_coupled(const Configuration& c,
                                                            const IntegralStore& ints, int m,
                                                            double eps);

/// Concatenate, sort, unique.
template <class Key>
std::vector<Key> naive_dedup(const std::vector<std::vector<Key>>& lists);

/// All configurations of the space's particle and Sz sector, sorted.
std::vector<Configuration> sector_basis(const OrbitalSpace& space);

}  // namespace sci::oracle

#include <algorithm>

template <class Key>
std::vector<Key> sci::oracle::naive_dedup(const std::vector<std::vector<Key>>& lists) {
  std::vector<Key> all;
  for (const auto& l : lists) all.insert(all.end(), l.begin(), l.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

#endif  // SCI_ORACLE_HPP
