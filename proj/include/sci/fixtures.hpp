// fixtures.hpp
// Deterministic random-integral systems for tests, benchmarks and the CLI.
#ifndef SCI_FIXTURES_HPP
#define SCI_FIXTURES_HPP

#include <cstdint>
#include <string>

#include "sci/configuration.hpp"
#include "sci/fcidump.hpp"
#include "sci/integrals.hpp"

namespace sci {

/// Molecule-like random integrals over n_spatial orbitals: ascending orbital
/// energies, positive Coulomb and exchange terms, and off-diagonal one- and
/// two-electron couplings present with probability `density`.
IntegralStore random_integrals(std::uint64_t seed, int n_spatial, double density,
                               double coupling = 1.0);

/// Fcidump with MS2 = n % 2.
Fcidump random_system(std::uint64_t seed, int m, int n, double density, double coupling = 1.0);

/// FCIDUMP text of random_system; byte-identical for a fixed seed.
std::string gen_fixture(std::uint64_t seed, int m, int n, double density, double coupling = 1.0);

}  // namespace sci

#endif  // SCI_FIXTURES_HPP
