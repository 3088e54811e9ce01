// solver.hpp
//
// Selected-CI driver: the subspace eigensolver, the amplitude oracle used to
// rank candidate configurations, top-K selection, energy evaluation over the
// coupled stream, and the iterate / expand / infer / select / optimize loop.
#ifndef SCI_SOLVER_HPP
#define SCI_SOLVER_HPP

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "sci/configuration.hpp"
#include "sci/excitation_tables.hpp"
#include "sci/genkernel.hpp"
#include "sci/integrals.hpp"
#include "sci/memexec.hpp"

namespace sci {

class EigensolverNotConverged : public std::runtime_error {
 public:
  EigensolverNotConverged(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

struct EigenOptions {
  std::size_t dense_max = 2000;  // dense solver up to this dimension, Davidson above
  double tol = 1e-10;            // Davidson residual norm
  int max_iters = 200;
  std::size_t max_subspace = 48;
};

struct SubspaceSolution {
  double energy = 0.0;
  Eigen::VectorXd psi;  // unit norm, reference amplitude >= 0
  double residual = 0.0;
  int iterations = 0;
  bool dense = true;
};

/// H restricted to the sorted space S, from the eps-filtered coupled stream.
Eigen::SparseMatrix<double> subspace_hamiltonian(std::span<const Configuration> space,
                                                 const ExcitationTables& tables,
                                                 const IntegralStore& ints, double eps,
                                                 unsigned threads = 0);

/// Lowest eigenpair of a symmetric matrix. guess, when non-empty, warm-starts Davidson.
/// sign_index selects the component forced non-negative.
SubspaceSolution lowest_eigenpair(const Eigen::SparseMatrix<double>& h, const EigenOptions& opts = {},
                                  const Eigen::VectorXd& guess = {}, std::size_t sign_index = 0);

/// Lowest eigenpair of H on S with the reference configuration's amplitude made non-negative.
SubspaceSolution subspace_eigensolve(std::span<const Configuration> space, const Configuration& reference,
                                     const ExcitationTables& tables, const IntegralStore& ints,
                                     double eps = 0.0, const EigenOptions& opts = {},
                                     const Eigen::VectorXd& guess = {}, unsigned threads = 0);

/// Source of amplitude estimates for candidate configurations. A learned
/// model could stand in for the default perturbative estimate.
class AmplitudeOracle {
 public:
  virtual ~AmplitudeOracle() = default;
  virtual void estimate(std::span<const Configuration> batch, std::span<double> out) const = 0;
};

inline constexpr double kDenominatorFloor = 1e-8;

/// psi_j for j in S is the eigenvector entry; otherwise the first-order
/// estimate sum_{i in S} H_ji psi_i / (E - H_jj), with the denominator's
/// magnitude floored at kDenominatorFloor.
class PerturbativeOracle final : public AmplitudeOracle {
 public:
  PerturbativeOracle(std::span<const Configuration> space, std::span<const double> psi, double energy,
                     const ExcitationTables& tables, const IntegralStore& ints);
  void estimate(std::span<const Configuration> batch, std::span<double> out) const override;

 private:
  std::span<const Configuration> space_;
  std::span<const double> psi_;
  double energy_;
  const ExcitationTables& tables_;
  const IntegralStore& ints_;
};

std::vector<double> estimate_amplitudes(std::span<const Configuration> unique,
                                        std::span<const Configuration> space, std::span<const double> psi,
                                        double energy, const ExcitationTables& tables,
                                        const IntegralStore& ints);

// Top-K selection.

struct TopKEntry {
  double magnitude = 0.0;
  Configuration config;
  friend bool operator==(const TopKEntry&, const TopKEntry&) = default;
};

/// Strict ranking: larger magnitude first, then smaller configuration.
inline bool topk_before(const TopKEntry& a, const TopKEntry& b) noexcept {
  if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
  return a.config < b.config;
}

struct TopKState {
  std::size_t capacity = 0;
  std::vector<TopKEntry> entries;  // ranked, at most capacity

  double threshold() const noexcept {
    return entries.size() < capacity ? 0.0 : entries.back().magnitude;
  }
};

/// Folds a batch into the running state, skipping configurations in S.
/// A configuration may appear at most once across the whole stream.
void topk_update(TopKState& state, std::span<const Configuration> configs, std::span<const double> amplitudes,
                 std::span<const Configuration> space);

/// Merges two states of equal capacity (used for the rank-local to global step).
TopKState topk_merge(const TopKState& a, const TopKState& b);

// Energy evaluation.

/// Variational energy of S from its coupled records (sorted by source):
/// [sum_i psi_i^2 H_ii + sum_records psi_i H_ij psi_j [j in S]] / sum_i psi_i^2.
/// unique/unique_amplitudes cover every record target.
double evaluate_energy(std::span<const CoupledRecord> records, std::span<const Configuration> unique,
                       std::span<const double> unique_amplitudes, std::span<const Configuration> space,
                       std::span<const double> psi, const IntegralStore& ints);

// Driver.

struct RunConfig {
  std::size_t topk = 16;  // configurations added per iteration
  double eps_gen = 0.0;
  int ranks = 1;
  std::size_t samples = 64;
  std::size_t budget_bytes = kUnlimitedBudget;
  int max_iters = 50;
  double tol = 1e-8;
  std::string spill_dir;
  bool overlap = true;
  unsigned threads = 0;
  EigenOptions eigen;
};

struct EnergyReport {
  int iteration = 0;
  double energy = 0.0;          // variational energy after merging this iteration's selection
  double stage3_energy = 0.0;   // energy of the space the iteration started from, via the coupled stream
  std::size_t space_size = 0;   // |S| after merging
  std::size_t unique = 0;
  std::size_t generated = 0;
  double redundancy = 0.0;      // 1 - unique / generated
  double delta = 0.0;           // energy change over the iteration
  std::size_t added = 0;
  std::size_t peak_working_bytes = 0;
  std::size_t reserved_bytes = 0;
  dedup::BalanceMetrics balance;
};

enum class StopReason { kTolerance, kFixedPoint, kMaxIterations };

std::string to_string(StopReason r);

struct SciResult {
  std::vector<EnergyReport> reports;
  double initial_energy = 0.0;  // reference-only space
  double energy = 0.0;
  bool converged = false;
  StopReason reason = StopReason::kMaxIterations;
  std::vector<Configuration> space;
  Eigen::VectorXd psi;
};

/// Number of consecutive sub-tolerance iterations required to stop.
inline int required_quiet_iterations(double tol) noexcept { return tol == std::numeric_limits<double>::infinity() ? 1 : 3; }

SciResult sci_iterate(const IntegralStore& ints, const OrbitalSpace& space, const RunConfig& config);

}  // namespace sci

#endif  // SCI_SOLVER_HPP
