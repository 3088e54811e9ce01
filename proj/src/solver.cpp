#include "sci/solver.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "sci/parallel.hpp"
#include "sci/slater_condon.hpp"

namespace sci {

namespace {

bool contains(std::span<const Configuration> sorted, const Configuration& c) {
  return std::binary_search(sorted.begin(), sorted.end(), c);
}

void fix_sign(Eigen::VectorXd& v, std::size_t sign_index) {
  if (v.size() == 0) return;
  double pivot = sign_index < static_cast<std::size_t>(v.size()) ? v(static_cast<Eigen::Index>(sign_index)) : 0.0;
  if (pivot == 0.0) {
    Eigen::Index k;
    v.cwiseAbs().maxCoeff(&k);
    pivot = v(k);
  }
  if (pivot < 0.0) v = -v;
}

SubspaceSolution dense_solve(const Eigen::SparseMatrix<double>& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(h)};
  if (es.info() != Eigen::Success) throw EigensolverNotConverged("dense eigensolver failed", 0.0);
  SubspaceSolution s;
  s.energy = es.eigenvalues()(0);
  s.psi = es.eigenvectors().col(0).normalized();
  s.residual = (h * s.psi - s.energy * s.psi).norm();
  s.dense = true;
  return s;
}

// Block-size-one Davidson with diagonal preconditioning and thick restart
// onto the current Ritz vector.
SubspaceSolution davidson(const Eigen::SparseMatrix<double>& h, const EigenOptions& opts,
                          const Eigen::VectorXd& guess) {
  const Eigen::Index n = h.rows();
  const Eigen::VectorXd diag = h.diagonal();
  Eigen::VectorXd x0;
  if (guess.size() == n && guess.norm() > 0.0) {
    x0 = guess.normalized();
  } else {
    Eigen::Index k;
    diag.minCoeff(&k);
    x0 = Eigen::VectorXd::Unit(n, k);
  }
  const auto cap = static_cast<Eigen::Index>(std::max<std::size_t>(opts.max_subspace, 4));
  Eigen::MatrixXd v(n, cap), av(n, cap);
  v.col(0) = x0;
  av.col(0) = h * x0;
  Eigen::Index k = 1;

  SubspaceSolution s;
  s.dense = false;
  double rnorm = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iters; ++it) {
    const Eigen::MatrixXd t = v.leftCols(k).transpose() * av.leftCols(k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (t + t.transpose()));
    const double theta = es.eigenvalues()(0);
    const Eigen::VectorXd y = es.eigenvectors().col(0);
    Eigen::VectorXd x = v.leftCols(k) * y;
    Eigen::VectorXd ax = av.leftCols(k) * y;
    const Eigen::VectorXd r = ax - theta * x;
    rnorm = r.norm();
    s.iterations = it;
    if (rnorm < opts.tol) {
      s.energy = theta;
      s.psi = x.normalized();
      s.residual = rnorm;
      return s;
    }
    if (k == cap) {
      const double nx = x.norm();
      v.col(0) = x / nx;
      av.col(0) = ax / nx;
      k = 1;
    }
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double d = diag(i) - theta;
      if (std::abs(d) < 1e-12) d = d < 0 ? -1e-12 : 1e-12;
      c(i) = -r(i) / d;
    }
    for (int pass = 0; pass < 2; ++pass) c -= v.leftCols(k) * (v.leftCols(k).transpose() * c);
    double cn = c.norm();
    if (cn < 1e-14) {
      c = r;
      for (int pass = 0; pass < 2; ++pass) c -= v.leftCols(k) * (v.leftCols(k).transpose() * c);
      cn = c.norm();
      if (cn < 1e-14) break;
    }
    v.col(k) = c / cn;
    av.col(k) = h * v.col(k);
    ++k;
  }
  throw EigensolverNotConverged("Davidson did not converge: residual " + std::to_string(rnorm) + " after " +
                                    std::to_string(s.iterations) + " iterations",
                                rnorm);
}

}  // namespace

Eigen::SparseMatrix<double> subspace_hamiltonian(std::span<const Configuration> space,
                                                 const ExcitationTables& tables,
                                                 const IntegralStore& ints, double eps, unsigned threads) {
  const auto n = static_cast<Eigen::Index>(space.size());
  GenOptions gen;
  gen.eps = eps;
  gen.threads = threads;
  const auto records = generate_coupled(space, tables, ints, gen);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(space.size() + records.size() / 4);
  for (std::size_t i = 0; i < space.size(); ++i) {
    trips.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i), diagonal_element(space[i], ints));
  }
  for (const auto& r : records) {
    const auto it = std::lower_bound(space.begin(), space.end(), r.target);
    if (it == space.end() || *it != r.target) continue;
    trips.emplace_back(static_cast<Eigen::Index>(r.source_idx), static_cast<Eigen::Index>(it - space.begin()),
                       r.element);
  }
  Eigen::SparseMatrix<double> h(n, n);
  h.setFromTriplets(trips.begin(), trips.end());
  return h;
}

SubspaceSolution lowest_eigenpair(const Eigen::SparseMatrix<double>& h, const EigenOptions& opts,
                                  const Eigen::VectorXd& guess, std::size_t sign_index) {
  if (h.rows() == 0 || h.rows() != h.cols()) throw std::invalid_argument("eigensolver needs a non-empty square matrix");
  SubspaceSolution s = static_cast<std::size_t>(h.rows()) <= opts.dense_max ? dense_solve(h) : davidson(h, opts, guess);
  fix_sign(s.psi, sign_index);
  return s;
}

SubspaceSolution subspace_eigensolve(std::span<const Configuration> space, const Configuration& reference,
                                     const ExcitationTables& tables, const IntegralStore& ints, double eps,
                                     const EigenOptions& opts, const Eigen::VectorXd& guess, unsigned threads) {
  if (space.empty()) throw std::invalid_argument("selected space is empty");
  const auto it = std::lower_bound(space.begin(), space.end(), reference);
  const std::size_t ref = (it != space.end() && *it == reference) ? static_cast<std::size_t>(it - space.begin())
                                                                   : space.size();
  return lowest_eigenpair(subspace_hamiltonian(space, tables, ints, eps, threads), opts, guess, ref);
}

PerturbativeOracle::PerturbativeOracle(std::span<const Configuration> space, std::span<const double> psi,
                                       double energy, const ExcitationTables& tables, const IntegralStore& ints)
    : space_(space), psi_(psi), energy_(energy), tables_(tables), ints_(ints) {
  if (space.size() != psi.size()) throw std::invalid_argument("amplitudes do not cover the selected space");
}

void PerturbativeOracle::estimate(std::span<const Configuration> batch, std::span<double> out) const {
  if (out.size() != batch.size()) throw std::invalid_argument("output span does not match batch");
  parallel_for(batch.size(), thread_limit(), [&](std::size_t k) {
    const Configuration& j = batch[k];
    const auto it = std::lower_bound(space_.begin(), space_.end(), j);
    if (it != space_.end() && *it == j) {
      out[k] = psi_[static_cast<std::size_t>(it - space_.begin())];
      return;
    }
    const SourceView view(j);
    const VirtualSpace vs = virtual_space(j.popcount(), tables_.max_single_size(), tables_.max_double_size());
    double num = 0.0;
    for_each_coupled(view, vs, tables_, ints_, 0.0, [&](const Configuration& i, double h) {
      const auto si = std::lower_bound(space_.begin(), space_.end(), i);
      if (si != space_.end() && *si == i) num += h * psi_[static_cast<std::size_t>(si - space_.begin())];
    });
    double den = energy_ - diagonal_element(j, ints_);
    if (std::abs(den) < kDenominatorFloor) den = std::signbit(den) ? -kDenominatorFloor : kDenominatorFloor;
    out[k] = num / den;
  });
}

std::vector<double> estimate_amplitudes(std::span<const Configuration> unique,
                                        std::span<const Configuration> space, std::span<const double> psi,
                                        double energy, const ExcitationTables& tables,
                                        const IntegralStore& ints) {
  std::vector<double> out(unique.size());
  PerturbativeOracle(space, psi, energy, tables, ints).estimate(unique, out);
  return out;
}

void topk_update(TopKState& state, std::span<const Configuration> configs, std::span<const double> amplitudes,
                 std::span<const Configuration> space) {
  if (configs.size() != amplitudes.size()) throw std::invalid_argument("top-K batch sizes differ");
  if (state.capacity == 0) return;
  std::vector<TopKEntry> batch;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    if (contains(space, configs[k])) continue;
    const TopKEntry e{std::abs(amplitudes[k]), configs[k]};
    if (state.entries.size() == state.capacity && !topk_before(e, state.entries.back())) continue;
    batch.push_back(e);
  }
  const std::size_t keep = std::min(batch.size(), state.capacity);
  std::partial_sort(batch.begin(), batch.begin() + static_cast<std::ptrdiff_t>(keep), batch.end(), topk_before);
  batch.resize(keep);
  std::vector<TopKEntry> merged;
  merged.reserve(state.entries.size() + batch.size());
  std::merge(state.entries.begin(), state.entries.end(), batch.begin(), batch.end(), std::back_inserter(merged),
             topk_before);
  if (merged.size() > state.capacity) merged.resize(state.capacity);
  state.entries = std::move(merged);
}

TopKState topk_merge(const TopKState& a, const TopKState& b) {
  if (a.capacity != b.capacity) throw std::invalid_argument("top-K capacities differ");
  TopKState out{a.capacity, {}};
  std::vector<TopKEntry> merged;
  std::merge(a.entries.begin(), a.entries.end(), b.entries.begin(), b.entries.end(), std::back_inserter(merged),
             topk_before);
  for (const auto& e : merged) {
    if (out.entries.size() == out.capacity) break;
    out.entries.push_back(e);
  }
  return out;
}

double evaluate_energy(std::span<const CoupledRecord> records, std::span<const Configuration> unique,
                       std::span<const double> unique_amplitudes, std::span<const Configuration> space,
                       std::span<const double> psi, const IntegralStore& ints) {
  if (psi.size() != space.size()) throw std::invalid_argument("missing amplitude for a selected configuration");
  if (unique_amplitudes.size() != unique.size()) throw std::invalid_argument("unique amplitudes incomplete");
  std::vector<std::uint8_t> in_s(unique.size());
  for (std::size_t k = 0; k < unique.size(); ++k) in_s[k] = contains(space, unique[k]) ? 1 : 0;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    num += psi[i] * psi[i] * diagonal_element(space[i], ints);
    den += psi[i] * psi[i];
  }
  num += coupling_sum(records, jit_reverse_index(records, unique), psi, unique_amplitudes, in_s);
  if (!(den > 0.0)) throw std::invalid_argument("amplitudes have zero norm");
  return num / den;
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::kTolerance: return "tolerance";
    case StopReason::kFixedPoint: return "fixed_point";
    case StopReason::kMaxIterations: return "max_iterations";
  }
  return "unknown";
}

SciResult sci_iterate(const IntegralStore& ints, const OrbitalSpace& space, const RunConfig& config) {
  space.validate();
  if (space.n_spatial() != ints.n_spatial()) throw std::invalid_argument("orbital count does not match the integrals");
  if (config.ranks < 1) throw std::invalid_argument("rank count must be positive");
  if (config.max_iters < 0) throw std::invalid_argument("iteration limit must be non-negative");
  if (!(config.tol > 0.0)) throw std::invalid_argument("convergence tolerance must be positive");

  const ExcitationTables tables = build_tables(ints, space);
  const Configuration reference = reference_config(space);

  SciResult res;
  res.space = {reference};
  SubspaceSolution sol = subspace_eigensolve(res.space, reference, tables, ints, config.eps_gen, config.eigen, {},
                                             config.threads);
  res.initial_energy = res.energy = sol.energy;
  res.psi = sol.psi;

  PipelineConfig pc;
  pc.ranks = config.ranks;
  pc.samples = config.samples;
  pc.eps = config.eps_gen;
  pc.budget_bytes = config.budget_bytes;
  pc.overlap = config.overlap;
  pc.spill_dir = config.spill_dir;
  pc.threads = config.threads;

  int quiet = 0;
  for (int t = 1; t <= config.max_iters; ++t) {
    const std::vector<double> psi(res.psi.data(), res.psi.data() + res.psi.size());
    const PerturbativeOracle oracle(res.space, psi, res.energy, tables, ints);
    std::vector<TopKState> local(static_cast<std::size_t>(config.ranks), TopKState{config.topk, {}});
    const PipelineResult pr = run_pipeline(
        res.space, psi, tables, ints, pc,
        [&](std::span<const Configuration> batch, std::span<double> out) { oracle.estimate(batch, out); },
        [&](int rank, std::span<const Configuration> batch, std::span<const double> amps,
            std::span<const std::uint8_t>) { topk_update(local[static_cast<std::size_t>(rank)], batch, amps, res.space); });

    // Barrier 2: rank-local selections merge into the global top-K.
    TopKState global{config.topk, {}};
    for (const auto& l : local) global = topk_merge(global, l);

    EnergyReport rep;
    rep.iteration = t;
    rep.stage3_energy = pr.energy;
    rep.unique = pr.unique.size();
    rep.generated = pr.generated;
    rep.redundancy = pr.generated ? 1.0 - static_cast<double>(pr.unique.size()) / static_cast<double>(pr.generated) : 0.0;
    rep.peak_working_bytes = pr.trace.peak_working_bytes;
    rep.reserved_bytes = pr.trace.reserved_bytes;
    rep.balance = pr.balance;
    rep.added = global.entries.size();

    if (global.entries.empty()) {
      rep.energy = res.energy;
      rep.space_size = res.space.size();
      rep.delta = 0.0;
      res.reports.push_back(rep);
      res.converged = true;
      res.reason = StopReason::kFixedPoint;
      return res;
    }

    std::vector<std::pair<Configuration, double>> grown;
    grown.reserve(res.space.size() + global.entries.size());
    for (std::size_t i = 0; i < res.space.size(); ++i) grown.emplace_back(res.space[i], psi[i]);
    for (const auto& e : global.entries) {
      const auto u = std::lower_bound(pr.unique.begin(), pr.unique.end(), e.config);
      grown.emplace_back(e.config, pr.unique_amplitudes[static_cast<std::size_t>(u - pr.unique.begin())]);
    }
    std::sort(grown.begin(), grown.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    res.space.clear();
    Eigen::VectorXd guess(static_cast<Eigen::Index>(grown.size()));
    for (std::size_t i = 0; i < grown.size(); ++i) {
      res.space.push_back(grown[i].first);
      guess(static_cast<Eigen::Index>(i)) = grown[i].second;
    }

    sol = subspace_eigensolve(res.space, reference, tables, ints, config.eps_gen, config.eigen, guess, config.threads);
    rep.energy = sol.energy;
    rep.delta = sol.energy - res.energy;
    rep.space_size = res.space.size();
    res.reports.push_back(rep);
    res.energy = sol.energy;
    res.psi = sol.psi;

    quiet = std::abs(rep.delta) < config.tol ? quiet + 1 : 0;
    if (quiet >= required_quiet_iterations(config.tol)) {
      res.converged = true;
      res.reason = StopReason::kTolerance;
      return res;
    }
  }
  res.reason = StopReason::kMaxIterations;
  return res;
}

}  // namespace sci
