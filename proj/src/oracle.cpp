#include "sci/oracle.hpp"

#include <array>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include "sci/slater_condon.hpp"

namespace sci::oracle {
namespace {

// Occupation-number vector with an accumulated fermionic sign.
struct FockState {
  std::array<char, kMaxOrbitals> occ{};
  int m = 0;
  int sign = 1;

  bool annihilate(int k) {
    if (!occ[static_cast<std::size_t>(k)]) return false;
    flip_sign_for(k);
    occ[static_cast<std::size_t>(k)] = 0;
    return true;
  }
  bool create(int k) {
    if (occ[static_cast<std::size_t>(k)]) return false;
    flip_sign_for(k);
    occ[static_cast<std::size_t>(k)] = 1;
    return true;
  }
  void flip_sign_for(int k) {
    int c = 0;
    for (int l = 0; l < k; ++l) c += occ[static_cast<std::size_t>(l)];
    if (c & 1) sign = -sign;
  }
  Configuration to_config() const {
    Configuration c;
    for (int t = 0; t < m; ++t) {
      if (occ[static_cast<std::size_t>(t)]) c.set(t);
    }
    return c;
  }
};

FockState from_config(const Configuration& c, int m) {
  FockState s;
  s.m = m;
  for (int t = 0; t < m; ++t) s.occ[static_cast<std::size_t>(t)] = c.test(t) ? 1 : 0;
  return s;
}

bool same_spin(int p, int q) { return (p % 2) == (q % 2); }

double h_so(const IntegralStore& ints, int p, int q) {
  return same_spin(p, q) ? ints.h(p / 2, q / 2) : 0.0;
}

// <pq|rs> over spin orbitals, physicist notation.
double g_so(const IntegralStore& ints, int p, int q, int r, int s) {
  if (!same_spin(p, r) || !same_spin(q, s)) return 0.0;
  return ints.eri(p / 2, r / 2, q / 2, s / 2);
}

// Calls out(result, coefficient) for every nonvanishing term of H|ket>.
template <class Out>
void apply_hamiltonian(const Configuration& ket, const IntegralStore& ints, Out&& out) {
  const int m = 2 * ints.n_spatial();
  const FockState base = from_config(ket, m);
  out(ket, ints.e_core());

  // sum_pq h_pq a+_p a_q
  for (int q = 0; q < m; ++q) {
    FockState s1 = base;
    if (!s1.annihilate(q)) continue;
    for (int p = 0; p < m; ++p) {
      const double h = h_so(ints, p, q);
      if (h == 0.0) continue;
      FockState s2 = s1;
      if (!s2.create(p)) continue;
      out(s2.to_config(), s2.sign * h);
    }
  }
  // 1/2 sum_pqrs <pq|rs> a+_p a+_q a_s a_r
  for (int r = 0; r < m; ++r) {
    FockState s1 = base;
    if (!s1.annihilate(r)) continue;
    for (int s = 0; s < m; ++s) {
      FockState s2 = s1;
      if (!s2.annihilate(s)) continue;
      for (int q = 0; q < m; ++q) {
        FockState s3 = s2;
        if (!s3.create(q)) continue;
        for (int p = 0; p < m; ++p) {
          const double g = g_so(ints, p, q, r, s);
          if (g == 0.0) continue;
          FockState s4 = s3;
          if (!s4.create(p)) continue;
          out(s4.to_config(), 0.5 * s4.sign * g);
        }
      }
    }
  }
}

Eigen::VectorXd lanczos_lowest(const Eigen::SparseMatrix<double>& h, double& energy) {
  const Eigen::Index n = h.rows();
  const Eigen::Index max_steps = std::min<Eigen::Index>(n, 400);
  Eigen::MatrixXd basis(n, max_steps);
  std::vector<double> alpha, beta;

  // Deterministic dense start vector so every symmetry block is represented.
  Eigen::VectorXd v(n);
  std::uint64_t x = 0x243f6a8885a308d3ull;
  for (Eigen::Index i = 0; i < n; ++i) {
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    v[i] = 0.5 + static_cast<double>(x >> 11) * 0x1.0p-53;
  }
  v.normalize();

  Eigen::VectorXd ritz;
  for (Eigen::Index k = 0; k < max_steps; ++k) {
    basis.col(k) = v;
    Eigen::VectorXd w = h * v;
    const double a = v.dot(w);
    alpha.push_back(a);
    // full reorthogonalization, twice
    for (int pass = 0; pass < 2; ++pass) {
      w -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * w);
    }
    const double b = w.norm();

    const auto dim = static_cast<Eigen::Index>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      t(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < dim) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    energy = es.eigenvalues()[0];
    const Eigen::VectorXd y = es.eigenvectors().col(0);
    const double residual = std::abs(b * y[dim - 1]);
    if (residual < 1e-11 || b < 1e-14 || k + 1 == max_steps) {
      ritz = basis.leftCols(dim) * y;
      break;
    }
    beta.push_back(b);
    v = w / b;
  }
  return ritz.normalized();
}

}  // namespace

double operator_element(const Configuration& ci, const Configuration& cj,
                        const IntegralStore& ints) {
  if (2 * ints.n_spatial() > kOperatorMaxOrbitals) {
    throw GuardExceeded("operator oracle limited to m <= " + std::to_string(kOperatorMaxOrbitals));
  }
  double v = 0.0;
  apply_hamiltonian(cj, ints, [&](const Configuration& k, double c) {
    if (k == ci) v += c;
  });
  return v;
}

std::pair<Configuration, int> ladder(const Configuration& c, int m,
                                     const std::vector<std::pair<int, int>>& moves) {
  FockState s = from_config(c, m);
  for (const auto& [from, to] : moves) {
    if (!s.annihilate(from) || !s.create(to)) return {Configuration{}, 0};
  }
  return {s.to_config(), s.sign};
}

std::vector<Configuration> sector_basis(const OrbitalSpace& space) {
  std::vector<Configuration> out;
  std::vector<int> idx(static_cast<std::size_t>(space.n_elec));
  std::iota(idx.begin(), idx.end(), 0);
  const int n = space.n_elec;
  const int m = space.m;
  if (n > m) return out;
  while (true) {
    Configuration c;
    int alpha = 0;
    for (int t : idx) {
      c.set(t);
      alpha += (t % 2 == 0);
    }
    if (alpha == space.n_alpha()) out.push_back(c);
    // next combination in lexicographic order
    int i = n - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - n + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) {
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

FciResult fci_energy(const IntegralStore& ints, const OrbitalSpace& space) {
  if (hilbert_dimension(space) > kFciMaxDimension) {
    throw GuardExceeded("FCI oracle limited to C(m, n) <= " + std::to_string(kFciMaxDimension));
  }
  FciResult r;
  r.basis = sector_basis(space);
  const auto dim = static_cast<Eigen::Index>(r.basis.size());
  std::unordered_map<Configuration, Eigen::Index> index;
  for (Eigen::Index i = 0; i < dim; ++i) index.emplace(r.basis[static_cast<std::size_t>(i)], i);

  std::vector<Eigen::Triplet<double>> triplets;
  std::unordered_map<Eigen::Index, double> column;
  for (Eigen::Index j = 0; j < dim; ++j) {
    column.clear();
    apply_hamiltonian(r.basis[static_cast<std::size_t>(j)], ints,
                      [&](const Configuration& k, double c) {
                        auto it = index.find(k);
                        if (it != index.end()) column[it->second] += c;
                      });
    for (const auto& [row, c] : column) triplets.emplace_back(row, j, c);
  }
  Eigen::SparseMatrix<double> h(dim, dim);
  h.setFromTriplets(triplets.begin(), triplets.end());

  if (dim <= 1500) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(h)};
    r.energy = es.eigenvalues()[0];
    r.vector = es.eigenvectors().col(0);
  } else {
    r.vector = lanczos_lowest(h, r.energy);
  }
  const Configuration ref = reference_config(space);
  const auto it = std::lower_bound(r.basis.begin(), r.basis.end(), ref);
  const auto ref_pos = static_cast<Eigen::Index>(it - r.basis.begin());
  if (r.vector[ref_pos] < 0.0) r.vector = -r.vector;
  return r;
}

std::vector<std::pair<Configuration, double>> naive_coupled(const Configuration& c,
                                                            const IntegralStore& ints, int m,
                                                            double eps) {
  std::vector<int> occ, vir;
  for (int t = 0; t < m; ++t) (c.test(t) ? occ : vir).push_back(t);
  std::vector<std::pair<Configuration, double>> out;
  auto keep = [&](Configuration t) {
    const double h = slater_condon(c, t, ints);
    if (std::abs(h) > eps) out.emplace_back(t, h);
  };
  for (int p : occ) {
    for (int a : vir) {
      Configuration t = c;
      t.reset(p);
      t.set(a);
      keep(t);
    }
  }
  for (std::size_t i = 0; i < occ.size(); ++i) {
    for (std::size_t j = i + 1; j < occ.size(); ++j) {
      for (std::size_t k = 0; k < vir.size(); ++k) {
        for (std::size_t l = k + 1; l < vir.size(); ++l) {
          Configuration t = c;
          t.reset(occ[i]);
          t.reset(occ[j]);
          t.set(vir[k]);
          t.set(vir[l]);
          keep(t);
        }
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

}  // namespace sci::oracle
