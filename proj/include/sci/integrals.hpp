// integrals.hpp
#ifndef SCI_INTEGRALS_HPP
#define SCI_INTEGRALS_HPP

#include <cstddef>
#include <vector>

namespace sci {

/// Spin-free one- and two-electron integrals over spatial orbitals.
/// Two-electron integrals are in chemist notation (pq|rs) and stored once per
/// 8-fold permutation class; one-electron integrals once per symmetric pair.
class IntegralStore {
 public:
  IntegralStore() = default;
  explicit IntegralStore(int n_spatial);

  int n_spatial() const noexcept { return n_; }

  double h(int p, int q) const noexcept { return h_[pair_index(p, q)]; }
  void set_h(int p, int q, double v) noexcept { h_[pair_index(p, q)] = v; }

  double eri(int p, int q, int r, int s) const noexcept { return eri_[quad_index(p, q, r, s)]; }
  void set_eri(int p, int q, int r, int s, double v) noexcept { eri_[quad_index(p, q, r, s)] = v; }

  double e_core() const noexcept { return e_core_; }
  void set_e_core(double v) noexcept { e_core_ = v; }

  static std::size_t pair_index(int p, int q) noexcept {
    const auto a = static_cast<std::size_t>(p > q ? p : q);
    const auto b = static_cast<std::size_t>(p > q ? q : p);
    return a * (a + 1) / 2 + b;
  }
  static std::size_t quad_index(int p, int q, int r, int s) noexcept {
    const std::size_t pq = pair_index(p, q);
    const std::size_t rs = pair_index(r, s);
    return pq > rs ? pq * (pq + 1) / 2 + rs : rs * (rs + 1) / 2 + pq;
  }

  std::size_t one_body_size() const noexcept { return h_.size(); }
  std::size_t two_body_size() const noexcept { return eri_.size(); }

  /// Bytes held by the integral arrays.
  std::size_t bytes() const noexcept { return (h_.size() + eri_.size()) * sizeof(double); }

  bool all_finite() const noexcept;

  friend bool operator==(const IntegralStore&, const IntegralStore&) = default;

 private:
  int n_ = 0;
  std::vector<double> h_;
  std::vector<double> eri_;
  double e_core_ = 0.0;
};

}  // namespace sci

#endif  // SCI_INTEGRALS_HPP
