#include "sci/integrals.hpp"

#include <algorithm>
#include <cmath>

namespace sci {

IntegralStore::IntegralStore(int n_spatial) : n_(n_spatial) {
  const auto n = static_cast<std::size_t>(n_spatial);
  const std::size_t pairs = n * (n + 1) / 2;
  h_.assign(pairs, 0.0);
  eri_.assign(pairs * (pairs + 1) / 2, 0.0);
}

bool IntegralStore::all_finite() const noexcept {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::isfinite(e_core_) && std::all_of(h_.begin(), h_.end(), finite) &&
         std::all_of(eri_.begin(), eri_.end(), finite);
}

}  // namespace sci
