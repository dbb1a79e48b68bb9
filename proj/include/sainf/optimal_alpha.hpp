#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sainf {

struct OptimalStep {
  double alpha_star;      // optimal step-size decay exponent
  double rate_exponent;   // J: the weak-convergence error decays like T^{-J}
};

namespace rate_branches {
inline double j_low(double p) { return (p - 2.0) * p / (2.0 * (3.0 * p * p + 2.0 * p - 1.0)); }
inline double j_mid(double p) { return ((2.0 * p - 1.0) - std::sqrt(3.0 * (p * p - p + 1.0))) / (2.0 * (p + 1.0)); }
inline double j_high() { return (5.0 - std::sqrt(19.0)) / 6.0; }
inline double alpha_low(double p) { return (2.0 * p * p + p - 4.0) / (3.0 * p * p + 2.0 * p - 4.0); }
inline double alpha_mid(double p) { return (std::sqrt(3.0 * (p * p - p + 1.0)) - (p + 1.0)) / (p - 2.0); }
inline double alpha_high() { return (std::sqrt(19.0) - 3.0) / 2.0; }

/// Switch point between the low and middle branches: the root of
/// j_low(p) = j_mid(p) on (2, 8), found by bisection (p0 ~ 4.6).
inline double switch_point() {
  double lo = 2.5, hi = 8.0;  // j_low < j_mid at lo, j_low > j_mid at hi
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (j_low(mid) < j_mid(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}
}  // namespace rate_branches

/// Optimal polynomial step-size exponent and the matching weak-convergence
/// rate exponent for moment order p > 2.
///
/// With i.i.d. data and linear updates the best choice sits at the boundary,
/// alpha = 0.5 + eps, with exponent min((p-2)/(4(p+1)), 1/6) (1 - 2 eps).
/// Markovian data or nonlinearity switch to a three-piece formula that
/// saturates at alpha = (sqrt(19) - 3)/2 for p >= 8.
inline OptimalStep optimal_alpha(double p, bool markovian_or_nonlinear, double eps = 1e-3) {
  if (!(p > 2.0)) throw std::invalid_argument("optimal_alpha: moment order p must exceed 2");
  if (!markovian_or_nonlinear) {
    if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("optimal_alpha: eps must lie in (0, 0.5)");
    const double base = std::min((p - 2.0) / (4.0 * (p + 1.0)), 1.0 / 6.0);
    return {0.5 + eps, base * (1.0 - 2.0 * eps)};
  }
  using namespace rate_branches;
  if (p >= 8.0) return {alpha_high(), j_high()};
  if (p >= switch_point()) return {alpha_mid(p), j_mid(p)};
  return {alpha_low(p), j_low(p)};
}

}  // namespace sainf
