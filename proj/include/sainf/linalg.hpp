#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace sainf {

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// y += a * x
inline void axpy(double a, std::span<const double> x, std::span<double> y) noexcept {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline bool all_finite(std::span<const double> x) noexcept {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

inline double norm2(std::span<const double> x) noexcept { return std::sqrt(dot(x, x)); }

/// `n` points evenly spread over [lo, hi], endpoints included.
inline Vec linspace(double lo, double hi, std::size_t n) {
  Vec out(n, lo);
  if (n < 2) return out;
  for (std::size_t i = 0; i < n; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

/// Linear functional estimand = scale * <unit, x>, with `unit` of Euclidean
/// norm one. Inference runs on the unit direction; reported intervals are
/// multiplied back by `scale`.
struct Projection {
  Vec unit;
  double scale = 1.0;

  static Projection from_raw(Vec raw) {
    const double n = norm2(raw);
    assert(n > 0.0);
    for (double& v : raw) v /= n;
    return Projection{std::move(raw), n};
  }

  /// (1, ..., 1) / sqrt(d).
  static Projection ones_normalized(std::size_t d) {
    return Projection{Vec(d, 1.0 / std::sqrt(static_cast<double>(d))), 1.0};
  }

  /// Plain average over d entries: raw weights 1/d, stored as unit 1/sqrt(d)
  /// with scale 1/sqrt(d).
  static Projection uniform_average(std::size_t d) {
    return from_raw(Vec(d, 1.0 / static_cast<double>(d)));
  }

  double project(std::span<const double> x) const noexcept { return dot(unit, x); }
  double estimand(std::span<const double> x) const noexcept { return scale * project(x); }
};

}  // namespace sainf
