#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sainf {

/// Index m of the normalizing functional f_m. m = infinity uses the
/// sup norm of the centered partial-sum process.
class FunctionalOrder {
 public:
  constexpr explicit FunctionalOrder(int m) : m_(m) {
    if (m < 1) throw std::invalid_argument("functional order must be >= 1 or infinite");
  }
  static constexpr FunctionalOrder infinity() noexcept { return FunctionalOrder(kInf, 0); }

  /// "1", "2", ..., or "inf".
  static FunctionalOrder parse(std::string_view s) {
    if (s == "inf" || s == "infinity" || s == "Inf") return infinity();
    int m = 0;
    for (char c : s) {
      if (c < '0' || c > '9' || m > 1000) throw std::invalid_argument("bad functional order: " + std::string(s));
      m = m * 10 + (c - '0');
    }
    if (s.empty()) throw std::invalid_argument("empty functional order");
    return FunctionalOrder(m);
  }

  constexpr bool is_infinite() const noexcept { return m_ == kInf; }
  constexpr bool is_even() const noexcept { return !is_infinite() && m_ % 2 == 0; }
  constexpr int value() const noexcept { return m_; }
  std::string to_string() const { return is_infinite() ? "inf" : std::to_string(m_); }

  constexpr auto operator<=>(const FunctionalOrder&) const = default;

 private:
  static constexpr int kInf = std::numeric_limits<int>::max();
  constexpr FunctionalOrder(int m, int) noexcept : m_(m) {}
  int m_;
};

namespace detail {
inline std::vector<std::vector<double>> pascal(int n) {
  std::vector<std::vector<double>> c(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    c[i].assign(static_cast<std::size_t>(i) + 1, 1.0);
    for (int k = 1; k < i; ++k) c[i][k] = c[i - 1][k - 1] + c[i - 1][k];
  }
  return c;
}

inline double ipow(double x, int k) noexcept {
  double r = 1.0;
  for (; k > 0; --k) r *= x;
  return r;
}
}  // namespace detail

/// O(m) per-step accumulator for the rectangle-rule random-scaling
/// quantity with even m:
///
///   sigma_{m,T}^m = (1/T) sum_{n<=T} ((n / sqrt(T)) (ybar_n - ybar_T))^m
///                 = T^{-(m/2+1)} sum_k C(m,k) (-ybar_T)^{m-k} S_k,
///   S_k = sum_{n<=t} n^m ybar_n^k.
///
/// The sums are stored relative to a shift c (S_k about c) that is moved to
/// the latest ybar whenever t hits a power of two. Expanding about a point
/// close to ybar_T keeps the final binomial sum free of the cancellation
/// that the raw sums suffer when |ybar| is large next to its fluctuations.
class RandomScalingAccumulator {
 public:
  explicit RandomScalingAccumulator(int m) : m_(m), binom_(detail::pascal(m)), sums_(static_cast<std::size_t>(m) + 1, 0.0) {
    if (m < 2 || m % 2 != 0) throw std::invalid_argument("online accumulator needs an even order m >= 2");
  }

  void update(double ybar) {
    if (t_ == 0) shift_ = ybar;
    ++t_;
    const double w = std::pow(static_cast<double>(t_), m_);
    const double d = ybar - shift_;
    double p = w;
    for (int k = 0; k <= m_; ++k) {
      sums_[k] += p;
      p *= d;
    }
    if ((t_ & (t_ - 1)) == 0 && t_ > 1) recenter(ybar);
  }

  /// sigma_{m,T} evaluated at T = t() with final average `ybar_T`.
  double sigma(double ybar_T) const {
    const double v = power_sum(ybar_T) / std::pow(static_cast<double>(t_), 0.5 * m_ + 1.0);
    return std::pow(std::max(0.0, v), 1.0 / m_);
  }

  /// True when the binomial sum came out below -1e-9 times the magnitude
  /// of its terms, i.e. the clamp in sigma() hid more than rounding noise.
  bool cancellation_suspect(double ybar_T) const {
    const double delta = ybar_T - shift_;
    double scale = 0.0;
    for (int k = 0; k <= m_; ++k) scale += binom_[m_][k] * detail::ipow(std::abs(delta), m_ - k) * std::abs(sums_[k]);
    return power_sum(ybar_T) < -1e-9 * scale;
  }

  /// S_k = sum_n n^m ybar_n^k, k = 0..m, re-expanded about zero.
  std::vector<double> raw_sums() const {
    std::vector<double> out(sums_.size(), 0.0);
    for (int k = 0; k <= m_; ++k)
      for (int j = 0; j <= k; ++j) out[k] += binom_[k][j] * detail::ipow(shift_, k - j) * sums_[j];
    return out;
  }

  int order() const noexcept { return m_; }
  std::uint64_t t() const noexcept { return t_; }

 private:
  // sum_n n^m (ybar_n - ybar_T)^m, before normalization
  double power_sum(double ybar_T) const {
    if (t_ == 0) throw std::invalid_argument("sigma: accumulator is empty (T = 0)");
    const double neg = -(ybar_T - shift_);
    double total = 0.0;
    for (int k = 0; k <= m_; ++k) total += binom_[m_][k] * detail::ipow(neg, m_ - k) * sums_[k];
    return total;
  }

  void recenter(double c) {
    const double delta = shift_ - c;
    std::vector<double> next(sums_.size(), 0.0);
    for (int k = 0; k <= m_; ++k)
      for (int j = 0; j <= k; ++j) next[k] += binom_[k][j] * detail::ipow(delta, k - j) * sums_[j];
    sums_ = std::move(next);
    shift_ = c;
  }

  int m_;
  std::vector<std::vector<double>> binom_;
  std::vector<double> sums_;
  double shift_ = 0.0;
  std::uint64_t t_ = 0;
};

/// Stored sequence ybar_n = theta' xbar_n, n = 1..T.
class ProjectedTrajectory {
 public:
  void push(double ybar) { ybar_.push_back(ybar); }
  void reserve(std::size_t n) { ybar_.reserve(n); }
  std::size_t size() const noexcept { return ybar_.size(); }
  bool empty() const noexcept { return ybar_.empty(); }
  std::span<const double> values() const noexcept { return ybar_; }
  /// First n entries, i.e. the trajectory as it stood at T = n.
  std::span<const double> prefix(std::size_t n) const { return std::span<const double>(ybar_).first(n); }

 private:
  std::vector<double> ybar_;
};

namespace detail {
inline void require_nonempty(std::span<const double> ybar, const char* who) {
  if (ybar.empty()) throw std::invalid_argument(std::string(who) + ": empty trajectory");
}

// phi_n = (n / sqrt(T)) (ybar_n - ybar_T), n = 1..T
inline std::vector<double> centered_process(std::span<const double> ybar) {
  const double T = static_cast<double>(ybar.size());
  const double last = ybar.back();
  const double inv_sqrt = 1.0 / std::sqrt(T);
  std::vector<double> phi(ybar.size());
  for (std::size_t i = 0; i < ybar.size(); ++i) phi[i] = static_cast<double>(i + 1) * inv_sqrt * (ybar[i] - last);
  return phi;
}
}  // namespace detail

/// Rectangle rule over the breakpoints: [(1/T) sum |phi_n|^m]^{1/m}, or
/// max |phi_n| for m = infinity (the sup of the piecewise-linear process is
/// attained at a breakpoint).
inline double sigma_offline(std::span<const double> ybar, FunctionalOrder m) {
  detail::require_nonempty(ybar, "sigma_offline");
  const auto phi = detail::centered_process(ybar);
  if (m.is_infinite()) {
    double mx = 0.0;
    for (double v : phi) mx = std::max(mx, std::abs(v));
    return mx;
  }
  const int k = m.value();
  double total = 0.0;
  for (double v : phi) total += detail::ipow(std::abs(v), k);
  return std::pow(total / static_cast<double>(phi.size()), 1.0 / k);
}

/// Exact m = 2 integral of the piecewise-linear continuization, phi_0 = 0:
/// sqrt( sum_{n=0}^{T-1} (phi_n^2 + phi_n phi_{n+1} + phi_{n+1}^2) / (3T) ).
inline double sigma_trapezoid_m2(std::span<const double> ybar) {
  detail::require_nonempty(ybar, "sigma_trapezoid_m2");
  const auto phi = detail::centered_process(ybar);
  double prev = 0.0;
  double total = 0.0;
  for (double cur : phi) {
    total += prev * prev + prev * cur + cur * cur;
    prev = cur;
  }
  return std::sqrt(total / (3.0 * static_cast<double>(phi.size())));
}

/// Exact m = 1 integral of |piecewise-linear process|, splitting segments
/// at their zero crossing.
inline double sigma_exact_m1(std::span<const double> ybar) {
  detail::require_nonempty(ybar, "sigma_exact_m1");
  const auto phi = detail::centered_process(ybar);
  double prev = 0.0;
  double total = 0.0;
  for (double cur : phi) {
    const double a = std::abs(prev), b = std::abs(cur);
    if (prev * cur >= 0.0)
      total += 0.5 * (a + b);
    else
      total += 0.5 * (a * a + b * b) / (a + b);
    prev = cur;
  }
  return total / static_cast<double>(phi.size());
}

class DegeneratePivotError : public std::domain_error {
 public:
  DegeneratePivotError() : std::domain_error("f_m statistic: normalizer sigma is zero") {}
};

/// f_m = sqrt(T) (ybar_T - target) / sigma_{m,T}.
inline double f_m_statistic(double ybar_T, double target, double sigma, std::uint64_t T) {
  if (!(sigma > 0.0)) throw DegeneratePivotError();
  return std::sqrt(static_cast<double>(T)) * (ybar_T - target) / sigma;
}

struct ConfidenceInterval {
  double center = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  std::optional<FunctionalOrder> m;

  double halfwidth() const noexcept { return 0.5 * (upper - lower); }
  double length() const noexcept { return upper - lower; }
  bool degenerate() const noexcept { return !(upper > lower); }
  bool contains(double v) const noexcept { return lower <= v && v <= upper; }

  /// The interval for s * (estimand); s > 0.
  ConfidenceInterval scaled(double s) const {
    ConfidenceInterval out = *this;
    out.center *= s;
    out.lower *= s;
    out.upper *= s;
    return out;
  }
};

/// [ybar_T - q sigma / sqrt(T), ybar_T + q sigma / sqrt(T)].
inline ConfidenceInterval confidence_interval(double ybar_T, double sigma, double q, std::uint64_t T, double level,
                                              std::optional<FunctionalOrder> m = std::nullopt) {
  if (T == 0) throw std::invalid_argument("confidence_interval: T must be >= 1");
  if (!(q >= 0.0)) throw std::invalid_argument("confidence_interval: critical value must be >= 0");
  if (!(sigma >= 0.0)) throw std::invalid_argument("confidence_interval: sigma must be >= 0");
  const double hw = q * sigma / std::sqrt(static_cast<double>(T));
  return ConfidenceInterval{ybar_T, ybar_T - hw, ybar_T + hw, level, m};
}

}  // namespace sainf
