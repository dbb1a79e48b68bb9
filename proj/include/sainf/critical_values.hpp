#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sainf/inference.hpp"
#include "sainf/parallel.hpp"
#include "sainf/rng.hpp"

namespace sainf {

/// Per-order Monte-Carlo draws of f_m(W) and of its denominator h_m(W).
struct FunctionalSamples {
  FunctionalOrder m;
  std::vector<double> f;
  std::vector<double> h;
};

struct BrownianBudget {
  std::size_t steps = 1000;
  std::size_t reps = 50000;
};

/// Given breakpoint values w[k-1] = W(k/N), k = 1..N, writes h_m and f_m for
/// each order. The denominator uses the same rectangle rule as the online
/// statistic: b_k = W(k/N) - (k/N) W(1).
inline void evaluate_functionals(std::span<const double> w, std::span<const FunctionalOrder> orders,
                                 std::span<double> f_out, std::span<double> h_out) {
  const std::size_t n = w.size();
  const double w1 = w.back();
  std::vector<double> sums(orders.size(), 0.0);
  double sup = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double b = std::abs(w[k] - static_cast<double>(k + 1) / static_cast<double>(n) * w1);
    sup = std::max(sup, b);
    for (std::size_t j = 0; j < orders.size(); ++j)
      if (!orders[j].is_infinite()) sums[j] += detail::ipow(b, orders[j].value());
  }
  for (std::size_t j = 0; j < orders.size(); ++j) {
    const double h = orders[j].is_infinite() ? sup
                                              : std::pow(sums[j] / static_cast<double>(n), 1.0 / orders[j].value());
    h_out[j] = h;
    f_out[j] = w1 / h;
  }
}

/// Simulates `reps` standard Brownian paths on `steps` breakpoints (scaled
/// cumulative sums of N(0,1) draws) and evaluates every requested order on
/// the same paths. Path k draws from derive_seed(seed, brownian, k), so the
/// output does not depend on `threads`.
inline std::vector<FunctionalSamples> simulate_functionals(std::span<const FunctionalOrder> orders,
                                                           BrownianBudget budget, std::uint64_t seed,
                                                           std::size_t threads = 1) {
  if (budget.steps < 2) throw std::invalid_argument("simulate_functionals: need at least 2 steps");
  if (budget.reps < 1) throw std::invalid_argument("simulate_functionals: need at least 1 replication");
  std::vector<FunctionalSamples> out;
  for (auto m : orders) out.push_back({m, std::vector<double>(budget.reps), std::vector<double>(budget.reps)});

  const std::size_t chunk = 256;
  const std::size_t n_chunks = (budget.reps + chunk - 1) / chunk;
  parallel_for(n_chunks, threads, [&](std::size_t c) {
    std::vector<double> w(budget.steps), f(orders.size()), h(orders.size());
    const double scale = 1.0 / std::sqrt(static_cast<double>(budget.steps));
    for (std::size_t r = c * chunk; r < std::min(budget.reps, (c + 1) * chunk); ++r) {
      Rng rng = make_rng(seed, StreamTag::brownian, r);
      std::normal_distribution<double> normal(0.0, 1.0);
      double acc = 0.0;
      for (double& v : w) {
        acc += normal(rng) * scale;
        v = acc;
      }
      evaluate_functionals(w, orders, f, h);
      for (std::size_t j = 0; j < orders.size(); ++j) {
        out[j].f[r] = f[j];
        out[j].h[r] = h[j];
      }
    }
  });
  return out;
}

inline std::vector<double> simulate_fm_samples(FunctionalOrder m, BrownianBudget budget, std::uint64_t seed,
                                               std::size_t threads = 1) {
  const FunctionalOrder one[] = {m};
  return std::move(simulate_functionals(one, budget, seed, threads).front().f);
}

/// Nearest-rank (1 - alpha) quantile of |samples|: the empirical version of
/// q = sup{q : P(|f| >= q) <= alpha}.
inline double two_sided_quantile(std::span<const double> samples, double alpha) {
  if (samples.empty()) throw std::invalid_argument("two_sided_quantile: no samples");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("two_sided_quantile: alpha must lie in (0, 1]");
  std::vector<double> a(samples.size());
  std::transform(samples.begin(), samples.end(), a.begin(), [](double v) { return std::abs(v); });
  const double n = static_cast<double>(a.size());
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * n - 1e-9 * n));
  rank = std::clamp<std::size_t>(rank, 1, a.size());
  std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(rank - 1), a.end());
  return a[rank - 1];
}

/// Signed quantile at probability p of a law symmetric about zero, read off
/// the |samples| quantile so that levels p and 1 - p differ only in sign.
inline double symmetric_quantile(std::span<const double> samples, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("symmetric_quantile: p must lie in (0, 1)");
  if (std::abs(p - 0.5) < 1e-12) return 0.0;
  return p > 0.5 ? two_sided_quantile(samples, 2.0 * (1.0 - p)) : -two_sided_quantile(samples, 2.0 * p);
}

inline const std::vector<double>& standard_levels() {
  static const std::vector<double> levels{0.01, 0.025, 0.05, 0.10, 0.50, 0.90, 0.95, 0.975, 0.99};
  return levels;
}

/// Signed quantiles q_p of f_m(W) on a grid of probabilities p. The
/// two-sided critical value at tail probability alpha is q_{1 - alpha/2}.
class CriticalValueTable {
 public:
  CriticalValueTable(std::vector<double> levels, std::string provenance)
      : levels_(std::move(levels)), provenance_(std::move(provenance)) {}

  void set_row(FunctionalOrder m, std::vector<double> q) {
    if (q.size() != levels_.size()) throw std::invalid_argument("critical value row has wrong length");
    rows_.insert_or_assign(m, std::move(q));
  }

  bool has(FunctionalOrder m) const { return rows_.count(m) > 0; }

  double signed_quantile(FunctionalOrder m, double p) const {
    const auto it = rows_.find(m);
    if (it == rows_.end()) throw std::out_of_range("no critical values for m = " + m.to_string());
    for (std::size_t i = 0; i < levels_.size(); ++i)
      if (std::abs(levels_[i] - p) < 1e-9) return it->second[i];
    throw std::out_of_range("no critical value at level " + std::to_string(p) + " for m = " + m.to_string());
  }

  double two_sided(FunctionalOrder m, double alpha) const { return signed_quantile(m, 1.0 - 0.5 * alpha); }

  std::vector<FunctionalOrder> orders() const {
    std::vector<FunctionalOrder> out;
    for (const auto& [m, _] : rows_) out.push_back(m);
    return out;
  }
  const std::vector<double>& levels() const noexcept { return levels_; }
  const std::string& provenance() const noexcept { return provenance_; }

 private:
  std::vector<double> levels_;
  std::map<FunctionalOrder, std::vector<double>> rows_;
  std::string provenance_;
};

/// Published asymptotic critical values (1,000 steps, 50,000 replications).
inline CriticalValueTable embedded_table() {
  CriticalValueTable t(standard_levels(), "embedded");
  t.set_row(FunctionalOrder(1), {-10.705, -8.334, -6.569, -4.749, 0.0, 4.749, 6.569, 8.334, 10.705});
  t.set_row(FunctionalOrder(2), {-8.628, -6.758, -5.316, -3.873, 0.0, 3.873, 5.316, 6.758, 8.628});
  t.set_row(FunctionalOrder(3), {-7.495, -5.899, -4.650, -3.403, 0.0, 3.403, 4.650, 5.899, 7.495});
  t.set_row(FunctionalOrder(4), {-6.798, -5.344, -4.232, -3.108, 0.0, 3.108, 4.232, 5.344, 6.798});
  t.set_row(FunctionalOrder(6), {-5.969, -4.705, -3.728, -2.754, 0.0, 2.754, 3.728, 4.705, 5.969});
  t.set_row(FunctionalOrder::infinity(), {-3.408, -2.711, -2.175, -1.626, 0.0, 1.626, 2.175, 2.711, 3.408});
  return t;
}

inline std::string simulated_provenance(BrownianBudget budget, std::uint64_t seed) {
  return "simulated(steps=" + std::to_string(budget.steps) + " reps=" + std::to_string(budget.reps) +
         " seed=" + std::to_string(seed) + ")";
}

inline CriticalValueTable simulated_table(std::span<const FunctionalOrder> orders, std::vector<double> levels,
                                          BrownianBudget budget, std::uint64_t seed, std::size_t threads = 1) {
  const auto samples = simulate_functionals(orders, budget, seed, threads);
  CriticalValueTable t(levels, simulated_provenance(budget, seed));
  for (const auto& s : samples) {
    std::vector<double> row;
    for (double p : levels) row.push_back(symmetric_quantile(s.f, p));
    t.set_row(s.m, std::move(row));
  }
  return t;
}

// CSV schema: m,level,q,provenance  (one row per (m, level), m ascending with inf last)
inline void write_critical_values_csv(std::ostream& os, const CriticalValueTable& t) {
  os << "m,level,q,provenance\n";
  char buf[64];
  for (auto m : t.orders())
    for (double p : t.levels()) {
      std::snprintf(buf, sizeof buf, "%.6g,%.6g", p, t.signed_quantile(m, p));
      os << m.to_string() << ',' << buf << ',' << t.provenance() << '\n';
    }
}

inline CriticalValueTable read_critical_values_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("m,level,q", 0) != 0)
    throw std::runtime_error("critical value csv: missing header");
  std::map<FunctionalOrder, std::map<double, double>> cells;
  std::vector<double> levels;
  std::string provenance;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string m, p, q;
    if (!std::getline(ss, m, ',') || !std::getline(ss, p, ',') || !std::getline(ss, q, ','))
      throw std::runtime_error("critical value csv: malformed row: " + line);
    std::getline(ss, provenance);
    const double level = std::stod(p);
    if (std::find(levels.begin(), levels.end(), level) == levels.end()) levels.push_back(level);
    cells[FunctionalOrder::parse(m)][level] = std::stod(q);
  }
  std::sort(levels.begin(), levels.end());
  CriticalValueTable t(levels, provenance);
  for (const auto& [m, row] : cells) {
    std::vector<double> q;
    for (double l : levels) {
      const auto it = row.find(l);
      if (it == row.end()) throw std::runtime_error("critical value csv: missing level for m = " + m.to_string());
      q.push_back(it->second);
    }
    t.set_row(m, std::move(q));
  }
  return t;
}

enum class DensityRange { symmetric, positive };

/// Equal-width histogram whose bin masses sum to one.
struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> mass;

  double bin_width() const noexcept { return (hi - lo) / static_cast<double>(mass.size()); }
  double left(std::size_t i) const noexcept { return lo + static_cast<double>(i) * bin_width(); }
  double density(std::size_t i) const noexcept { return mass[i] / bin_width(); }
};

/// Range is [-R, R] with R = max |x| (symmetric), or [0, max x] (positive,
/// for denominator samples h_m(W)); every sample lands in a bin.
inline Histogram empirical_density(std::span<const double> samples, std::size_t bins,
                                   DensityRange range = DensityRange::symmetric) {
  if (bins < 2) throw std::invalid_argument("empirical_density: need at least 2 bins");
  if (samples.empty()) throw std::invalid_argument("empirical_density: no samples");
  double r = 0.0;
  for (double v : samples) r = std::max(r, std::abs(v));
  if (r == 0.0) r = 1.0;
  Histogram hist{range == DensityRange::symmetric ? -r : 0.0, r, std::vector<double>(bins, 0.0)};
  const double width = hist.bin_width();
  const double unit = 1.0 / static_cast<double>(samples.size());
  for (double v : samples) {
    auto i = static_cast<std::ptrdiff_t>(std::floor((v - hist.lo) / width));
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    hist.mass[static_cast<std::size_t>(i)] += unit;
  }
  return hist;
}

struct DensityRow {
  std::string kind;  // "f" or "h"
  FunctionalOrder m;
  Histogram hist;
};

// CSV schema: kind,m,bin_left,bin_right,mass,density
inline void write_density_csv(std::ostream& os, std::span<const DensityRow> rows) {
  os << "kind,m,bin_left,bin_right,mass,density\n";
  char buf[128];
  for (const auto& row : rows) {
    const auto& h = row.hist;
    for (std::size_t i = 0; i < h.mass.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g,%.6g", h.left(i), h.left(i) + h.bin_width(), h.mass[i],
                    h.density(i));
      os << row.kind << ',' << row.m.to_string() << ',' << buf << '\n';
    }
  }
}

}  // namespace sainf
