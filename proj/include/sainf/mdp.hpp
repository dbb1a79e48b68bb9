#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sainf/rng.hpp"

namespace sainf {

/// Finite discounted MDP. State-action pairs are laid out lexicographically,
/// index(s, a) = s * n_actions + a, both for rewards and for Q-tables.
struct MDP {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  double gamma = 0.0;
  std::vector<double> P;  // P[(s * n_actions + a) * n_states + s']
  std::vector<double> r;  // mean reward per (s, a)

  std::size_t pair(std::size_t s, std::size_t a) const noexcept { return s * n_actions + a; }

  std::span<const double> transition_row(std::size_t s, std::size_t a) const noexcept {
    return {P.data() + pair(s, a) * n_states, n_states};
  }

  double reward(std::size_t s, std::size_t a) const noexcept { return r[pair(s, a)]; }

  void validate() const {
    if (n_states == 0 || n_actions == 0) throw std::invalid_argument("mdp: empty state or action set");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("mdp: gamma must lie in [0, 1)");
    if (P.size() != n_states * n_actions * n_states || r.size() != n_states * n_actions)
      throw std::invalid_argument("mdp: array sizes do not match dimensions");
    for (std::size_t sa = 0; sa < n_states * n_actions; ++sa) {
      double total = 0.0;
      for (std::size_t s2 = 0; s2 < n_states; ++s2) {
        const double p = P[sa * n_states + s2];
        if (!(p >= 0.0)) throw std::invalid_argument("mdp: negative transition probability");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("mdp: transition row does not sum to 1");
      if (!(r[sa] >= 0.0 && r[sa] <= 1.0)) throw std::invalid_argument("mdp: mean reward outside [0, 1]");
    }
  }
};

class QTable {
 public:
  QTable() = default;
  QTable(std::size_t n_states, std::size_t n_actions, double fill = 0.0)
      : n_states_(n_states), n_actions_(n_actions), values_(n_states * n_actions, fill) {}

  double& operator()(std::size_t s, std::size_t a) noexcept { return values_[s * n_actions_ + a]; }
  double operator()(std::size_t s, std::size_t a) const noexcept { return values_[s * n_actions_ + a]; }

  double max_value(std::size_t s) const noexcept {
    const auto row = values_.begin() + static_cast<std::ptrdiff_t>(s * n_actions_);
    return *std::max_element(row, row + static_cast<std::ptrdiff_t>(n_actions_));
  }

  std::size_t greedy_action(std::size_t s) const noexcept {
    const auto row = values_.begin() + static_cast<std::ptrdiff_t>(s * n_actions_);
    return static_cast<std::size_t>(
        std::max_element(row, row + static_cast<std::ptrdiff_t>(n_actions_)) - row);
  }

  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t n_actions() const noexcept { return n_actions_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

 private:
  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<double> values_;
};

/// Mean rewards ~ U[0, 1]; each row P(.|s, a) = u / sum(u) with u ~ U(0, 1)^S.
inline MDP random_mdp(std::size_t n_states, std::size_t n_actions, double gamma, Rng& rng) {
  if (n_states == 0 || n_actions == 0) throw std::invalid_argument("random_mdp: sizes must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("random_mdp: gamma must lie in [0, 1)");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  MDP mdp{n_states, n_actions, gamma, std::vector<double>(n_states * n_actions * n_states),
          std::vector<double>(n_states * n_actions)};
  for (std::size_t sa = 0; sa < n_states * n_actions; ++sa) {
    mdp.r[sa] = unif(rng);
    double* row = mdp.P.data() + sa * n_states;
    double total = 0.0;
    for (std::size_t s2 = 0; s2 < n_states; ++s2) {
      double u = unif(rng);
      while (u == 0.0) u = unif(rng);
      row[s2] = u;
      total += u;
    }
    for (std::size_t s2 = 0; s2 < n_states; ++s2) row[s2] /= total;
  }
  return mdp;
}

/// Bellman optimality operator: (TQ)(s, a) = r(s, a) + gamma * sum_s' P(s'|s, a) max_a' Q(s', a').
inline QTable bellman_update(const MDP& mdp, const QTable& q) {
  std::vector<double> v(mdp.n_states);
  for (std::size_t s = 0; s < mdp.n_states; ++s) v[s] = q.max_value(s);
  QTable out(mdp.n_states, mdp.n_actions);
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      const auto row = mdp.transition_row(s, a);
      out(s, a) = mdp.reward(s, a) + mdp.gamma * std::inner_product(row.begin(), row.end(), v.begin(), 0.0);
    }
  return out;
}

inline double sup_distance(const QTable& a, const QTable& b) noexcept {
  double d = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
  return d;
}

struct ValueIterationResult {
  QTable q;
  std::vector<double> deltas;  // sup-norm change of each sweep
};

/// Runs Q <- TQ from Q = 0 until a sweep changes Q by less than
/// tol * (1 - gamma) / gamma, which bounds the sup-norm error to Q* by tol.
inline ValueIterationResult value_iteration_trace(const MDP& mdp, double tol = 1e-10) {
  if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
  ValueIterationResult res{QTable(mdp.n_states, mdp.n_actions), {}};
  const double stop = mdp.gamma > 0.0 ? tol * (1.0 - mdp.gamma) / mdp.gamma
                                      : std::numeric_limits<double>::infinity();
  for (;;) {
    QTable next = bellman_update(mdp, res.q);
    const double delta = sup_distance(next, res.q);
    res.q = std::move(next);
    res.deltas.push_back(delta);
    if (delta < stop || delta == 0.0) break;
  }
  return res;
}

inline QTable value_iteration(const MDP& mdp, double tol = 1e-10) {
  return value_iteration_trace(mdp, tol).q;
}

/// min over states of the margin between the greedy action value and every
/// other action value. +inf when there is a single action.
inline double optimality_gap(const QTable& qstar) {
  if (qstar.n_actions() < 2) return std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < qstar.n_states(); ++s) {
    const std::size_t best = qstar.greedy_action(s);
    const double v = qstar(s, best);
    for (std::size_t a = 0; a < qstar.n_actions(); ++a)
      if (a != best) gap = std::min(gap, std::abs(v - qstar(s, a)));
  }
  return gap;
}

inline double estimand_mean_qstar(const QTable& qstar) {
  const auto v = qstar.values();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Plain-text format:
//   mdp <n_states> <n_actions> <gamma>
//   one line per (s, a) in lexicographic order: r(s,a) P(0|s,a) ... P(S-1|s,a)
inline void write_mdp(std::ostream& os, const MDP& mdp) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << "mdp " << mdp.n_states << ' ' << mdp.n_actions << ' ' << mdp.gamma << '\n';
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      os << mdp.reward(s, a);
      for (double p : mdp.transition_row(s, a)) os << ' ' << p;
      os << '\n';
    }
  os.precision(old);
}

inline MDP read_mdp(std::istream& is) {
  std::string tag;
  MDP mdp;
  if (!(is >> tag >> mdp.n_states >> mdp.n_actions >> mdp.gamma) || tag != "mdp")
    throw std::runtime_error("read_mdp: malformed header");
  mdp.P.resize(mdp.n_states * mdp.n_actions * mdp.n_states);
  mdp.r.resize(mdp.n_states * mdp.n_actions);
  for (std::size_t sa = 0; sa < mdp.n_states * mdp.n_actions; ++sa) {
    is >> mdp.r[sa];
    for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) is >> mdp.P[sa * mdp.n_states + s2];
  }
  if (!is) throw std::runtime_error("read_mdp: truncated body");
  mdp.validate();
  return mdp;
}

}  // namespace sainf
