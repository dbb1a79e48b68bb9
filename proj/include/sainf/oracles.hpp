#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include "sainf/linalg.hpp"
#include "sainf/markov_streams.hpp"
#include "sainf/mdp.hpp"

namespace sainf {

// Increment oracles H(x, xi). The SA engine applies x <- x - eta * H(x, xi).

namespace detail {
inline void check_dims(std::size_t x, std::size_t a, std::size_t out, const char* who) {
  if (x != a || x != out)
    throw std::invalid_argument(std::string(who) + ": dimension mismatch (x=" + std::to_string(x) +
                                ", a=" + std::to_string(a) + ", out=" + std::to_string(out) + ")");
}
}  // namespace detail

/// Least-squares gradient a * (<a, x> - y).
struct LinearRegressionOracle {
  void increment(std::span<const double> x, const RegressionSample& xi, std::span<double> out) const {
    detail::check_dims(x.size(), xi.a.size(), out.size(), "linear regression oracle");
    const double r = dot(xi.a, x) - xi.y;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = r * xi.a[i];
  }
};

/// Gradient of the logistic negative log-likelihood, (S(<a, x>) - y) * a.
struct LogisticOracle {
  void increment(std::span<const double> x, const RegressionSample& xi, std::span<double> out) const {
    detail::check_dims(x.size(), xi.a.size(), out.size(), "logistic oracle");
    const double r = sigmoid(dot(xi.a, x)) - xi.y;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = r * xi.a[i];
  }
};

/// Single nonzero entry of a Q-learning increment.
struct QIncrement {
  std::size_t index = 0;
  double value = 0.0;
};

/// Asynchronous Q-learning written as SA on vec(Q):
///   H(Q, xi)(s, a) = Q(s, a) - R - gamma * max_a' Q(s', a'), zero elsewhere.
struct QLearningOracle {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  double gamma = 0.0;

  explicit QLearningOracle(const MDP& mdp)
      : n_states(mdp.n_states), n_actions(mdp.n_actions), gamma(mdp.gamma) {}
  QLearningOracle(std::size_t states, std::size_t actions, double discount)
      : n_states(states), n_actions(actions), gamma(discount) {}

  QIncrement increment(std::span<const double> q, const MDPTransition& xi) const {
    if (q.size() != n_states * n_actions)
      throw std::invalid_argument("q-learning oracle: table size mismatch");
    if (xi.s >= n_states || xi.s_next >= n_states || xi.a >= n_actions)
      throw std::out_of_range("q-learning oracle: transition index out of range");
    const double* next = q.data() + xi.s_next * n_actions;
    double best = next[0];
    for (std::size_t a = 1; a < n_actions; ++a) best = std::max(best, next[a]);
    const std::size_t idx = xi.s * n_actions + xi.a;
    return {idx, q[idx] - xi.reward - gamma * best};
  }

  void increment(std::span<const double> q, const MDPTransition& xi, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    const QIncrement h = increment(q, xi);
    out[h.index] = h.value;
  }

  /// Sparse in-place update q <- q - eta * H(q, xi).
  void update(std::span<double> q, const MDPTransition& xi, double eta) const {
    const QIncrement h = increment(q, xi);
    q[h.index] -= eta * h.value;
  }
};

}  // namespace sainf
