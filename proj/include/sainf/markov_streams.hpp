#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sainf/linalg.hpp"
#include "sainf/mdp.hpp"
#include "sainf/rng.hpp"

namespace sainf {

/// One regression observation (a_t, y_t). Streams own the storage and hand
/// out a reference that stays valid until the next draw.
struct RegressionSample {
  Vec a;
  double y = 0.0;
};

struct MDPTransition {
  std::size_t s = 0;
  std::size_t a = 0;
  double reward = 0.0;
  std::size_t s_next = 0;
};

inline double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// sqrt(d) times the first coordinate of a point drawn uniformly from the
/// unit ball in R^d. Bounded by sqrt(d), symmetric, variance d / (d + 2).
inline double ball_coordinate_noise(std::size_t d, Rng& rng, std::normal_distribution<double>& normal) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double sq = 0.0;
  double first = 0.0;
  do {
    sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double g = normal(rng);
      if (i == 0) first = g;
      sq += g * g;
    }
  } while (sq == 0.0);
  const double radius = std::pow(unif(rng), 1.0 / static_cast<double>(d));
  return std::sqrt(static_cast<double>(d)) * radius * first / std::sqrt(sq);
}

/// Linear regression with AR(1) noise:
///   a_t ~ N(0, I_d),  zeta_t = rho * zeta_{t-1} + eps_t,  y_t = <a_t, x*> + zeta_t.
class LinRegARStream {
 public:
  LinRegARStream(Vec x_star, double rho_eps, Rng rng, double zeta0 = 0.0)
      : x_star_(std::move(x_star)), rho_(rho_eps), zeta_(zeta0), rng_(std::move(rng)) {
    if (x_star_.empty()) throw std::invalid_argument("linreg stream: dimension must be >= 1");
    if (!(rho_ >= 0.0 && rho_ < 1.0)) throw std::invalid_argument("linreg stream: rho_eps must lie in [0, 1)");
    if (!all_finite(x_star_)) throw std::invalid_argument("linreg stream: x_star must be finite");
    sample_.a.assign(x_star_.size(), 0.0);
  }

  /// Draws the next noise innovation eps_t alone (used to measure its law).
  double draw_innovation() { return ball_coordinate_noise(x_star_.size(), rng_, normal_); }

  const RegressionSample& next() {
    for (double& v : sample_.a) v = normal_(rng_);
    zeta_ = rho_ * zeta_ + draw_innovation();
    sample_.y = dot(sample_.a, x_star_) + zeta_;
    return sample_;
  }

  std::size_t dim() const noexcept { return x_star_.size(); }
  double zeta() const noexcept { return zeta_; }
  double rho() const noexcept { return rho_; }
  const Vec& x_star() const noexcept { return x_star_; }

 private:
  Vec x_star_;
  double rho_;
  double zeta_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  RegressionSample sample_;
};

/// Logistic regression with autoregressive covariates:
///   a_t = A a_{t-1} + e_1 W_t,  W_t ~ N(0, 1),  y_t ~ Bernoulli(S(<a_t, x*>)).
/// A is strictly subdiagonal, so a_t is a finite moving sum of the last d shocks.
class LogisticARStream {
 public:
  /// Draws the subdiagonal A_{i,i-1} ~ U[0.8, 0.99] once from `rng`.
  LogisticARStream(Vec x_star, Rng rng) : x_star_(std::move(x_star)), rng_(std::move(rng)) {
    if (x_star_.empty()) throw std::invalid_argument("logistic stream: dimension must be >= 1");
    std::uniform_real_distribution<double> unif(0.8, 0.99);
    subdiag_.resize(x_star_.size() - 1);
    for (double& v : subdiag_) v = unif(rng_);
    sample_.a.assign(x_star_.size(), 0.0);
  }

  /// Explicit subdiagonal (entry i holds A_{i+1,i}).
  LogisticARStream(Vec x_star, Vec subdiag, Rng rng)
      : x_star_(std::move(x_star)), subdiag_(std::move(subdiag)), rng_(std::move(rng)) {
    if (x_star_.empty()) throw std::invalid_argument("logistic stream: dimension must be >= 1");
    if (subdiag_.size() + 1 != x_star_.size())
      throw std::invalid_argument("logistic stream: subdiagonal must have d - 1 entries");
    sample_.a.assign(x_star_.size(), 0.0);
  }

  /// Advances the covariate with a given shock, without drawing a label.
  const Vec& advance_covariate(double shock) {
    auto& a = sample_.a;
    for (std::size_t i = a.size() - 1; i > 0; --i) a[i] = subdiag_[i - 1] * a[i - 1];
    a[0] = shock;
    return a;
  }

  const RegressionSample& next() {
    advance_covariate(normal_(rng_));
    std::bernoulli_distribution coin(sigmoid(dot(sample_.a, x_star_)));
    sample_.y = coin(rng_) ? 1.0 : 0.0;
    return sample_;
  }

  std::size_t dim() const noexcept { return x_star_.size(); }
  const Vec& subdiagonal() const noexcept { return subdiag_; }
  const Vec& covariate() const noexcept { return sample_.a; }
  const Vec& x_star() const noexcept { return x_star_; }

 private:
  Vec x_star_;
  Vec subdiag_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  RegressionSample sample_;
};

/// Trajectory of an MDP under a fixed behavior policy, with rewards
/// R ~ N(r(s, a), 1). The MDP must outlive the stream.
class MDPStream {
 public:
  using Policy = std::vector<std::vector<double>>;

  MDPStream(const MDP& mdp, Rng rng) : MDPStream(mdp, uniform_policy(mdp), std::move(rng)) {}

  MDPStream(const MDP& mdp, Policy behavior, Rng rng)
      : mdp_(&mdp), policy_(std::move(behavior)), rng_(std::move(rng)) {
    if (policy_.size() != mdp.n_states) throw std::invalid_argument("mdp stream: policy needs one row per state");
    for (const auto& row : policy_) {
      if (row.size() != mdp.n_actions) throw std::invalid_argument("mdp stream: policy row has wrong width");
      double total = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) throw std::invalid_argument("mdp stream: negative policy probability");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("mdp stream: policy row does not sum to 1");
    }
    std::uniform_int_distribution<std::size_t> start(0, mdp.n_states - 1);
    state_ = start(rng_);
  }

  static Policy uniform_policy(const MDP& mdp) {
    return Policy(mdp.n_states, std::vector<double>(mdp.n_actions, 1.0 / static_cast<double>(mdp.n_actions)));
  }

  const MDPTransition& next() {
    const std::size_t s = state_;
    const std::size_t a = categorical(policy_[s]);
    const double reward = mdp_->reward(s, a) + normal_(rng_);
    const std::size_t s2 = categorical(mdp_->transition_row(s, a));
    transition_ = MDPTransition{s, a, reward, s2};
    state_ = s2;
    return transition_;
  }

  std::size_t state() const noexcept { return state_; }
  const MDP& mdp() const noexcept { return *mdp_; }

 private:
  std::size_t categorical(std::span<const double> probs) {
    const double u = unif_(rng_);
    double cum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      cum += probs[i];
      if (u < cum) return i;
    }
    // u landed in the rounding slack past the last cumulative sum
    for (std::size_t i = probs.size(); i-- > 0;)
      if (probs[i] > 0.0) return i;
    return probs.size() - 1;
  }

  const MDP* mdp_;
  Policy policy_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::size_t state_ = 0;
  MDPTransition transition_;
};

}  // namespace sainf
