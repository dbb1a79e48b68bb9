#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "sainf/inference.hpp"
#include "sainf/linalg.hpp"
#include "sainf/rng.hpp"
#include "sainf/sa_engine.hpp"

namespace sainf {

enum class MultiplierLaw {
  shifted_rademacher,  // W = 1 + Rademacher, values {0, 2}: mean 1, variance 1
  unit,                // W = 1, the degenerate check case
};

/// Draws i.i.d. multipliers, 64 Rademacher signs per generator call.
class MultiplierSampler {
 public:
  explicit MultiplierSampler(MultiplierLaw law = MultiplierLaw::shifted_rademacher) : law_(law) {}

  double operator()(Rng& rng) {
    if (law_ == MultiplierLaw::unit) return 1.0;
    if (bits_left_ == 0) {
      bits_ = rng();
      bits_left_ = 64;
    }
    const bool one = (bits_ & 1U) != 0;
    bits_ >>= 1;
    --bits_left_;
    return one ? 2.0 : 0.0;
  }

 private:
  MultiplierLaw law_;
  std::uint64_t bits_ = 0;
  int bits_left_ = 0;
};

/// Online multiplier bootstrap for linear SA: B perturbed chains
///   x^b_{t+1} = x^b_t - eta_t W^b_t H(x^b_t, xi_t)
/// driven by the same data as the unperturbed run. All chains start at x0
/// and average only post-warm-up iterates, like the base run.
class BootstrapEnsemble {
 public:
  BootstrapEnsemble(std::size_t B, const Vec& x0, std::uint64_t warmup,
                    MultiplierLaw law = MultiplierLaw::shifted_rademacher)
      : base_(x0, warmup), sampler_(law) {
    if (B == 0) throw std::invalid_argument("bootstrap: need at least one chain");
    chains_.assign(B, x0);
    means_.assign(B, Vec(x0.size(), 0.0));
    alive_.assign(B, true);
  }

  /// One shared data point: updates the base run and every live chain.
  /// A chain that turns non-finite is retired; divergence of the base run
  /// throws DivergenceError.
  template <class Oracle, class Data>
  void step(const Data& xi, double eta, const Oracle& oracle, Rng& rng) {
    const bool averaging = base_.step(oracle, xi, eta);
    ++oracle_calls_;
    for (std::size_t b = 0; b < chains_.size(); ++b) {
      const double w = sampler_(rng);
      ++oracle_calls_;
      if (!alive_[b]) continue;
      auto& x = chains_[b];
      sa_update(oracle, std::span<double>(x), xi, eta * w, scratch_);
      if (!all_finite(x)) {
        alive_[b] = false;
        ++failed_;
        continue;
      }
      if (averaging) {
        auto& mean = means_[b];
        const double inv = 1.0 / static_cast<double>(base_.t());
        for (std::size_t i = 0; i < x.size(); ++i) mean[i] += (x[i] - mean[i]) * inv;
      }
    }
  }

  const SARun& base() const noexcept { return base_; }
  std::size_t size() const noexcept { return chains_.size(); }
  std::size_t failed_chains() const noexcept { return failed_; }
  std::size_t live_chains() const noexcept { return chains_.size() - failed_; }
  bool alive(std::size_t b) const noexcept { return alive_[b]; }
  const Vec& chain(std::size_t b) const noexcept { return chains_[b]; }
  const Vec& chain_mean(std::size_t b) const noexcept { return means_[b]; }
  /// Base run plus every chain, per step: (B + 1) T in total.
  std::uint64_t oracle_calls() const noexcept { return oracle_calls_; }

 private:
  SARun base_;
  std::vector<Vec> chains_;
  std::vector<Vec> means_;
  std::vector<bool> alive_;
  MultiplierSampler sampler_;
  Vec scratch_;
  std::size_t failed_ = 0;
  std::uint64_t oracle_calls_ = 0;
};

namespace detail {
// nearest-rank quantile of a sorted sample
inline double sorted_quantile(const std::vector<double>& sorted, double p) {
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n - 1e-9 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}
}  // namespace detail

/// Basic (reflected) bootstrap interval for theta' x*:
///   [c - q_{1-alpha/2}, c - q_{alpha/2}],  q_p = quantile of theta'(xbar^b - xbar).
inline ConfidenceInterval bootstrap_ci(const BootstrapEnsemble& ens, std::span<const double> theta, double alpha,
                                       std::size_t min_chains = 20) {
  if (!ens.base().has_average()) throw std::invalid_argument("bootstrap_ci: run has no post-warm-up iterates");
  if (ens.live_chains() < min_chains)
    throw std::runtime_error("bootstrap_ci: only " + std::to_string(ens.live_chains()) + " surviving chains");
  const double center = dot(theta, ens.base().xbar());
  std::vector<double> dev;
  dev.reserve(ens.size());
  for (std::size_t b = 0; b < ens.size(); ++b)
    if (ens.alive(b)) dev.push_back(dot(theta, ens.chain_mean(b)) - center);
  std::sort(dev.begin(), dev.end());
  const double lo = detail::sorted_quantile(dev, 0.5 * alpha);
  const double hi = detail::sorted_quantile(dev, 1.0 - 0.5 * alpha);
  return ConfidenceInterval{center, center - hi, center - lo, 1.0 - alpha, std::nullopt};
}

}  // namespace sainf
