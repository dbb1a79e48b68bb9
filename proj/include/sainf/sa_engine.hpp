#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "sainf/linalg.hpp"

namespace sainf {

/// A non-finite coordinate appeared in an iterate.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(std::uint64_t step)
      : std::runtime_error("stochastic approximation diverged at step " + std::to_string(step)),
        step_(step) {}
  std::uint64_t step() const noexcept { return step_; }

 private:
  std::uint64_t step_;
};

/// x <- x - eta * H(x, xi). Oracles with a sparse `update` member use it;
/// everything else goes through a dense increment buffer.
template <class Oracle, class Data>
void sa_update(const Oracle& oracle, std::span<double> x, const Data& xi, double eta, Vec& scratch) {
  if constexpr (requires { oracle.update(x, xi, eta); }) {
    oracle.update(x, xi, eta);
  } else {
    scratch.resize(x.size());
    oracle.increment(std::span<const double>(x), xi, std::span<double>(scratch));
    axpy(-eta, scratch, x);
  }
}

/// State of one SA recursion x_{t+1} = x_t - eta_t H(x_t, xi_t).
///
/// The first `warmup` updates are discarded; afterwards `t` counts
/// post-warm-up iterates from 1 and `xbar` is their running mean.
class SARun {
 public:
  SARun(Vec x0, std::uint64_t warmup) : x_(std::move(x0)), xbar_(x_.size(), 0.0), warmup_remaining_(warmup) {}

  /// Applies one update with step `eta`. Returns true when the new iterate
  /// is part of the inference window. Throws DivergenceError on a
  /// non-finite iterate, naming the global update index.
  template <class Oracle, class Data>
  bool step(const Oracle& oracle, const Data& xi, double eta) {
    sa_update(oracle, std::span<double>(x_), xi, eta, scratch_);
    ++updates_;
    ++oracle_calls_;
    if (!all_finite(x_)) throw DivergenceError(updates_);
    if (warmup_remaining_ > 0) {
      --warmup_remaining_;
      return false;
    }
    ++t_;
    const double w = 1.0 / static_cast<double>(t_);
    for (std::size_t i = 0; i < x_.size(); ++i) xbar_[i] += (x_[i] - xbar_[i]) * w;
    return true;
  }

  const Vec& x() const noexcept { return x_; }
  /// Mean of the post-warm-up iterates; meaningful only when has_average().
  const Vec& xbar() const noexcept { return xbar_; }
  bool has_average() const noexcept { return t_ > 0; }
  std::uint64_t t() const noexcept { return t_; }
  std::uint64_t updates() const noexcept { return updates_; }
  std::uint64_t warmup_remaining() const noexcept { return warmup_remaining_; }
  std::uint64_t oracle_calls() const noexcept { return oracle_calls_; }

 private:
  Vec x_;
  Vec xbar_;
  Vec scratch_;
  std::uint64_t warmup_remaining_;
  std::uint64_t t_ = 0;
  std::uint64_t updates_ = 0;
  std::uint64_t oracle_calls_ = 0;
};

struct RunOptions {
  std::uint64_t total_steps = 0;
  std::uint64_t warmup = 0;
};

struct NoHook {
  void operator()(std::uint64_t, std::span<const double>, std::span<const double>) const noexcept {}
};

/// Drives `total_steps` updates; the step size is indexed by the global
/// update count. After every post-warm-up update, `hook(t, x_t, xbar_t)`
/// fires with t starting at 1.
template <class Stream, class Oracle, class Schedule, class Hook = NoHook>
SARun run(Stream& stream, const Oracle& oracle, const Schedule& schedule, RunOptions opts, Vec x0,
          Hook&& hook = {}) {
  if (opts.warmup > opts.total_steps) throw std::invalid_argument("run: warmup exceeds total steps");
  SARun state(std::move(x0), opts.warmup);
  for (std::uint64_t k = 1; k <= opts.total_steps; ++k) {
    const auto& xi = stream.next();
    if (state.step(oracle, xi, schedule(k)))
      hook(state.t(), std::span<const double>(state.x()), std::span<const double>(state.xbar()));
  }
  return state;
}

}  // namespace sainf
