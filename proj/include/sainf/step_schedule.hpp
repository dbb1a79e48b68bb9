#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sainf {

/// Polynomially decaying step size eta * (t + offset)^(-alpha), t >= 1.
///
/// Valid schedules have alpha in (0.5, 1) and a first step in (0, 1].
/// `offset` exists for schedules written as (t + 1)^(-alpha).
class StepSchedule {
 public:
  StepSchedule(double eta_scale, double alpha, double offset = 0.0)
      : eta_(eta_scale), alpha_(alpha), offset_(offset) {
    if (!(alpha > 0.5 && alpha < 1.0))
      throw std::invalid_argument("step schedule: alpha must lie in (0.5, 1), got " +
                                  std::to_string(alpha));
    if (!(eta_scale > 0.0))
      throw std::invalid_argument("step schedule: eta must be positive");
    if (!(offset >= 0.0)) throw std::invalid_argument("step schedule: offset must be >= 0");
    if ((*this)(1) > 1.0)
      throw std::invalid_argument("step schedule: first step " + std::to_string((*this)(1)) +
                                  " exceeds 1");
  }

  double operator()(std::uint64_t t) const {
    if (t == 0) throw std::invalid_argument("step schedule: t starts at 1");
    return eta_ * std::pow(static_cast<double>(t) + offset_, -alpha_);
  }

  double eta() const noexcept { return eta_; }
  double alpha() const noexcept { return alpha_; }
  double offset() const noexcept { return offset_; }

 private:
  double eta_;
  double alpha_;
  double offset_;
};

}  // namespace sainf
