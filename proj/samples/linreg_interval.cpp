// Streams a linear regression problem with AR(1) noise through averaged SGD
// and prints random-scaling intervals for the mean of the coefficients.

#include <cmath>
#include <cstdio>

#include "sainf/sainf.hpp"

int main() {
  using namespace sainf;
  const std::size_t d = 10;
  const Vec x_star = linspace(0.0, 1.0, d);
  const Projection theta = Projection::ones_normalized(d);
  const double target = theta.estimand(x_star);

  LinRegARStream stream(x_star, 0.9, make_rng(42, StreamTag::data));
  const StepSchedule schedule(1.0 / std::sqrt(static_cast<double>(d)), 0.505);
  const auto table = embedded_table();

  RandomScalingAccumulator acc2(2), acc6(6);
  double ybar = 0.0;
  std::printf("%8s %10s %22s %22s\n", "t", "estimate", "m=2 interval", "m=6 interval");
  run(stream, LinearRegressionOracle{}, schedule, RunOptions{20000, 1000}, Vec(d, 0.0),
      [&](std::uint64_t t, std::span<const double>, std::span<const double> xbar) {
        ybar = theta.project(xbar);
        acc2.update(ybar);
        acc6.update(ybar);
        if (t % 4000 != 0) return;
        const auto ci2 = confidence_interval(ybar, acc2.sigma(ybar), table.two_sided(FunctionalOrder(2), 0.05), t, 0.95);
        const auto ci6 = confidence_interval(ybar, acc6.sigma(ybar), table.two_sided(FunctionalOrder(6), 0.05), t, 0.95);
        std::printf("%8llu %10.5f   [%8.5f, %8.5f]   [%8.5f, %8.5f]\n", static_cast<unsigned long long>(t), ybar,
                    ci2.lower, ci2.upper, ci6.lower, ci6.upper);
      });
  std::printf("target %.5f\n", target);
  return 0;
}
