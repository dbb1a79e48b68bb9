#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "sainf/inference.hpp"
#include "sainf/markov_streams.hpp"
#include "sainf/oracles.hpp"
#include "sainf/sa_engine.hpp"
#include "sainf/step_schedule.hpp"

using namespace sainf;
using Catch::Approx;

namespace {

bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

// Hand-rolled generator of projected trajectories: raw i.i.d., running
// averages of an AR(1) sequence, and running averages with a large offset.
std::vector<double> random_trajectory(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(2, 600), kind(0, 2);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const int n = len(rng);
  const double mean = 10.0 * unif(rng);
  const double scale = std::pow(10.0, 2.0 * unif(rng));
  std::vector<double> raw(static_cast<std::size_t>(n));
  switch (kind(rng)) {
    case 0:
      for (auto& v : raw) v = mean + scale * normal(rng);
      return raw;
    case 1: {
      double z = 0.0;
      for (auto& v : raw) {
        z = 0.9 * z + normal(rng);
        v = mean + scale * z;
      }
      return oracle::running_means(raw);
    }
    default:
      for (auto& v : raw) v = 1000.0 + 0.01 * normal(rng);
      return oracle::running_means(raw);
  }
}

RandomScalingAccumulator absorb(const std::vector<double>& ybar, int m) {
  RandomScalingAccumulator acc(m);
  for (double y : ybar) acc.update(y);
  return acc;
}

}  // namespace

TEST_CASE("functional order parsing", "[inference]") {
  CHECK(FunctionalOrder::parse("2") == FunctionalOrder(2));
  CHECK(FunctionalOrder::parse("inf").is_infinite());
  CHECK(FunctionalOrder::parse("inf").to_string() == "inf");
  CHECK(FunctionalOrder(6).is_even());
  CHECK_FALSE(FunctionalOrder(3).is_even());
  CHECK_FALSE(FunctionalOrder::infinity().is_even());
  CHECK(FunctionalOrder(6) < FunctionalOrder::infinity());
  CHECK_THROWS(FunctionalOrder::parse("0"));
  CHECK_THROWS(FunctionalOrder::parse("two"));
}

TEST_CASE("accumulator sums", "[inference][accumulator]") {
  SECTION("single step") {
    const auto s = absorb({1.0}, 2).raw_sums();
    CHECK(s == std::vector<double>{1.0, 1.0, 1.0});
  }
  SECTION("four steps, m = 2") {
    const auto s = absorb({1.0, 2.0, 0.5, 3.0}, 2).raw_sums();
    REQUIRE(s.size() == 3);
    CHECK(s[0] == Approx(30.0).epsilon(1e-14));
    CHECK(s[1] == Approx(61.5).epsilon(1e-14));
    CHECK(s[2] == Approx(163.25).epsilon(1e-14));
  }
  SECTION("m = 4 keeps five sums with S_0 = sum n^4") {
    const auto acc = absorb({0.3, -1.0, 2.0, 7.0, 0.0}, 4);
    const auto s = acc.raw_sums();
    REQUIRE(s.size() == 5);
    CHECK(s[0] == 1.0 + 16.0 + 81.0 + 256.0 + 625.0);
  }
  SECTION("odd or small orders are rejected") {
    CHECK_THROWS_AS(RandomScalingAccumulator(3), std::invalid_argument);
    CHECK_THROWS_AS(RandomScalingAccumulator(0), std::invalid_argument);
  }
  SECTION("raw sums match recomputation from the stored sequence") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
      const auto ybar = random_trajectory(rng);
      for (int m : {2, 4, 6}) {
        const auto s = absorb(ybar, m).raw_sums();
        for (int k = 0; k <= m; ++k) {
          long double direct = 0.0L, mag = 0.0L;
          for (std::size_t i = 0; i < ybar.size(); ++i) {
            const long double term = std::pow(static_cast<long double>(i + 1), m) * std::pow(static_cast<long double>(ybar[i]), k);
            direct += term;
            mag += std::abs(term);
          }
          CHECK(std::abs(s[k] - static_cast<double>(direct)) <= 1e-9 * static_cast<double>(mag));
        }
      }
    }
  }
}

TEST_CASE("sigma from the accumulator", "[inference][accumulator]") {
  SECTION("constant trajectory has zero scale") {
    CHECK(absorb(std::vector<double>(50, 3.25), 2).sigma(3.25) == 0.0);
    CHECK(absorb(std::vector<double>(50, -1.0), 6).sigma(-1.0) == 0.0);
  }
  SECTION("worked m = 2 example") {
    // sum n^2 (ybar_n - 3)^2 = 4 + 4 + 56.25 + 0 = 64.25; sigma^2 = 64.25 / T^{m/2+1} = 64.25 / 16
    const auto acc = absorb({1.0, 2.0, 0.5, 3.0}, 2);
    CHECK(acc.sigma(3.0) == Approx(std::sqrt(4.015625)).epsilon(1e-13));
    CHECK(oracle::sigma_direct({1.0, 2.0, 0.5, 3.0}, 2) == Approx(2.003902).epsilon(1e-6));
  }
  SECTION("degree-one homogeneity") {
    const std::vector<double> y{0.2, -0.4, 1.5, 0.9, 1.1};
    for (double a : {3.0, 0.25, -2.0}) {
      std::vector<double> ay;
      for (double v : y) ay.push_back(a * v);
      for (int m : {2, 4, 6})
        CHECK(absorb(ay, m).sigma(ay.back()) == Approx(std::abs(a) * absorb(y, m).sigma(y.back())).epsilon(1e-12));
    }
  }
  SECTION("empty accumulator rejects evaluation") {
    RandomScalingAccumulator acc(2);
    CHECK_THROWS_AS(acc.sigma(0.0), std::invalid_argument);
  }
  SECTION("large offset does not trip the cancellation check") {
    std::vector<double> raw;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 20000; ++i) raw.push_back(1e4 + 1e-3 * n(rng));
    const auto ybar = oracle::running_means(raw);
    for (int m : {2, 4, 6}) {
      const auto acc = absorb(ybar, m);
      CHECK_FALSE(acc.cancellation_suspect(ybar.back()));
      CHECK(rel_close(acc.sigma(ybar.back()), sigma_offline(ybar, FunctionalOrder(m)), 1e-9));
    }
  }
}

TEST_CASE("online equals offline for even m", "[inference][property]") {
  std::mt19937_64 rng(20240501);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto ybar = random_trajectory(rng);
    for (int m : {2, 4, 6}) {
      const double online = absorb(ybar, m).sigma(ybar.back());
      const double offline = sigma_offline(ybar, FunctionalOrder(m));
      INFO("trial " << trial << " m " << m << " T " << ybar.size());
      REQUIRE(rel_close(online, offline, 1e-9));
      REQUIRE(rel_close(offline, oracle::sigma_direct(ybar, m), 1e-9));
    }
  }
}

TEST_CASE("offline sigma", "[inference][offline]") {
  SECTION("sup norm on (0, 0, 1)") {
    // phi = (1/sqrt3)(0-1), (2/sqrt3)(0-1), 0
    CHECK(sigma_offline(std::vector<double>{0.0, 0.0, 1.0}, FunctionalOrder::infinity()) ==
          Approx(2.0 / std::sqrt(3.0)).epsilon(1e-15));
  }
  SECTION("sign symmetry") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
      auto y = random_trajectory(rng);
      std::vector<double> neg;
      for (double v : y) neg.push_back(-v);
      for (auto m : {FunctionalOrder(1), FunctionalOrder(2), FunctionalOrder(3), FunctionalOrder::infinity()})
        CHECK(sigma_offline(neg, m) == Approx(sigma_offline(y, m)).epsilon(1e-12));
    }
  }
  SECTION("power-mean monotonicity in m") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 500; ++trial) {
      const auto y = random_trajectory(rng);
      const double s2 = sigma_offline(y, FunctionalOrder(2));
      const double s4 = sigma_offline(y, FunctionalOrder(4));
      const double s6 = sigma_offline(y, FunctionalOrder(6));
      const double sinf = sigma_offline(y, FunctionalOrder::infinity());
      REQUIRE(s2 <= s4 * (1 + 1e-12));
      REQUIRE(s4 <= s6 * (1 + 1e-12));
      REQUIRE(s6 <= sinf * (1 + 1e-12));
    }
  }
  SECTION("empty input") {
    CHECK_THROWS_AS(sigma_offline(std::vector<double>{}, FunctionalOrder(2)), std::invalid_argument);
    CHECK_THROWS_AS(sigma_trapezoid_m2(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(sigma_exact_m1(std::vector<double>{}), std::invalid_argument);
  }
}

TEST_CASE("exact integrals of the continuized process", "[inference][exact]") {
  const std::vector<double> y{1.0, 2.0, 0.5, 3.0};
  SECTION("trapezoid m = 2 against dense quadrature") {
    const double quad = std::sqrt(oracle::dense_quadrature(y, 2, 100000));
    CHECK(std::abs(sigma_trapezoid_m2(y) - quad) < 1e-6);
  }
  SECTION("constant trajectory") {
    CHECK(sigma_trapezoid_m2(std::vector<double>(10, 2.0)) == 0.0);
    CHECK(sigma_exact_m1(std::vector<double>(10, 2.0)) == 0.0);
  }
  SECTION("exact m = 1 against dense quadrature on sign-changing paths") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      auto path = random_trajectory(rng);
      path.resize(std::min<std::size_t>(path.size(), 40));
      CHECK(std::abs(sigma_exact_m1(path) - oracle::dense_quadrature(path, 1, 200000)) <
            1e-6 * std::max(1.0, sigma_exact_m1(path)));
    }
  }
  SECTION("trapezoid and rectangle rules converge along an SA run") {
    const std::size_t d = 10;
    LinRegARStream stream(linspace(0.0, 1.0, d), 0.9, Rng(99));
    const Projection proj = Projection::ones_normalized(d);
    ProjectedTrajectory traj;
    run(stream, LinearRegressionOracle{}, StepSchedule(std::pow(10.0, -0.5), 0.505), RunOptions{10500, 500},
        Vec(d, 0.0), [&](std::uint64_t, std::span<const double>, std::span<const double> xbar) {
          traj.push(proj.project(xbar));
        });
    auto gap = [&](std::size_t n) {
      const auto p = traj.prefix(n);
      const double trap = sigma_trapezoid_m2(p);
      return std::abs(trap - sigma_offline(p, FunctionalOrder(2))) / trap;
    };
    CHECK(gap(10000) < gap(1000));
  }
}

TEST_CASE("pivot statistic", "[inference][pivot]") {
  CHECK(f_m_statistic(1.5, 1.5, 0.3, 100) == 0.0);
  CHECK(f_m_statistic(2.0, 1.0, 0.5, 100) == Approx(20.0));
  CHECK_THROWS_AS(f_m_statistic(1.0, 0.0, 0.0, 10), DegeneratePivotError);

  SECTION("scale invariance and sign symmetry") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      auto y = random_trajectory(rng);
      const double target = y.back() + n(rng);
      const auto T = y.size();
      for (auto m : {FunctionalOrder(1), FunctionalOrder(2), FunctionalOrder(6), FunctionalOrder::infinity()}) {
        const double base = f_m_statistic(y.back(), target, sigma_offline(y, m), T);
        for (double a : {0.01, 2.0, 1e3}) {
          std::vector<double> ay;
          for (double v : y) ay.push_back(a * v);
          CHECK(f_m_statistic(ay.back(), a * target, sigma_offline(ay, m), T) == Approx(base).epsilon(1e-9));
        }
        std::vector<double> neg;
        for (double v : y) neg.push_back(-v);
        CHECK(f_m_statistic(neg.back(), -target, sigma_offline(neg, m), T) == Approx(-base).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("confidence interval inversion", "[inference][ci]") {
  SECTION("table value 6.758 at T = 1e4") {
    const auto ci = confidence_interval(0.5, 1.0, 6.758, 10000, 0.95, FunctionalOrder(2));
    CHECK(ci.halfwidth() == Approx(0.06758).epsilon(1e-12));
    CHECK(ci.center == 0.5);
    CHECK(ci.contains(0.5 + 0.0675));
    CHECK_FALSE(ci.contains(0.5 + 0.0676));
  }
  SECTION("zero scale gives a degenerate interval") {
    const auto ci = confidence_interval(2.0, 0.0, 6.758, 100, 0.95);
    CHECK(ci.degenerate());
    CHECK(ci.lower == 2.0);
    CHECK(ci.upper == 2.0);
  }
  SECTION("quadrupling T halves the width") {
    const auto a = confidence_interval(0.0, 1.3, 5.0, 400, 0.95);
    const auto b = confidence_interval(0.0, 1.3, 5.0, 1600, 0.95);
    CHECK(b.length() == Approx(a.length() / 2.0).epsilon(1e-14));
  }
  SECTION("bad arguments") {
    CHECK_THROWS(confidence_interval(0.0, 1.0, 1.0, 0, 0.95));
    CHECK_THROWS(confidence_interval(0.0, 1.0, -1.0, 10, 0.95));
  }
  SECTION("translation equivariance of coverage") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
      auto y = random_trajectory(rng);
      const double target = y.back() + 0.1;
      const double shift = 17.5;
      std::vector<double> ys;
      for (double v : y) ys.push_back(v + shift);
      const auto a = confidence_interval(y.back(), sigma_offline(y, FunctionalOrder(2)), 6.758, y.size(), 0.95);
      const auto b = confidence_interval(ys.back(), sigma_offline(ys, FunctionalOrder(2)), 6.758, ys.size(), 0.95);
      CHECK(a.contains(target) == b.contains(target + shift));
    }
  }
}
