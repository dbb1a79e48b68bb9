#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "sainf/linalg.hpp"
#include "sainf/mdp.hpp"

using namespace sainf;
using Catch::Approx;

namespace {

double bellman_residual(const MDP& m, const QTable& q) { return sup_distance(bellman_update(m, q), q); }

}  // namespace

TEST_CASE("random MDP generation", "[mdp]") {
  Rng rng(1);
  const MDP m = random_mdp(5, 5, 0.6, rng);
  CHECK_NOTHROW(m.validate());
  CHECK(m.n_states == 5);
  CHECK(m.n_actions == 5);
  CHECK(m.gamma == 0.6);
  for (std::size_t s = 0; s < 5; ++s)
    for (std::size_t a = 0; a < 5; ++a) {
      double total = 0.0;
      for (double p : m.transition_row(s, a)) {
        CHECK(p > 0.0);
        total += p;
      }
      CHECK(std::abs(total - 1.0) <= 1e-12);
      CHECK(m.reward(s, a) >= 0.0);
      CHECK(m.reward(s, a) <= 1.0);
    }

  Rng a(99), b(99);
  const MDP ma = random_mdp(4, 3, 0.9, a), mb = random_mdp(4, 3, 0.9, b);
  CHECK(ma.P == mb.P);
  CHECK(ma.r == mb.r);

  CHECK_THROWS_AS(random_mdp(0, 2, 0.5, rng), std::invalid_argument);
  CHECK_THROWS_AS(random_mdp(2, 2, 1.0, rng), std::invalid_argument);
}

TEST_CASE("MDP validation", "[mdp]") {
  MDP m{1, 1, 0.5, {1.0}, {0.5}};
  CHECK_NOTHROW(m.validate());
  m.P = {0.9};
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m.P = {1.0};
  m.r = {1.5};
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m.r = {0.5};
  m.gamma = 1.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("value iteration", "[mdp][vi]") {
  SECTION("myopic MDP returns the rewards after one sweep") {
    Rng rng(3);
    const MDP m = random_mdp(4, 3, 0.0, rng);
    const auto res = value_iteration_trace(m);
    CHECK(res.deltas.size() == 1);
    for (std::size_t i = 0; i < m.r.size(); ++i) CHECK(res.q.values()[i] == m.r[i]);
  }
  SECTION("single state and action: geometric series") {
    const MDP m{1, 1, 0.6, {1.0}, {1.0}};
    const QTable q = value_iteration(m);
    CHECK(q(0, 0) == Approx(2.5).margin(1e-10));
    CHECK(estimand_mean_qstar(q) == Approx(2.5).margin(1e-10));
  }
  SECTION("Bellman residual, range and contraction on random MDPs") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng rng(seed);
      const double gamma = seed % 2 ? 0.6 : 0.9;
      const MDP m = random_mdp(5, 5, gamma, rng);
      const auto res = value_iteration_trace(m, 1e-10);
      REQUIRE(bellman_residual(m, res.q) < 1e-10);
      for (double v : res.q.values()) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0 / (1.0 - gamma) + 1e-12);
      }
      for (std::size_t k = 1; k < res.deltas.size(); ++k)
        REQUIRE(res.deltas[k] <= gamma * res.deltas[k - 1] * (1.0 + 1e-9) + 1e-13);
    }
  }
  SECTION("constant reward shift keeps the greedy policy") {
    Rng rng(12);
    MDP m = random_mdp(5, 4, 0.6, rng);
    for (double& r : m.r) r *= 0.5;
    const QTable q = value_iteration(m, 1e-12);
    MDP shifted = m;
    for (double& r : shifted.r) r += 0.4;
    const QTable q2 = value_iteration(shifted, 1e-12);
    for (std::size_t s = 0; s < 5; ++s) {
      CHECK(q.greedy_action(s) == q2.greedy_action(s));
      for (std::size_t a = 0; a < 4; ++a) CHECK(q2(s, a) == Approx(q(s, a) + 0.4 / 0.4).margin(1e-9));
    }
  }
  SECTION("tolerance must be positive") {
    const MDP m{1, 1, 0.6, {1.0}, {1.0}};
    CHECK_THROWS_AS(value_iteration(m, 0.0), std::invalid_argument);
  }
}

TEST_CASE("optimality gap", "[mdp][gap]") {
  QTable q(2, 2);
  q(0, 0) = 1.0;
  q(0, 1) = 1.0;
  q(1, 0) = 3.0;
  q(1, 1) = 0.0;
  CHECK(optimality_gap(q) == 0.0);

  q(0, 0) = 2.0;
  q(0, 1) = 1.5;
  CHECK(optimality_gap(q) == 0.5);

  CHECK(std::isinf(optimality_gap(QTable(3, 1, 0.7))));

  int positive = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    positive += optimality_gap(value_iteration(random_mdp(5, 5, 0.6, rng))) > 1e-6 ? 1 : 0;
  }
  CHECK(positive >= 198);
}

TEST_CASE("mean-of-Q* estimand", "[mdp][estimand]") {
  CHECK(estimand_mean_qstar(QTable(3, 4, 1.75)) == Approx(1.75));
  Rng rng(8);
  const QTable q = value_iteration(random_mdp(5, 5, 0.6, rng));
  const Projection theta = Projection::uniform_average(25);
  CHECK(theta.estimand(q.values()) == Approx(estimand_mean_qstar(q)).epsilon(1e-14));
  CHECK(norm2(theta.unit) == Approx(1.0).epsilon(1e-15));
  CHECK(theta.scale == Approx(0.2).epsilon(1e-15));
}

TEST_CASE("MDP text format", "[mdp][io]") {
  Rng rng(4);
  const MDP m = random_mdp(3, 2, 0.6, rng);
  std::stringstream ss;
  write_mdp(ss, m);
  CHECK(ss.str().rfind("mdp 3 2 ", 0) == 0);
  const MDP back = read_mdp(ss);
  CHECK(back.n_states == 3);
  CHECK(back.n_actions == 2);
  CHECK(back.gamma == m.gamma);
  CHECK(back.P == m.P);
  CHECK(back.r == m.r);

  std::stringstream bad("mdp 2 1 0.5\n0.1 0.5 0.5\n");
  CHECK_THROWS_AS(read_mdp(bad), std::runtime_error);
  std::stringstream header("pomdp 1 1 0.5\n1 1\n");
  CHECK_THROWS_AS(read_mdp(header), std::runtime_error);
}
