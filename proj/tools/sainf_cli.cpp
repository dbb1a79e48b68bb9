#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sainf/sainf.hpp"

namespace {

using namespace sainf;

// Writes to `path`, or stdout when the path is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) : path_(path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw std::runtime_error("cannot open output file: " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void finish() {
    stream().flush();
    if (!stream()) throw std::runtime_error("write failed: " + (path_.empty() ? std::string("stdout") : path_));
  }

 private:
  std::string path_;
  std::unique_ptr<std::ofstream> file_;
};

std::vector<FunctionalOrder> parse_orders(const std::vector<std::string>& items) {
  std::vector<FunctionalOrder> out;
  for (const auto& s : items) out.push_back(FunctionalOrder::parse(s));
  return out;
}

ExperimentConfig load_with_overrides(const std::string& path, std::optional<std::uint64_t> seed,
                                     const std::string& out) {
  ExperimentConfig cfg = load_config(path);
  if (seed) cfg.seed = *seed;
  if (!out.empty()) cfg.output = out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online inference for stochastic approximation with Markovian data"};
  app.require_subcommand(1);

  std::size_t threads = 0;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string config_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--threads", threads, "worker threads (default: $SAINF_THREADS or all cores)");
    sub->add_option("--out", out, "output file (default: stdout)");
  };

  // critvals
  auto* crit = app.add_subcommand("critvals", "simulate the critical-value table of f_m(W)");
  BrownianBudget budget;
  std::vector<std::string> crit_orders{"1", "2", "3", "4", "6", "inf"};
  crit->add_option("--steps", budget.steps, "grid steps per Brownian path")->capture_default_str();
  crit->add_option("--reps", budget.reps, "Monte-Carlo replications")->capture_default_str();
  crit->add_option("--m", crit_orders, "orders to simulate")->delimiter(',');
  crit->add_option("--seed", seed, "master seed");
  add_common(crit);

  // density
  auto* dens = app.add_subcommand("density", "histograms of f_m(W) and of its denominator h_m(W)");
  BrownianBudget dens_budget;
  std::size_t bins = 200;
  std::vector<std::string> dens_orders{"1", "2", "3", "4", "6", "inf"};
  dens->add_option("--steps", dens_budget.steps)->capture_default_str();
  dens->add_option("--reps", dens_budget.reps)->capture_default_str();
  dens->add_option("--bins", bins)->capture_default_str();
  dens->add_option("--m", dens_orders)->delimiter(',');
  dens->add_option("--seed", seed, "master seed");
  add_common(dens);

  // coverage
  auto* cov = app.add_subcommand("coverage", "Monte-Carlo coverage study");
  cov->add_option("--config", config_path, "experiment configuration")->required();
  cov->add_option("--seed", seed, "override the configured seed");
  add_common(cov);

  // single-run
  auto* single = app.add_subcommand("single-run", "one trajectory with its interval trace");
  single->add_option("--config", config_path, "experiment configuration")->required();
  single->add_option("--seed", seed, "override the configured seed");
  add_common(single);

  // alpha-star
  auto* astar = app.add_subcommand("alpha-star", "optimal step-size exponent for moment order p");
  double p = 8.0;
  bool iid = false;
  double eps = 1e-3;
  astar->add_option("--p", p, "moment order p > 2")->required();
  astar->add_flag("--iid", iid, "i.i.d. data with a linear update");
  astar->add_option("--eps", eps, "boundary offset for the i.i.d. branch")->capture_default_str();

  // random-mdp
  auto* rmdp = app.add_subcommand("random-mdp", "draw an MDP and print Q*");
  std::size_t n_states = 5, n_actions = 5;
  double gamma = 0.6;
  rmdp->add_option("--states", n_states)->capture_default_str();
  rmdp->add_option("--actions", n_actions)->capture_default_str();
  rmdp->add_option("--gamma", gamma)->capture_default_str();
  rmdp->add_option("--seed", seed, "master seed");
  add_common(rmdp);

  CLI11_PARSE(app, argc, argv);

  try {
    threads = resolve_threads(threads);

    if (*crit) {
      const auto orders = parse_orders(crit_orders);
      const auto table = simulated_table(orders, standard_levels(), budget, seed.value_or(1), threads);
      Output o(out);
      write_critical_values_csv(o.stream(), table);
      o.finish();
      const auto ref = embedded_table();
      for (auto m : orders) {
        const double q = table.two_sided(m, 0.05);
        if (ref.has(m))
          std::fprintf(stderr, "m=%s q(5%%)=%.4f reference=%.3f rel=%+.4f\n", m.to_string().c_str(), q,
                       ref.two_sided(m, 0.05), q / ref.two_sided(m, 0.05) - 1.0);
        else
          std::fprintf(stderr, "m=%s q(5%%)=%.4f\n", m.to_string().c_str(), q);
      }
    } else if (*dens) {
      const auto orders = parse_orders(dens_orders);
      const auto samples = simulate_functionals(orders, dens_budget, seed.value_or(1), threads);
      std::vector<DensityRow> rows;
      for (const auto& s : samples) {
        rows.push_back({"f", s.m, empirical_density(s.f, bins, DensityRange::symmetric)});
        rows.push_back({"h", s.m, empirical_density(s.h, bins, DensityRange::positive)});
      }
      Output o(out);
      write_density_csv(o.stream(), rows);
      o.finish();
    } else if (*cov) {
      const auto cfg = load_with_overrides(config_path, seed, out);
      const auto report = run_coverage(cfg, threads);
      Output o(cfg.output);
      write_report_csv(o.stream(), report);
      o.finish();
      enforce_failure_budget(report);
    } else if (*single) {
      const auto cfg = load_with_overrides(config_path, seed, out);
      const auto rows = single_run(cfg);
      Output o(cfg.output);
      write_trace_csv(o.stream(), rows);
      o.finish();
    } else if (*astar) {
      const auto r = optimal_alpha(p, !iid, eps);
      std::printf("alpha_star=%.6f rate_exponent=%.6f\n", r.alpha_star, r.rate_exponent);
    } else if (*rmdp) {
      Rng rng = make_rng(seed.value_or(1), StreamTag::problem, 0);
      const MDP mdp = random_mdp(n_states, n_actions, gamma, rng);
      const auto vi = value_iteration_trace(mdp);
      Output o(out);
      write_mdp(o.stream(), mdp);
      o.finish();
      std::fprintf(stderr, "sweeps=%zu gap=%.6g mean_qstar=%.6f\n", vi.deltas.size(), optimality_gap(vi.q),
                   estimand_mean_qstar(vi.q));
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
