#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sainf/bootstrap.hpp"
#include "sainf/config.hpp"
#include "sainf/critical_values.hpp"
#include "sainf/inference.hpp"
#include "sainf/linalg.hpp"
#include "sainf/markov_streams.hpp"
#include "sainf/mdp.hpp"
#include "sainf/oracles.hpp"
#include "sainf/parallel.hpp"
#include "sainf/rng.hpp"
#include "sainf/sa_engine.hpp"

namespace sainf {

inline constexpr const char* kRandomScaling = "random_scaling";
inline constexpr const char* kRandomScalingExact = "random_scaling_exact";
inline constexpr const char* kBootstrap = "bootstrap";

class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One interval construction: a method name plus, for random scaling, the order m.
struct MethodSlot {
  std::string method;
  std::optional<FunctionalOrder> m;
  bool operator==(const MethodSlot&) const = default;
};

inline std::vector<MethodSlot> method_slots(const ExperimentConfig& cfg) {
  std::vector<MethodSlot> out;
  if (cfg.method == Method::bootstrap) return {{kBootstrap, std::nullopt}};
  for (auto m : cfg.m_list) out.push_back({kRandomScaling, m});
  if (cfg.exact_integrals)
    for (auto m : cfg.m_list)
      if (m == FunctionalOrder(1) || m == FunctionalOrder(2)) out.push_back({kRandomScalingExact, m});
  return out;
}

/// Critical-value table requested by the configuration.
inline CriticalValueTable resolve_critical_table(const ExperimentConfig& cfg, std::size_t threads = 1) {
  switch (cfg.critical_source) {
    case CriticalSource::embedded: return embedded_table();
    case CriticalSource::simulate:
      return simulated_table(cfg.m_list, {1.0 - 0.5 * cfg.alpha}, cfg.critical_budget, cfg.seed, threads);
    case CriticalSource::file: {
      std::ifstream in(cfg.critical_file);
      if (!in) throw std::runtime_error("cannot open critical value file: " + cfg.critical_file);
      return read_critical_values_csv(in);
    }
  }
  throw std::logic_error("unreachable");
}

/// Per-run inference state fed by the SA hook: online accumulators for even
/// m, a stored projected trajectory whenever an odd/infinite order or an
/// exact integral is requested.
class RandomScalingTracker {
 public:
  RandomScalingTracker(std::vector<MethodSlot> slots, std::vector<double> crit, const Projection& proj, double alpha)
      : slots_(std::move(slots)), crit_(std::move(crit)), proj_(proj), alpha_(alpha) {
    for (const auto& s : slots_) {
      const bool online = s.method == kRandomScaling && s.m->is_even();
      acc_index_.push_back(online ? static_cast<int>(accs_.size()) : -1);
      if (online) accs_.emplace_back(s.m->value());
      else store_ = true;
    }
  }

  void observe(std::span<const double> xbar) {
    last_ = proj_.project(xbar);
    ++t_;
    for (auto& a : accs_) a.update(last_);
    if (store_) traj_.push(last_);
  }

  std::uint64_t t() const noexcept { return t_; }

  /// Intervals for scale * theta' x*, one per slot, at the current t.
  std::vector<ConfidenceInterval> intervals() const {
    std::vector<ConfidenceInterval> out;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      const auto& s = slots_[i];
      double sigma = 0.0;
      if (acc_index_[i] >= 0) sigma = accs_[static_cast<std::size_t>(acc_index_[i])].sigma(last_);
      else if (s.method == kRandomScalingExact) sigma = *s.m == FunctionalOrder(1) ? sigma_exact_m1(traj_.values())
                                                                                   : sigma_trapezoid_m2(traj_.values());
      else sigma = sigma_offline(traj_.values(), *s.m);
      out.push_back(confidence_interval(last_, sigma, crit_[i], t_, 1.0 - alpha_, s.m).scaled(proj_.scale));
    }
    return out;
  }

 private:
  std::vector<MethodSlot> slots_;
  std::vector<double> crit_;
  Projection proj_;
  double alpha_;
  std::vector<RandomScalingAccumulator> accs_;
  std::vector<int> acc_index_;
  ProjectedTrajectory traj_;
  bool store_ = false;
  double last_ = 0.0;
  std::uint64_t t_ = 0;
};

/// A generated problem: truth, projection and a factory for the run.
struct ProblemInstance {
  Vec x_star;          // root of the mean field (vec(Q*) for Q-learning)
  Projection projection;
  std::optional<MDP> mdp;
  double target() const { return projection.estimand(x_star); }
};

inline Vec random_subdiagonal(std::size_t d, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.8, 0.99);
  Vec v(d > 0 ? d - 1 : 0);
  for (double& x : v) x = unif(rng);
  return v;
}

/// Draws a random MDP with optimality gap >= min_gap and its Q*.
inline std::pair<MDP, QTable> random_mdp_with_gap(const ExperimentConfig& cfg, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    MDP mdp = random_mdp(cfg.n_states, cfg.n_actions, cfg.gamma, rng);
    QTable q = value_iteration(mdp, cfg.vi_tol);
    if (optimality_gap(q) >= cfg.min_gap) return {std::move(mdp), std::move(q)};
  }
  throw ExperimentError("could not draw an MDP with optimality gap >= problem.min_gap");
}

/// Visits the stream/oracle pair of repetition `rep` for the configured problem.
template <class Visitor>
void with_problem(const ExperimentConfig& cfg, std::uint64_t rep, Visitor&& visit) {
  Rng problem_rng = make_rng(cfg.seed, StreamTag::problem, rep);
  Rng data_rng = make_rng(cfg.seed, StreamTag::data, rep);
  switch (cfg.problem) {
    case ProblemKind::linreg_ar: {
      ProblemInstance inst{linspace(0.0, 1.0, cfg.d), Projection::ones_normalized(cfg.d), std::nullopt};
      LinRegARStream stream(inst.x_star, cfg.rho_eps, std::move(data_rng));
      visit(inst, stream, LinearRegressionOracle{});
      return;
    }
    case ProblemKind::logistic_ar: {
      ProblemInstance inst{linspace(0.0, 1.0, cfg.d), Projection::ones_normalized(cfg.d), std::nullopt};
      LogisticARStream stream(inst.x_star, random_subdiagonal(cfg.d, problem_rng), std::move(data_rng));
      visit(inst, stream, LogisticOracle{});
      return;
    }
    case ProblemKind::qlearning: {
      auto [mdp, qstar] = random_mdp_with_gap(cfg, problem_rng);
      const auto q = qstar.values();
      ProblemInstance inst{Vec(q.begin(), q.end()), Projection::uniform_average(q.size()), std::move(mdp)};
      MDPStream stream(*inst.mdp, std::move(data_rng));
      visit(inst, stream, QLearningOracle(*inst.mdp));
      return;
    }
  }
}

/// Outcome of one repetition: for each (checkpoint, slot) the interval, or
/// `failed` when the run diverged.
struct RepOutcome {
  bool failed = false;
  std::string failure;
  double target = 0.0;
  std::vector<std::vector<ConfidenceInterval>> intervals;  // [checkpoint][slot]
};

/// Runs repetition `rep`. `on_step(t, target, intervals_fn)` is called after
/// every post-warm-up step for tracing; checkpoint intervals are collected.
template <class StepCallback>
RepOutcome run_repetition(const ExperimentConfig& cfg, const CriticalValueTable& table, std::uint64_t rep,
                          StepCallback&& on_step) {
  RepOutcome out;
  const auto slots = method_slots(cfg);
  const auto checkpoints = cfg.resolved_checkpoints();
  const auto schedule = cfg.schedule();
  std::vector<double> crit;
  for (const auto& s : slots) crit.push_back(s.m ? table.two_sided(*s.m, cfg.alpha) : 0.0);

  with_problem(cfg, rep, [&](const ProblemInstance& inst, auto& stream, const auto& oracle) {
    out.target = inst.target();
    std::size_t next_cp = 0;
    try {
      if (cfg.method == Method::bootstrap) {
        Rng boot_rng = make_rng(cfg.seed, StreamTag::bootstrap, rep);
        BootstrapEnsemble ens(cfg.B, Vec(inst.x_star.size(), 0.0), cfg.warmup_steps(), cfg.multiplier);
        auto current = [&] {
          return std::vector<ConfidenceInterval>{
              bootstrap_ci(ens, inst.projection.unit, cfg.alpha).scaled(inst.projection.scale)};
        };
        for (std::uint64_t k = 1; k <= cfg.T; ++k) {
          ens.step(stream.next(), schedule(k), oracle, boot_rng);
          const auto t = ens.base().t();
          if (t == 0) continue;
          on_step(t, out.target, current);
          if (next_cp < checkpoints.size() && t == checkpoints[next_cp]) {
            out.intervals.push_back(current());
            ++next_cp;
          }
        }
      } else {
        RandomScalingTracker tracker(slots, crit, inst.projection, cfg.alpha);
        auto current = [&] { return tracker.intervals(); };
        run(stream, oracle, schedule, RunOptions{cfg.T, cfg.warmup_steps()}, Vec(inst.x_star.size(), 0.0),
            [&](std::uint64_t t, std::span<const double>, std::span<const double> xbar) {
              tracker.observe(xbar);
              on_step(t, out.target, current);
              if (next_cp < checkpoints.size() && t == checkpoints[next_cp]) {
                out.intervals.push_back(current());
                ++next_cp;
              }
            });
      }
    } catch (const DivergenceError& e) {
      out.failed = true;
      out.failure = e.what();
    } catch (const std::runtime_error& e) {
      // too few surviving bootstrap chains
      out.failed = true;
      out.failure = e.what();
    }
  });
  return out;
}

struct CoverageRow {
  std::string method;
  std::optional<FunctionalOrder> m;
  std::uint64_t T = 0;
  std::size_t reps = 0;
  std::size_t failed = 0;
  double coverage = 0.0;
  double mean_length = 0.0;
  double std_length = 0.0;
  std::uint64_t seed = 0;
  bool operator==(const CoverageRow&) const = default;
};

struct CoverageReport {
  std::vector<CoverageRow> rows;
  bool operator==(const CoverageReport&) const = default;

  const CoverageRow* find(const std::string& method, std::optional<FunctionalOrder> m, std::uint64_t T) const {
    for (const auto& r : rows)
      if (r.method == method && r.m == m && r.T == T) return &r;
    return nullptr;
  }
};

/// Monte-Carlo coverage study. Repetition k uses seeds derived from
/// (cfg.seed, k) and outcomes are merged in repetition order, so the report
/// is identical for any thread count.
inline CoverageReport run_coverage(const ExperimentConfig& cfg, std::size_t threads = 1) {
  cfg.validate();
  const auto table = resolve_critical_table(cfg, threads);
  const auto slots = method_slots(cfg);
  const auto checkpoints = cfg.resolved_checkpoints();

  std::vector<RepOutcome> outcomes(cfg.reps);
  parallel_for(cfg.reps, threads, [&](std::size_t rep) {
    outcomes[rep] = run_repetition(cfg, table, rep, [](std::uint64_t, double, auto&&) {});
  });

  CoverageReport report;
  for (std::size_t c = 0; c < checkpoints.size(); ++c)
    for (std::size_t s = 0; s < slots.size(); ++s) {
      CoverageRow row{slots[s].method, slots[s].m, checkpoints[c], cfg.reps, 0, 0.0, 0.0, 0.0, cfg.seed};
      std::size_t covered = 0, n = 0;
      double sum = 0.0, sumsq = 0.0;
      for (const auto& o : outcomes) {
        if (o.failed) {
          ++row.failed;
          continue;
        }
        const auto& ci = o.intervals[c][s];
        covered += ci.contains(o.target) ? 1 : 0;
        ++n;
        sum += ci.length();
        sumsq += ci.length() * ci.length();
      }
      if (n == 0) {
        row.coverage = row.mean_length = row.std_length = std::numeric_limits<double>::quiet_NaN();
      } else {
        row.coverage = static_cast<double>(covered) / static_cast<double>(n);
        row.mean_length = sum / static_cast<double>(n);
        row.std_length = n > 1 ? std::sqrt(std::max(0.0, (sumsq - sum * sum / n) / static_cast<double>(n - 1))) : 0.0;
      }
      report.rows.push_back(row);
    }
  return report;
}

/// Throws when any row lost more than `max_fraction` of its repetitions.
inline void enforce_failure_budget(const CoverageReport& report, double max_fraction = 0.05) {
  for (const auto& r : report.rows)
    if (static_cast<double>(r.failed) > max_fraction * static_cast<double>(r.reps))
      throw ExperimentError(std::to_string(r.failed) + " of " + std::to_string(r.reps) +
                            " repetitions diverged (method " + r.method + ")");
}

inline constexpr const char* kReportHeader = "method,m,T,reps,failed,coverage,mean_length,std_length,seed";

inline std::string format_g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// CSV schema: method,m,T,reps,failed,coverage,mean_length,std_length,seed
// m is empty for bootstrap rows; reals carry 6 significant digits.
inline void write_report_csv(std::ostream& os, const CoverageReport& report) {
  os << kReportHeader << '\n';
  for (const auto& r : report.rows)
    os << r.method << ',' << (r.m ? r.m->to_string() : "") << ',' << r.T << ',' << r.reps << ',' << r.failed << ','
       << format_g6(r.coverage) << ',' << format_g6(r.mean_length) << ',' << format_g6(r.std_length) << ','
       << r.seed << '\n';
}

inline void emit_report(const CoverageReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  write_report_csv(out, report);
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline CoverageReport parse_report_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kReportHeader) throw std::runtime_error("report csv: bad header");
  CoverageReport rep;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 9) throw std::runtime_error("report csv: expected 9 fields: " + line);
    CoverageRow r;
    r.method = f[0];
    if (!f[1].empty()) r.m = FunctionalOrder::parse(f[1]);
    r.T = std::stoull(f[2]);
    r.reps = std::stoull(f[3]);
    r.failed = std::stoull(f[4]);
    r.coverage = std::stod(f[5]);
    r.mean_length = std::stod(f[6]);
    r.std_length = std::stod(f[7]);
    r.seed = std::stoull(f[8]);
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

struct TraceRow {
  std::uint64_t t = 0;
  MethodSlot slot;
  ConfidenceInterval ci;
  double target = 0.0;
};

/// One trajectory (repetition 0) with the intervals of every slot recorded
/// every `cfg.trace_every` post-warm-up steps and at the final step.
inline std::vector<TraceRow> single_run(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto table = resolve_critical_table(cfg);
  const auto slots = method_slots(cfg);
  const auto last = cfg.inference_steps();
  std::vector<TraceRow> rows;
  const auto outcome = run_repetition(cfg, table, 0, [&](std::uint64_t t, double target, auto&& current) {
    if (t % cfg.trace_every != 0 && t != last) return;
    const auto cis = current();
    for (std::size_t s = 0; s < slots.size(); ++s) rows.push_back({t, slots[s], cis[s], target});
  });
  if (outcome.failed) throw ExperimentError(outcome.failure);
  return rows;
}

// CSV schema: t,method,m,center,lower,upper,target
inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  os << "t,method,m,center,lower,upper,target\n";
  for (const auto& r : rows)
    os << r.t << ',' << r.slot.method << ',' << (r.slot.m ? r.slot.m->to_string() : "") << ','
       << format_g6(r.ci.center) << ',' << format_g6(r.ci.lower) << ',' << format_g6(r.ci.upper) << ','
       << format_g6(r.target) << '\n';
}

}  // namespace sainf
