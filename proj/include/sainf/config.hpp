#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sainf/bootstrap.hpp"
#include "sainf/critical_values.hpp"
#include "sainf/inference.hpp"
#include "sainf/step_schedule.hpp"

namespace sainf {

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

enum class ProblemKind { linreg_ar, logistic_ar, qlearning };
enum class Method { random_scaling, bootstrap };
enum class CriticalSource { embedded, simulate, file };

inline std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::linreg_ar: return "linreg_ar";
    case ProblemKind::logistic_ar: return "logistic_ar";
    case ProblemKind::qlearning: return "qlearning";
  }
  return "?";
}

inline const std::vector<FunctionalOrder>& supported_orders() {
  static const std::vector<FunctionalOrder> v{FunctionalOrder(1), FunctionalOrder(2), FunctionalOrder(3),
                                              FunctionalOrder(4), FunctionalOrder(6), FunctionalOrder::infinity()};
  return v;
}

/// Every knob of a coverage experiment. `T` counts all SA updates including
/// the warm-up; checkpoints count post-warm-up iterates (the T of the
/// interval formula).
struct ExperimentConfig {
  ProblemKind problem = ProblemKind::linreg_ar;
  std::size_t d = 10;
  double rho_eps = 0.9;
  std::size_t n_states = 5;
  std::size_t n_actions = 5;
  double gamma = 0.6;
  double min_gap = 1e-6;
  double vi_tol = 1e-10;

  double eta = 1.0;
  double eta_dim_exponent = 0.0;  // effective scale eta * d^exponent
  double step_alpha = 0.505;
  double step_offset = 0.0;

  std::uint64_t T = 10000;
  std::optional<std::uint64_t> warmup;
  double warmup_fraction = 0.0;
  std::size_t reps = 200;
  std::vector<std::uint64_t> checkpoints;

  Method method = Method::random_scaling;
  std::vector<FunctionalOrder> m_list{FunctionalOrder(2)};
  double alpha = 0.05;
  bool exact_integrals = false;
  CriticalSource critical_source = CriticalSource::embedded;
  std::string critical_file;
  BrownianBudget critical_budget{};

  std::size_t B = 100;
  MultiplierLaw multiplier = MultiplierLaw::shifted_rademacher;

  std::uint64_t seed = 1;
  std::string output;
  std::uint64_t trace_every = 100;

  std::size_t dimension() const {
    return problem == ProblemKind::qlearning ? n_states * n_actions : d;
  }

  std::uint64_t warmup_steps() const {
    if (warmup) return *warmup;
    return static_cast<std::uint64_t>(std::floor(warmup_fraction * static_cast<double>(T) + 1e-9));
  }

  std::uint64_t inference_steps() const { return T - warmup_steps(); }

  StepSchedule schedule() const {
    const double scale = eta * std::pow(static_cast<double>(problem == ProblemKind::qlearning ? 1 : d), eta_dim_exponent);
    return StepSchedule(scale, step_alpha, step_offset);
  }

  std::vector<std::uint64_t> resolved_checkpoints() const {
    if (checkpoints.empty()) return {inference_steps()};
    auto c = checkpoints;
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    return c;
  }

  void validate() const {
    if (problem == ProblemKind::qlearning) {
      if (n_states < 1) throw ConfigError("problem.n_states", "must be >= 1");
      if (n_actions < 1) throw ConfigError("problem.n_actions", "must be >= 1");
      if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("problem.gamma", "must lie in [0, 1)");
      if (!(vi_tol > 0.0)) throw ConfigError("problem.vi_tol", "must be positive");
    } else {
      if (d < 1) throw ConfigError("problem.d", "must be >= 1");
      if (!(rho_eps >= 0.0 && rho_eps < 1.0)) throw ConfigError("problem.rho_eps", "must lie in [0, 1)");
    }
    try {
      (void)schedule();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("schedule", e.what());
    }
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) throw ConfigError("run.warmup_fraction", "must lie in [0, 1)");
    if (T < 1) throw ConfigError("run.T", "must be >= 1");
    if (warmup_steps() >= T) throw ConfigError("run.warmup", "must be smaller than run.T");
    if (reps < 1) throw ConfigError("run.reps", "must be >= 1");
    for (auto c : checkpoints)
      if (c < 1 || c > inference_steps())
        throw ConfigError("run.checkpoints", "each checkpoint must lie in [1, run.T - run.warmup]");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("inference.alpha", "must lie in (0, 1]");
    if (method == Method::random_scaling) {
      if (m_list.empty()) throw ConfigError("inference.m", "needs at least one order");
      for (auto m : m_list)
        if (std::find(supported_orders().begin(), supported_orders().end(), m) == supported_orders().end())
          throw ConfigError("inference.m", "order " + m.to_string() + " not in {1,2,3,4,6,inf}");
    } else {
      if (problem != ProblemKind::linreg_ar) throw ConfigError("inference.method", "bootstrap runs on linreg_ar only");
      if (B < 20) throw ConfigError("bootstrap.B", "must be >= 20");
    }
    if (critical_source == CriticalSource::simulate && critical_budget.steps < 2)
      throw ConfigError("inference.critical_steps", "must be >= 2");
    if (trace_every < 1) throw ConfigError("trace.every", "must be >= 1");
  }
};

namespace detail {

inline std::string trim(std::string s) {
  auto ns = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), ns));
  s.erase(std::find_if(s.rbegin(), s.rend(), ns).base(), s.end());
  return s;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key, "not a number: '" + v + "'");
  }
}

inline std::uint64_t to_count(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (!(x >= 0.0) || x != std::floor(x) || x > 1e18) throw ConfigError(key, "not a non-negative integer: '" + v + "'");
  return static_cast<std::uint64_t>(x);
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "not a boolean: '" + v + "'");
}

}  // namespace detail

/// Applies flat dotted keys (`problem.d = 10`) to a default configuration.
/// Unknown keys are rejected.
inline ExperimentConfig config_from_pairs(const std::map<std::string, std::string>& kv) {
  using namespace detail;
  ExperimentConfig c;
  for (const auto& [key, v] : kv) {
    if (key == "problem.kind") {
      if (v == "linreg_ar") c.problem = ProblemKind::linreg_ar;
      else if (v == "logistic_ar") c.problem = ProblemKind::logistic_ar;
      else if (v == "qlearning") c.problem = ProblemKind::qlearning;
      else throw ConfigError(key, "unknown problem '" + v + "'");
    } else if (key == "problem.d") c.d = to_count(key, v);
    else if (key == "problem.rho_eps") c.rho_eps = to_double(key, v);
    else if (key == "problem.n_states") c.n_states = to_count(key, v);
    else if (key == "problem.n_actions") c.n_actions = to_count(key, v);
    else if (key == "problem.gamma") c.gamma = to_double(key, v);
    else if (key == "problem.min_gap") c.min_gap = to_double(key, v);
    else if (key == "problem.vi_tol") c.vi_tol = to_double(key, v);
    else if (key == "schedule.eta") c.eta = to_double(key, v);
    else if (key == "schedule.eta_dim_exponent") c.eta_dim_exponent = to_double(key, v);
    else if (key == "schedule.alpha") c.step_alpha = to_double(key, v);
    else if (key == "schedule.offset") c.step_offset = to_double(key, v);
    else if (key == "run.T") c.T = to_count(key, v);
    else if (key == "run.warmup") c.warmup = to_count(key, v);
    else if (key == "run.warmup_fraction") c.warmup_fraction = to_double(key, v);
    else if (key == "run.reps") c.reps = to_count(key, v);
    else if (key == "run.checkpoints") {
      c.checkpoints.clear();
      for (const auto& item : split_list(v)) c.checkpoints.push_back(to_count(key, item));
    } else if (key == "inference.method") {
      if (v == "random_scaling") c.method = Method::random_scaling;
      else if (v == "bootstrap") c.method = Method::bootstrap;
      else throw ConfigError(key, "unknown method '" + v + "'");
    } else if (key == "inference.m") {
      c.m_list.clear();
      try {
        for (const auto& item : split_list(v)) c.m_list.push_back(FunctionalOrder::parse(item));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
      }
    } else if (key == "inference.alpha") c.alpha = to_double(key, v);
    else if (key == "inference.exact") c.exact_integrals = to_bool(key, v);
    else if (key == "inference.critical_values") {
      if (v == "embedded") c.critical_source = CriticalSource::embedded;
      else if (v == "simulate") c.critical_source = CriticalSource::simulate;
      else {
        c.critical_source = CriticalSource::file;
        c.critical_file = v;
      }
    } else if (key == "inference.critical_steps") c.critical_budget.steps = to_count(key, v);
    else if (key == "inference.critical_reps") c.critical_budget.reps = to_count(key, v);
    else if (key == "bootstrap.B") c.B = to_count(key, v);
    else if (key == "bootstrap.multiplier") {
      if (v == "rademacher") c.multiplier = MultiplierLaw::shifted_rademacher;
      else if (v == "unit") c.multiplier = MultiplierLaw::unit;
      else throw ConfigError(key, "unknown multiplier '" + v + "'");
    } else if (key == "seed") c.seed = to_count(key, v);
    else if (key == "output") c.output = v;
    else if (key == "trace.every") c.trace_every = to_count(key, v);
    else throw ConfigError(key, "unknown key");
  }
  return c;
}

/// Key-value text: one `key = value` per line, `#` starts a comment.
inline std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  return kv;
}

namespace detail {
inline void flatten_json(const nlohmann::json& j, const std::string& prefix, std::map<std::string, std::string>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten_json(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array()) {
    std::string joined;
    for (const auto& e : j) {
      if (!joined.empty()) joined += ",";
      joined += e.is_string() ? e.get<std::string>() : e.dump();
    }
    out[prefix] = joined;
  } else if (j.is_string()) {
    out[prefix] = j.get<std::string>();
  } else {
    out[prefix] = j.dump();
  }
}
}  // namespace detail

/// Same schema as the key-value form, nested: {"problem": {"d": 10}, ...}.
inline std::map<std::string, std::string> parse_json_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("json", e.what());
  }
  std::map<std::string, std::string> kv;
  detail::flatten_json(j, "", kv);
  return kv;
}

inline ExperimentConfig parse_config(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  const bool json = first != std::string::npos && text[first] == '{';
  auto cfg = config_from_pairs(json ? parse_json_config(text) : parse_key_values(text));
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace sainf
