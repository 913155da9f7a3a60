#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "altq/common.hpp"
#include "altq/lqr.hpp"
#include "altq/optim.hpp"
#include "altq/qlinear.hpp"
#include "altq/tabular.hpp"

namespace altq {

using nlohmann::json;

struct TabularGeneratorSpec {
  std::uint64_t seed = 1;
  int n_states = 4;
  int n_actions = 2;
  double r_max = 1.0;
  double gamma = 0.5;
  bool deterministic = false;
};

struct TabularTablesSpec {
  TabularMdp mdp;
};

struct LqrSpec {
  LqrModel model;
  double z_max = 1.0;
  double theta0_h_scale = 0.5;
  LqrBehavior behavior;
};

using EnvSpec = std::variant<TabularGeneratorSpec, TabularTablesSpec, LqrSpec>;

inline bool env_is_tabular(const EnvSpec& e) { return !std::holds_alternative<LqrSpec>(e); }

struct RunConfig {
  EnvSpec env;
  std::vector<Algorithm> algorithms;
  Schedule sched;
  double domain_radius = 1.0;
  double tau = 1.0;
  std::int64_t steps = 1000;
  int batch_size = 32;
  bool double_q = false;
  double adam_epsilon = 1e-8;
  std::vector<std::uint64_t> seeds;
  std::int64_t metric_cadence = 100;
  std::optional<double> stop_k_err;
  std::optional<double> assumption_c;  // for bound reports on non-tabular runs
};

namespace detail {

inline void check_keys(const json& obj, const std::vector<std::string>& allowed,
                       const std::string& where, std::vector<std::string>& problems) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) problems.push_back(where + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
std::optional<T> field(const json& obj, const char* key, const std::string& where,
                       std::vector<std::string>& problems, bool required) {
  if (!obj.contains(key)) {
    if (required) problems.push_back(where + ": missing required key '" + key + "'");
    return std::nullopt;
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    problems.push_back(where + ": key '" + std::string(key) + "' has the wrong type");
    return std::nullopt;
  }
}

inline std::optional<Mat> matrix_field(const json& obj, const char* key, const std::string& where,
                                       std::vector<std::string>& problems, bool required) {
  auto rows = field<std::vector<std::vector<double>>>(obj, key, where, problems, required);
  if (!rows) return std::nullopt;
  const std::size_t nr = rows->size();
  if (nr == 0) {
    problems.push_back(where + ": key '" + std::string(key) + "' must be a non-empty matrix");
    return std::nullopt;
  }
  const std::size_t nc = (*rows)[0].size();
  Mat m(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nc));
  for (std::size_t i = 0; i < nr; ++i) {
    if ((*rows)[i].size() != nc) {
      problems.push_back(where + ": key '" + std::string(key) + "' has ragged rows");
      return std::nullopt;
    }
    for (std::size_t j = 0; j < nc; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*rows)[i][j];
  }
  return m;
}

inline json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

inline EnvSpec parse_env_spec(const json& obj, std::vector<std::string>& problems) {
  detail::check_keys(obj, {"kind", "generator", "tables", "lqr"}, "environment", problems);
  const auto kind = detail::field<std::string>(obj, "kind", "environment", problems, true);
  if (!kind) return TabularGeneratorSpec{};

  if (*kind == "tabular") {
    if (obj.contains("generator") == obj.contains("tables")) {
      problems.push_back("environment: tabular needs exactly one of 'generator' or 'tables'");
      return TabularGeneratorSpec{};
    }
    if (obj.contains("generator")) {
      const json& g = obj.at("generator");
      detail::check_keys(
          g, {"seed", "n_states", "n_actions", "r_max", "gamma", "deterministic"},
          "environment.generator", problems);
      TabularGeneratorSpec spec;
      if (auto v = detail::field<std::uint64_t>(g, "seed", "environment.generator", problems, true)) spec.seed = *v;
      if (auto v = detail::field<int>(g, "n_states", "environment.generator", problems, true)) spec.n_states = *v;
      if (auto v = detail::field<int>(g, "n_actions", "environment.generator", problems, true)) spec.n_actions = *v;
      if (auto v = detail::field<double>(g, "r_max", "environment.generator", problems, true)) spec.r_max = *v;
      if (auto v = detail::field<double>(g, "gamma", "environment.generator", problems, true)) spec.gamma = *v;
      if (auto v = detail::field<bool>(g, "deterministic", "environment.generator", problems, false)) spec.deterministic = *v;
      if (spec.n_states < 1) problems.push_back("environment.generator: n_states must be >= 1");
      if (spec.n_actions < 1) problems.push_back("environment.generator: n_actions must be >= 1");
      if (!(spec.gamma > 0.0 && spec.gamma < 1.0)) problems.push_back("environment.generator: gamma must be in (0,1)");
      if (!(spec.r_max >= 0.0)) problems.push_back("environment.generator: r_max must be >= 0");
      return spec;
    }
    const json& tb = obj.at("tables");
    detail::check_keys(tb, {"n_states", "n_actions", "transitions", "rewards", "r_max", "gamma"},
                       "environment.tables", problems);
    TabularTablesSpec spec;
    auto ns = detail::field<int>(tb, "n_states", "environment.tables", problems, true);
    auto na = detail::field<int>(tb, "n_actions", "environment.tables", problems, true);
    auto pr = detail::field<std::vector<double>>(tb, "transitions", "environment.tables", problems, true);
    auto rw = detail::matrix_field(tb, "rewards", "environment.tables", problems, true);
    auto rm = detail::field<double>(tb, "r_max", "environment.tables", problems, true);
    auto gm = detail::field<double>(tb, "gamma", "environment.tables", problems, true);
    if (ns && na && pr && rw && rm && gm) {
      spec.mdp.n_states = *ns;
      spec.mdp.n_actions = *na;
      spec.mdp.p = *pr;
      spec.mdp.r = *rw;
      spec.mdp.r_max = *rm;
      spec.mdp.gamma = *gm;
      try {
        spec.mdp.validate();
      } catch (const std::exception& ex) {
        problems.push_back(std::string("environment.tables: ") + ex.what());
      }
    }
    return spec;
  }

  if (*kind == "lqr") {
    if (!obj.contains("lqr")) {
      problems.push_back("environment: lqr kind needs an 'lqr' block");
      return TabularGeneratorSpec{};
    }
    const json& l = obj.at("lqr");
    detail::check_keys(l,
                       {"a", "b", "qc", "rc", "n", "gamma", "z_max", "theta0_h_scale",
                        "explore_eps", "action_noise", "reset_std", "reset_bound",
                        "process_noise"},
                       "environment.lqr", problems);
    LqrSpec spec;
    auto a = detail::matrix_field(l, "a", "environment.lqr", problems, true);
    auto b = detail::matrix_field(l, "b", "environment.lqr", problems, true);
    auto qc = detail::matrix_field(l, "qc", "environment.lqr", problems, true);
    auto rc = detail::matrix_field(l, "rc", "environment.lqr", problems, true);
    auto n = detail::matrix_field(l, "n", "environment.lqr", problems, false);
    if (a && b && qc && rc) {
      spec.model.a = *a;
      spec.model.b = *b;
      spec.model.qc = *qc;
      spec.model.rc = *rc;
      spec.model.n = n ? *n : Mat(Mat::Zero(a->rows(), b->cols()));
    }
    if (auto v = detail::field<double>(l, "gamma", "environment.lqr", problems, true)) spec.model.gamma = *v;
    if (auto v = detail::field<double>(l, "z_max", "environment.lqr", problems, true)) spec.z_max = *v;
    if (auto v = detail::field<double>(l, "theta0_h_scale", "environment.lqr", problems, true)) spec.theta0_h_scale = *v;
    if (auto v = detail::field<double>(l, "explore_eps", "environment.lqr", problems, false)) spec.behavior.explore_eps = *v;
    if (auto v = detail::field<double>(l, "action_noise", "environment.lqr", problems, false)) spec.behavior.action_noise = *v;
    if (auto v = detail::field<double>(l, "reset_std", "environment.lqr", problems, false)) spec.behavior.reset_std = *v;
    if (auto v = detail::field<double>(l, "reset_bound", "environment.lqr", problems, false)) spec.behavior.reset_bound = *v;
    if (auto v = detail::field<double>(l, "process_noise", "environment.lqr", problems, false)) spec.behavior.process_noise = *v;
    if (a && b && qc && rc) {
      try {
        spec.model.validate();
      } catch (const std::exception& ex) {
        problems.push_back(std::string("environment.lqr: ") + ex.what());
      }
    }
    if (!(spec.z_max > 0.0)) problems.push_back("environment.lqr: z_max must be > 0");
    if (!(spec.theta0_h_scale > 0.0)) problems.push_back("environment.lqr: theta0_h_scale must be > 0");
    return spec;
  }

  problems.push_back("environment: kind must be 'tabular' or 'lqr'");
  return TabularGeneratorSpec{};
}

inline json env_spec_to_json(const EnvSpec& env) {
  json out;
  if (const auto* g = std::get_if<TabularGeneratorSpec>(&env)) {
    out["kind"] = "tabular";
    out["generator"] = {{"seed", g->seed},
                        {"n_states", g->n_states},
                        {"n_actions", g->n_actions},
                        {"r_max", g->r_max},
                        {"gamma", g->gamma},
                        {"deterministic", g->deterministic}};
  } else if (const auto* t = std::get_if<TabularTablesSpec>(&env)) {
    out["kind"] = "tabular";
    json rows = json::array();
    for (Eigen::Index i = 0; i < t->mdp.r.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < t->mdp.r.cols(); ++j) row.push_back(t->mdp.r(i, j));
      rows.push_back(row);
    }
    out["tables"] = {{"n_states", t->mdp.n_states}, {"n_actions", t->mdp.n_actions},
                     {"transitions", t->mdp.p},     {"rewards", rows},
                     {"r_max", t->mdp.r_max},       {"gamma", t->mdp.gamma}};
  } else {
    const auto& l = std::get<LqrSpec>(env);
    out["kind"] = "lqr";
    out["lqr"] = {{"a", detail::matrix_to_json(l.model.a)},
                  {"b", detail::matrix_to_json(l.model.b)},
                  {"qc", detail::matrix_to_json(l.model.qc)},
                  {"rc", detail::matrix_to_json(l.model.rc)},
                  {"n", detail::matrix_to_json(l.model.n)},
                  {"gamma", l.model.gamma},
                  {"z_max", l.z_max},
                  {"theta0_h_scale", l.theta0_h_scale},
                  {"explore_eps", l.behavior.explore_eps},
                  {"action_noise", l.behavior.action_noise},
                  {"reset_std", l.behavior.reset_std},
                  {"reset_bound", l.behavior.reset_bound},
                  {"process_noise", l.behavior.process_noise}};
  }
  return out;
}

inline RunConfig parse_config_json(const json& root) {
  std::vector<std::string> problems;
  if (!root.is_object()) throw ConfigError({"config root must be a JSON object"});
  detail::check_keys(root,
                     {"environment", "algorithms", "schedule", "domain_radius", "tau", "steps",
                      "batch_size", "double_q", "adam_epsilon", "seeds", "metric_cadence",
                      "stop_k_err", "assumption_c"},
                     "config", problems);

  RunConfig cfg;
  if (root.contains("environment") && root.at("environment").is_object()) {
    cfg.env = parse_env_spec(root.at("environment"), problems);
  } else {
    problems.push_back("config: missing required key 'environment'");
  }

  if (auto names = detail::field<std::vector<std::string>>(root, "algorithms", "config", problems, true)) {
    for (const auto& s : *names) {
      if (auto a = algorithm_from_name(s)) {
        cfg.algorithms.push_back(*a);
      } else {
        problems.push_back("config: unknown algorithm '" + s + "'");
      }
    }
    if (names->empty()) problems.push_back("config: algorithms must be non-empty");
  }

  if (root.contains("schedule") && root.at("schedule").is_object()) {
    const json& s = root.at("schedule");
    detail::check_keys(s, {"alpha", "beta1", "beta1_decay", "beta2", "restart_period"},
                       "schedule", problems);
    if (auto v = detail::field<double>(s, "alpha", "schedule", problems, true)) cfg.sched.alpha = *v;
    if (auto v = detail::field<double>(s, "beta1", "schedule", problems, true)) cfg.sched.beta1 = *v;
    if (auto v = detail::field<double>(s, "beta1_decay", "schedule", problems, true)) cfg.sched.beta1_decay = *v;
    if (auto v = detail::field<double>(s, "beta2", "schedule", problems, true)) cfg.sched.beta2 = *v;
    if (auto v = detail::field<std::int64_t>(s, "restart_period", "schedule", problems, false)) cfg.sched.restart_period = *v;
    if (!(cfg.sched.alpha > 0.0)) problems.push_back("schedule: alpha must be > 0");
    if (!(cfg.sched.beta1 >= 0.0 && cfg.sched.beta1 < 1.0)) problems.push_back("schedule: beta1 must be in [0,1)");
    if (!(cfg.sched.beta1_decay > 0.0 && cfg.sched.beta1_decay < 1.0)) problems.push_back("schedule: beta1_decay must be in (0,1)");
    if (!(cfg.sched.beta2 > 0.0 && cfg.sched.beta2 < 1.0)) problems.push_back("schedule: beta2 must be in (0,1)");
    if (cfg.sched.beta1 >= cfg.sched.beta2) problems.push_back("schedule: beta1 must be < beta2");
    if (cfg.sched.restart_period && *cfg.sched.restart_period < 1) problems.push_back("schedule: restart_period must be >= 1");
  } else {
    problems.push_back("config: missing required key 'schedule'");
  }

  if (auto v = detail::field<double>(root, "domain_radius", "config", problems, true)) cfg.domain_radius = *v;
  if (auto v = detail::field<double>(root, "tau", "config", problems, true)) cfg.tau = *v;
  if (auto v = detail::field<std::int64_t>(root, "steps", "config", problems, true)) cfg.steps = *v;
  if (auto v = detail::field<int>(root, "batch_size", "config", problems, false)) cfg.batch_size = *v;
  if (auto v = detail::field<bool>(root, "double_q", "config", problems, false)) cfg.double_q = *v;
  if (auto v = detail::field<double>(root, "adam_epsilon", "config", problems, false)) cfg.adam_epsilon = *v;
  if (auto v = detail::field<std::vector<std::uint64_t>>(root, "seeds", "config", problems, true)) cfg.seeds = *v;
  if (auto v = detail::field<std::int64_t>(root, "metric_cadence", "config", problems, false)) cfg.metric_cadence = *v;
  if (auto v = detail::field<double>(root, "stop_k_err", "config", problems, false)) cfg.stop_k_err = *v;
  if (auto v = detail::field<double>(root, "assumption_c", "config", problems, false)) cfg.assumption_c = *v;

  if (!(cfg.domain_radius > 0.0)) problems.push_back("config: domain_radius must be > 0");
  if (!(cfg.tau > 0.0 && cfg.tau <= 1.0)) problems.push_back("config: tau must be in (0,1]");
  if (cfg.steps < 1) problems.push_back("config: steps must be >= 1");
  if (cfg.batch_size < 1) problems.push_back("config: batch_size must be >= 1");
  if (!(cfg.adam_epsilon >= 0.0)) problems.push_back("config: adam_epsilon must be >= 0");
  if (cfg.seeds.empty()) problems.push_back("config: seeds must be non-empty");
  if (cfg.metric_cadence < 1) problems.push_back("config: metric_cadence must be >= 1");
  if (cfg.stop_k_err && !(*cfg.stop_k_err > 0.0)) problems.push_back("config: stop_k_err must be > 0");
  for (Algorithm a : cfg.algorithms) {
    if (uses_restart(a) && !cfg.sched.restart_period) {
      problems.push_back(std::string("config: algorithm '") + algorithm_name(a) +
                         "' requires schedule.restart_period");
    }
  }

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

inline json config_to_json(const RunConfig& cfg) {
  json root;
  root["environment"] = env_spec_to_json(cfg.env);
  json algos = json::array();
  for (Algorithm a : cfg.algorithms) algos.push_back(algorithm_name(a));
  root["algorithms"] = algos;
  json sched = {{"alpha", cfg.sched.alpha},
                {"beta1", cfg.sched.beta1},
                {"beta1_decay", cfg.sched.beta1_decay},
                {"beta2", cfg.sched.beta2}};
  if (cfg.sched.restart_period) sched["restart_period"] = *cfg.sched.restart_period;
  root["schedule"] = sched;
  root["domain_radius"] = cfg.domain_radius;
  root["tau"] = cfg.tau;
  root["steps"] = cfg.steps;
  root["batch_size"] = cfg.batch_size;
  root["double_q"] = cfg.double_q;
  root["adam_epsilon"] = cfg.adam_epsilon;
  root["seeds"] = cfg.seeds;
  root["metric_cadence"] = cfg.metric_cadence;
  if (cfg.stop_k_err) root["stop_k_err"] = *cfg.stop_k_err;
  if (cfg.assumption_c) root["assumption_c"] = *cfg.assumption_c;
  return root;
}

// Shipped instances. The 2-state model is stable in open loop, its DARE
// solution certifies a stable closed loop, and its scales are matched to the
// quadratic feature normalization.
inline json preset_lqr_table1() {
  return json{
      {"environment",
       {{"kind", "lqr"},
        {"lqr",
         {{"a", {{0.5, 0.3}, {0.1, 0.6}}},
          {"b", {{0.0}, {1.0}}},
          {"qc", {{0.05, 0.0}, {0.0, 0.05}}},
          {"rc", {{0.1}}},
          {"n", {{0.0}, {0.0}}},
          {"gamma", 1.0},
          {"z_max", 0.7},
          {"theta0_h_scale", 0.1},
          {"explore_eps", 0.1},
          {"action_noise", 0.15},
          {"reset_std", 0.25},
          {"reset_bound", 0.5},
          {"process_noise", 0.0}}}}},
      {"algorithms", {"adam_r", "adam", "sgd"}},
      {"schedule",
       {{"alpha", 0.0001},
        {"beta1", 0.9},
        {"beta1_decay", 0.999999},
        {"beta2", 0.999},
        {"restart_period", 100}}},
      {"domain_radius", 10.0},
      {"tau", 0.01},
      {"steps", 2000000},
      {"batch_size", 32},
      {"double_q", true},
      {"adam_epsilon", 1e-15},
      {"seeds", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}},
      {"metric_cadence", 10000},
      {"stop_k_err", 0.0001}};
}

inline json preset_lqr_scalar() {
  return json{{"environment",
               {{"kind", "lqr"},
                {"lqr",
                 {{"a", {{1.0}}},
                  {"b", {{1.0}}},
                  {"qc", {{1.0}}},
                  {"rc", {{1.0}}},
                  {"n", {{0.0}}},
                  {"gamma", 1.0},
                  {"z_max", 1.0},
                  {"theta0_h_scale", 0.5},
                  {"explore_eps", 0.2},
                  {"action_noise", 0.2},
                  {"reset_std", 0.3},
                  {"reset_bound", 0.6},
                  {"process_noise", 0.0}}}}},
              {"algorithms", {"adam_r"}},
              {"schedule",
               {{"alpha", 0.0001},
                {"beta1", 0.9},
                {"beta1_decay", 0.999999},
                {"beta2", 0.999},
                {"restart_period", 100}}},
              {"domain_radius", 10.0},
              {"tau", 0.01},
              {"steps", 100000},
              {"batch_size", 32},
              {"double_q", false},
              {"adam_epsilon", 1e-15},
              {"seeds", {1, 2, 3}},
              {"metric_cadence", 1000},
              {"stop_k_err", 0.0001}};
}

inline json preset_tabular_demo() {
  return json{{"environment",
               {{"kind", "tabular"},
                {"generator",
                 {{"seed", 7},
                  {"n_states", 3},
                  {"n_actions", 2},
                  {"r_max", 1.0},
                  {"gamma", 0.5},
                  {"deterministic", true}}}}},
              {"algorithms", {"amsgrad", "amsgrad_r", "sgd"}},
              {"schedule",
               {{"alpha", 0.5},
                {"beta1", 0.9},
                {"beta1_decay", 0.99},
                {"beta2", 0.999},
                {"restart_period", 100}}},
              {"domain_radius", 8.0},
              {"tau", 1.0},
              {"steps", 20000},
              {"batch_size", 1},
              {"double_q", false},
              {"adam_epsilon", 1e-8},
              {"seeds", {1, 2, 3}},
              {"metric_cadence", 100}};
}

struct PresetInfo {
  const char* name;
  const char* summary;
  json (*make)();
};

inline const std::vector<PresetInfo>& presets() {
  static const std::vector<PresetInfo> list = {
      {"lqr_table1",
       "2-state LQR suite: adaptive updates with and without restart vs projected SGD",
       &preset_lqr_table1},
      {"lqr_scalar", "scalar LQR instance with a closed-form Riccati solution",
       &preset_lqr_scalar},
      {"tabular_demo", "small deterministic tabular MDP suite", &preset_tabular_demo},
  };
  return list;
}

inline std::optional<json> preset_by_name(const std::string& name) {
  for (const auto& p : presets()) {
    if (name == p.name) return p.make();
  }
  return std::nullopt;
}

}  // namespace altq
