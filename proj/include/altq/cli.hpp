#pragma once

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "altq/harness.hpp"

namespace altq {

inline json load_config_json(const std::string& spec) {
  if (auto preset = preset_by_name(spec)) return *preset;
  std::ifstream in(spec);
  if (!in) {
    throw ConfigError({"config '" + spec + "' is neither a shipped preset nor a readable file"});
  }
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& ex) {
    throw ConfigError({"config '" + spec + "': " + ex.what()});
  }
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      seeds.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw ConfigError({"--seeds: '" + tok + "' is not an integer"});
    }
  }
  if (seeds.empty()) throw ConfigError({"--seeds: empty list"});
  return seeds;
}

inline std::string fmt_matrix(const Mat& m) {
  std::ostringstream os;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << "  [";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", m(i, j));
      os << (j ? " " : "") << buf;
    }
    os << "]\n";
  }
  return os.str();
}

inline void print_oracle(const RunConfig& cfg, std::ostream& out) {
  const EnvVariant env = build_env(cfg.env);
  const SuiteOracle oracle = build_oracle(env, cfg);
  if (oracle.tabular) {
    out << "tabular oracle (value iteration)\n";
    out << "Q* =\n" << fmt_matrix(*oracle.q_star);
    out << "theta* = [";
    for (Eigen::Index i = 0; i < oracle.theta_star->size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", (*oracle.theta_star)[i]);
      out << (i ? " " : "") << buf;
    }
    out << "]\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", *oracle.c);
    out << "monotonicity constant c = " << buf << "\n";
  } else {
    out << "lqr oracle (Riccati fixed point)\n";
    out << "P =\n" << fmt_matrix(*oracle.p_star);
    out << "K* =\n" << fmt_matrix(*oracle.k_star);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3e", *oracle.dare_residual);
    out << "residual = " << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.6f", *oracle.closed_loop_rho);
    out << "closed-loop spectral radius = " << buf << "\n";
  }
}

// Subcommands: run, oracle, bounds, aggregate, presets.
// Exit codes: 0 success, 1 validation error, 2 runtime failure.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"alternating Q-learning with adaptive-moment updates"};
  app.name("altq");
  app.require_subcommand(1);

  std::string config_spec;
  std::string out_dir;
  std::string seeds_csv;
  std::string algo_name;
  std::int64_t steps_override = -1;

  auto* cmd_run = app.add_subcommand("run", "execute a seeded suite and emit CSV artifacts");
  cmd_run->add_option("--config", config_spec, "preset name or config file path")->required();
  cmd_run->add_option("--out", out_dir, "output directory")->required();
  cmd_run->add_option("--seeds", seeds_csv, "comma-separated seed list override");
  cmd_run->add_option("--algo", algo_name, "run a single algorithm instead of the configured set");
  cmd_run->add_option("--steps", steps_override, "step-count override");

  auto* cmd_oracle = app.add_subcommand("oracle", "print model-based reference solutions");
  cmd_oracle->add_option("--config", config_spec, "preset name or config file path")->required();

  auto* cmd_bounds =
      app.add_subcommand("bounds", "evaluate the inequality report over an existing suite");
  cmd_bounds->add_option("--out", out_dir, "suite output directory")->required();

  std::vector<std::string> agg_inputs;
  auto* cmd_agg = app.add_subcommand("aggregate", "mean/std summary across seeds");
  cmd_agg->add_option("inputs", agg_inputs, "metrics CSV files (default: <out>/metrics.csv)");
  cmd_agg->add_option("--out", out_dir, "output directory")->required();

  auto* cmd_presets = app.add_subcommand("presets", "list shipped instances");

  std::vector<std::string> argv_store = args;
  std::vector<char*> argv;
  argv.push_back(const_cast<char*>("altq"));
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cmd_presets->parsed()) {
      for (const auto& p : presets()) {
        out << p.name << ": " << p.summary << "\n";
      }
      return 0;
    }
    if (cmd_oracle->parsed()) {
      const RunConfig cfg = parse_config_json(load_config_json(config_spec));
      print_oracle(cfg, out);
      return 0;
    }
    if (cmd_bounds->parsed()) {
      write_bounds_report(out_dir);
      out << out_dir << "/bounds_report.csv\n";
      return 0;
    }
    if (cmd_agg->parsed()) {
      std::vector<std::string> inputs = agg_inputs;
      if (inputs.empty()) inputs.push_back(out_dir + "/metrics.csv");
      aggregate_metrics(inputs, out_dir + "/summary.csv");
      out << out_dir << "/summary.csv\n";
      return 0;
    }
    if (cmd_run->parsed()) {
      json root = load_config_json(config_spec);
      if (!seeds_csv.empty()) root["seeds"] = parse_seed_list(seeds_csv);
      if (!algo_name.empty()) root["algorithms"] = std::vector<std::string>{algo_name};
      if (steps_override > 0) root["steps"] = steps_override;
      const RunConfig cfg = parse_config_json(root);
      const SuiteResult res = run_suite(cfg);
      write_suite(res, cfg, out_dir);
      std::size_t failed = 0;
      for (const auto& r : res.runs) {
        if (r.trace.failure) ++failed;
      }
      out << out_dir << "/metrics.csv\n";
      if (failed == res.runs.size()) {
        err << "all " << failed << " runs failed; see " << out_dir << "/runs.csv\n";
        return 2;
      }
      if (failed > 0) {
        err << failed << " of " << res.runs.size() << " runs failed; see " << out_dir
            << "/runs.csv\n";
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace altq
