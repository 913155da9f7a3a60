#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "altq/bounds.hpp"
#include "altq/config.hpp"
#include "altq/oracle.hpp"

namespace altq {

enum class LogLevel { error = 0, info = 1, debug = 2 };

inline LogLevel log_level() {
  static const LogLevel lvl = [] {
    const char* v = std::getenv("ALTQ_LOG_LEVEL");
    if (!v) return LogLevel::info;
    const std::string s(v);
    if (s == "error") return LogLevel::error;
    if (s == "debug") return LogLevel::debug;
    return LogLevel::info;
  }();
  return lvl;
}

inline void log_line(LogLevel lvl, const std::string& msg) {
  if (static_cast<int>(lvl) <= static_cast<int>(log_level())) {
    std::fputs((msg + "\n").c_str(), stderr);
  }
}

inline void log_error(const std::string& m) { log_line(LogLevel::error, "[error] " + m); }
inline void log_info(const std::string& m) { log_line(LogLevel::info, "[info] " + m); }
inline void log_debug(const std::string& m) { log_line(LogLevel::debug, "[debug] " + m); }

// 17 significant digits: doubles round-trip exactly.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <class F>
void parallel_for(std::size_t n, F&& f) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(hw, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          f(i);
        } catch (...) {
          errors[w] = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Model-based reference quantities shared by every run of a suite.
struct SuiteOracle {
  bool tabular = true;
  double r_max = 0.0;
  double gamma = 0.0;
  Eigen::Index dim = 0;
  Vec theta0;
  std::optional<Vec> theta_star;
  std::optional<Mat> k_star;
  std::optional<double> c;
  std::optional<Mat> p_star;
  std::optional<double> dare_residual;
  std::optional<double> closed_loop_rho;
  std::optional<Mat> q_star;
};

using EnvVariant = std::variant<TabularEnv, LqrEnv>;

inline EnvVariant build_env(const EnvSpec& spec) {
  if (const auto* g = std::get_if<TabularGeneratorSpec>(&spec)) {
    return TabularEnv(
        random_mdp(g->seed, g->n_states, g->n_actions, g->r_max, g->gamma, g->deterministic));
  }
  if (const auto* t = std::get_if<TabularTablesSpec>(&spec)) {
    return TabularEnv(t->mdp);
  }
  const auto& l = std::get<LqrSpec>(spec);
  return LqrEnv(l.model, QuadFeatures(l.model.state_dim(), l.model.input_dim(), l.z_max),
                l.behavior);
}

inline SuiteOracle build_oracle(const EnvVariant& env, const RunConfig& cfg) {
  SuiteOracle o;
  if (const auto* tab = std::get_if<TabularEnv>(&env)) {
    o.tabular = true;
    o.r_max = tab->r_max();
    o.gamma = tab->gamma();
    o.dim = tab->dim();
    o.theta0 = Vec::Zero(o.dim);
    const OptimalQ opt = value_iteration(tab->mdp());
    o.q_star = opt.q_star;
    o.theta_star = theta_star_tabular(tab->mdp(), opt);
    std::mt19937_64 rng(0xc0ffee);
    o.c = estimate_c(tab->mdp(), Domain{cfg.domain_radius}, 10000, rng);
  } else {
    const auto& lqr = std::get<LqrEnv>(env);
    o.tabular = false;
    o.r_max = std::numeric_limits<double>::quiet_NaN();  // costs are unbounded
    o.gamma = lqr.gamma();
    o.dim = lqr.dim();
    const auto& spec = std::get<LqrSpec>(cfg.env);
    const Eigen::Index p = lqr.features_map().z_dim();
    o.theta0 = lqr.features_map().theta_for_h(spec.theta0_h_scale *
                                              Mat::Identity(p, p));
    const DareSolution dare = solve_dare(lqr.model());
    o.p_star = dare.p;
    o.k_star = dare.k_star;
    o.dare_residual = dare.residual;
    o.closed_loop_rho = closed_loop_spectral_radius(lqr.model(), dare);
    o.theta_star = lqr.features_map().theta_for_h(optimal_h(lqr.model(), dare));
    if (cfg.assumption_c) o.c = *cfg.assumption_c;
  }
  return o;
}

inline RunOptions make_run_options(const RunConfig& cfg, Algorithm algo, std::uint64_t seed,
                                   const SuiteOracle& oracle) {
  RunOptions opt;
  opt.algo = algo;
  opt.sched = cfg.sched;
  opt.dom = Domain{cfg.domain_radius};
  opt.steps = cfg.steps;
  opt.seed = seed;
  opt.batch_size = cfg.batch_size;
  opt.tau = cfg.tau;
  opt.double_q = cfg.double_q;
  opt.adam_epsilon = cfg.adam_epsilon;
  opt.cadence = cfg.metric_cadence;
  opt.theta0 = oracle.theta0;
  opt.theta_star = oracle.theta_star;
  opt.k_star = oracle.k_star;
  opt.stop_k_err = cfg.stop_k_err;
  return opt;
}

struct SuiteRun {
  std::string run_id;
  Algorithm algo;
  std::uint64_t seed = 0;
  RunTrace trace;
};

struct SuiteResult {
  SuiteOracle oracle;
  std::vector<SuiteRun> runs;
};

inline std::string run_id_of(Algorithm a, std::uint64_t seed) {
  return std::string(algorithm_name(a)) + "_s" + std::to_string(seed);
}

inline SuiteResult run_suite(const RunConfig& cfg) {
  const EnvVariant env = build_env(cfg.env);
  SuiteResult result;
  result.oracle = build_oracle(env, cfg);

  for (Algorithm a : cfg.algorithms) {
    for (std::uint64_t s : cfg.seeds) {
      result.runs.push_back(SuiteRun{run_id_of(a, s), a, s, {}});
    }
  }

  parallel_for(result.runs.size(), [&](std::size_t i) {
    SuiteRun& run = result.runs[i];
    const RunOptions opt = make_run_options(cfg, run.algo, run.seed, result.oracle);
    const auto t0 = std::chrono::steady_clock::now();
    run.trace = std::visit([&](const auto& e) { return run_q_learning(e, opt); }, env);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    log_info("run " + run.run_id + ": " + std::to_string(run.trace.steps_executed) +
             " steps in " + std::to_string(ms) + " ms" +
             (run.trace.stopped_at ? " (stop criterion met)" : "") +
             (run.trace.failure ? " (failed: " + run.trace.failure->reason + ")" : ""));
  });
  return result;
}

inline const char* trace_csv_header() {
  return "t,alpha_t,beta1_t,target_mean,grad_norm,m_norm,vhat_max,loss,theta_norm,"
         "theta_err,thetabar_err,k_err,max_grad_norm,max_m_norm,max_vhat,col_norm_sum,"
         "energy_lhs";
}

inline void write_trace_csv(const std::string& path, const RunTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << trace_csv_header() << "\n";
  for (const TraceRow& r : trace.rows) {
    out << r.t << ',' << fmt_double(r.alpha_t) << ',' << fmt_double(r.beta1_t) << ','
        << fmt_double(r.target_mean) << ',' << fmt_double(r.grad_norm) << ','
        << fmt_double(r.m_norm) << ',' << fmt_double(r.vhat_max) << ',' << fmt_double(r.loss)
        << ',' << fmt_double(r.theta_norm) << ',' << fmt_double(r.theta_err) << ','
        << fmt_double(r.thetabar_err) << ',' << fmt_double(r.k_err) << ','
        << fmt_double(r.max_grad_norm) << ',' << fmt_double(r.max_m_norm) << ','
        << fmt_double(r.max_vhat) << ',' << fmt_double(r.col_norm_sum) << ','
        << fmt_double(r.energy_lhs) << "\n";
  }
}

inline const char* metrics_csv_header() {
  return "run_id,algorithm,seed,t,k_err,theta_err,thetabar_err,grad_norm,loss";
}

inline void write_metrics_csv(const std::string& path, const SuiteResult& res) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << metrics_csv_header() << "\n";
  for (const SuiteRun& run : res.runs) {
    for (const TraceRow& r : run.trace.rows) {
      out << run.run_id << ',' << algorithm_name(run.algo) << ',' << run.seed << ',' << r.t
          << ',' << fmt_double(r.k_err) << ',' << fmt_double(r.theta_err) << ','
          << fmt_double(r.thetabar_err) << ',' << fmt_double(r.grad_norm) << ','
          << fmt_double(r.loss) << "\n";
    }
  }
}

inline void write_runs_manifest(const std::string& path, const SuiteResult& res) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "run_id,algorithm,seed,steps_executed,stopped_at,failed,fail_step,fail_reason,"
         "restart_identity_violations\n";
  for (const SuiteRun& run : res.runs) {
    out << run.run_id << ',' << algorithm_name(run.algo) << ',' << run.seed << ','
        << run.trace.steps_executed << ','
        << (run.trace.stopped_at ? std::to_string(*run.trace.stopped_at) : "") << ','
        << (run.trace.failure ? 1 : 0) << ','
        << (run.trace.failure ? std::to_string(run.trace.failure->step) : "") << ','
        << (run.trace.failure ? run.trace.failure->reason : "") << ','
        << run.trace.restart_identity_violations << "\n";
  }
}

inline json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline void write_run_sidecar(const std::string& path, const RunConfig& cfg,
                              const SuiteRun& run, const SuiteOracle& oracle) {
  json j;
  j["run_id"] = run.run_id;
  j["algorithm"] = algorithm_name(run.algo);
  j["seed"] = run.seed;
  json sched = {{"alpha", cfg.sched.alpha},
                {"beta1", cfg.sched.beta1},
                {"beta1_decay", cfg.sched.beta1_decay},
                {"beta2", cfg.sched.beta2}};
  if (cfg.sched.restart_period) sched["restart_period"] = *cfg.sched.restart_period;
  j["schedule"] = sched;
  j["domain_radius"] = cfg.domain_radius;
  j["tau"] = cfg.tau;
  j["steps"] = cfg.steps;
  j["batch_size"] = cfg.batch_size;
  j["double_q"] = cfg.double_q;
  j["adam_epsilon"] = cfg.adam_epsilon;
  j["env"] = {{"tabular", oracle.tabular},
              {"r_max", oracle.r_max},
              {"gamma", oracle.gamma},
              {"dim", oracle.dim}};
  j["theta0"] = vec_to_json(oracle.theta0);
  if (oracle.theta_star) {
    j["theta_star_norm"] = oracle.theta_star->norm();
    j["theta1_err"] = (oracle.theta0 - *oracle.theta_star).norm();
  }
  if (oracle.c) j["assumption_c"] = *oracle.c;
  j["steps_executed"] = run.trace.steps_executed;
  if (run.trace.stopped_at) j["stopped_at"] = *run.trace.stopped_at;
  j["failed"] = static_cast<bool>(run.trace.failure);
  if (run.trace.failure) {
    j["fail_step"] = run.trace.failure->step;
    j["fail_reason"] = run.trace.failure->reason;
  }
  j["restart_identity_violations"] = run.trace.restart_identity_violations;
  j["restart_snapshot_err2"] = run.trace.restart_snapshot_err2;
  j["grad_col_norms"] = vec_to_json(run.trace.grad_col_norms());
  j["energy_lhs"] = run.trace.energy_lhs;
  j["max_grad_norm"] = run.trace.max_grad_norm;
  j["max_m_norm"] = run.trace.max_m_norm;
  j["max_vhat"] = run.trace.max_vhat;
  j["theta_final"] = vec_to_json(run.trace.theta_final);
  j["theta_bar"] = vec_to_json(run.trace.theta_bar);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

inline void write_suite_summary_json(const std::string& path, const RunConfig& cfg,
                                     const SuiteOracle& oracle) {
  json j;
  j["config"] = config_to_json(cfg);
  json o;
  o["tabular"] = oracle.tabular;
  o["dim"] = oracle.dim;
  o["gamma"] = oracle.gamma;
  o["r_max"] = oracle.r_max;
  if (oracle.theta_star) o["theta_star"] = vec_to_json(*oracle.theta_star);
  if (oracle.c) o["assumption_c"] = *oracle.c;
  if (oracle.k_star) o["k_star"] = detail::matrix_to_json(*oracle.k_star);
  if (oracle.p_star) o["p_star"] = detail::matrix_to_json(*oracle.p_star);
  if (oracle.dare_residual) o["dare_residual"] = *oracle.dare_residual;
  if (oracle.closed_loop_rho) o["closed_loop_spectral_radius"] = *oracle.closed_loop_rho;
  if (oracle.q_star) o["q_star"] = detail::matrix_to_json(*oracle.q_star);
  j["oracle"] = o;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

inline void write_suite(const SuiteResult& res, const RunConfig& cfg,
                        const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  for (const SuiteRun& run : res.runs) {
    write_trace_csv(out_dir + "/trace_" + run.run_id + ".csv", run.trace);
    write_run_sidecar(out_dir + "/run_" + run.run_id + ".json", cfg, run, res.oracle);
  }
  write_metrics_csv(out_dir + "/metrics.csv", res);
  write_runs_manifest(out_dir + "/runs.csv", res);
  write_suite_summary_json(out_dir + "/suite.json", cfg, res.oracle);
}

// ---- aggregation ----

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

struct MetricAccum {
  std::vector<double> k_err, theta_err, thetabar_err, grad_norm, loss;
};

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                   : s / static_cast<double>(v.size());
}

inline double sample_std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace detail

// Mean and sample standard deviation per (algorithm, t) across seeds.
inline void aggregate_metrics(const std::vector<std::string>& inputs,
                              const std::string& out_path) {
  if (inputs.empty()) throw std::invalid_argument("aggregate: need at least one input file");
  std::map<std::pair<std::string, std::int64_t>, detail::MetricAccum> groups;
  const std::string expected = metrics_csv_header();
  for (const std::string& path : inputs) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("aggregate: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("aggregate: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected) {
      throw std::runtime_error("aggregate: schema mismatch in " + path + ": expected columns '" +
                               expected + "', found '" + line + "'");
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = detail::split_csv_line(line);
      if (f.size() != 9) throw std::runtime_error("aggregate: malformed row in " + path);
      auto& acc = groups[{f[1], std::stoll(f[3])}];
      acc.k_err.push_back(std::strtod(f[4].c_str(), nullptr));
      acc.theta_err.push_back(std::strtod(f[5].c_str(), nullptr));
      acc.thetabar_err.push_back(std::strtod(f[6].c_str(), nullptr));
      acc.grad_norm.push_back(std::strtod(f[7].c_str(), nullptr));
      acc.loss.push_back(std::strtod(f[8].c_str(), nullptr));
    }
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("aggregate: cannot open " + out_path + " for writing");
  out << "algorithm,t,n,k_err_mean,k_err_std,theta_err_mean,theta_err_std,"
         "thetabar_err_mean,thetabar_err_std,grad_norm_mean,grad_norm_std,loss_mean,"
         "loss_std\n";
  for (const auto& [key, acc] : groups) {
    out << key.first << ',' << key.second << ',' << acc.k_err.size() << ','
        << fmt_double(detail::mean_of(acc.k_err)) << ','
        << fmt_double(detail::sample_std_of(acc.k_err)) << ','
        << fmt_double(detail::mean_of(acc.theta_err)) << ','
        << fmt_double(detail::sample_std_of(acc.theta_err)) << ','
        << fmt_double(detail::mean_of(acc.thetabar_err)) << ','
        << fmt_double(detail::sample_std_of(acc.thetabar_err)) << ','
        << fmt_double(detail::mean_of(acc.grad_norm)) << ','
        << fmt_double(detail::sample_std_of(acc.grad_norm)) << ','
        << fmt_double(detail::mean_of(acc.loss)) << ','
        << fmt_double(detail::sample_std_of(acc.loss)) << "\n";
  }
}

// ---- bounds report over emitted traces ----

struct TraceRowLite {
  std::int64_t t = 0;
  double thetabar_err = 0.0;
  double max_grad_norm = 0.0;
  double max_m_norm = 0.0;
  double max_vhat = 0.0;
  double col_norm_sum = 0.0;
  double energy_lhs = 0.0;
};

inline std::vector<TraceRowLite> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != trace_csv_header()) {
    throw std::runtime_error("trace schema mismatch in " + path);
  }
  std::vector<TraceRowLite> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 17) throw std::runtime_error("malformed trace row in " + path);
    TraceRowLite r;
    r.t = std::stoll(f[0]);
    r.thetabar_err = std::strtod(f[10].c_str(), nullptr);
    r.max_grad_norm = std::strtod(f[12].c_str(), nullptr);
    r.max_m_norm = std::strtod(f[13].c_str(), nullptr);
    r.max_vhat = std::strtod(f[14].c_str(), nullptr);
    r.col_norm_sum = std::strtod(f[15].c_str(), nullptr);
    r.energy_lhs = std::strtod(f[16].c_str(), nullptr);
    rows.push_back(r);
  }
  return rows;
}

inline const char* bounds_csv_header() {
  return "run_id,t,g_max,g_bound,g_holds,m_max,m_bound,m_holds,vhat_max,vhat_bound,"
         "vhat_holds,energy_lhs,energy_rhs,energy_holds,schedsum_lhs,schedsum_rhs,"
         "schedsum_holds,conv_err2,conv_rhs,conv_holds,restart_rhs,restart_holds";
}

// One row per (run, checkpoint) with lhs/rhs per inequality. Columns that do
// not apply to a run (no oracle constant, wrong algorithm family) are nan with
// an empty holds flag.
inline void write_bounds_report(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> sidecars;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("run_", 0) == 0 && entry.path().extension() == ".json") {
      sidecars.push_back(entry.path().string());
    }
  }
  std::sort(sidecars.begin(), sidecars.end());
  if (sidecars.empty()) {
    throw std::runtime_error("bounds: no run sidecars found in " + dir);
  }

  std::ofstream out(dir + "/bounds_report.csv", std::ios::binary);
  if (!out) throw std::runtime_error("bounds: cannot open output file");
  out << bounds_csv_header() << "\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (const std::string& path : sidecars) {
    std::ifstream in(path);
    json j;
    in >> j;
    const std::string run_id = j.at("run_id").get<std::string>();
    const std::string algo_name = j.at("algorithm").get<std::string>();
    const Algorithm algo = *algorithm_from_name(algo_name);
    Schedule sched;
    sched.alpha = j.at("schedule").at("alpha").get<double>();
    sched.beta1 = j.at("schedule").at("beta1").get<double>();
    sched.beta1_decay = j.at("schedule").at("beta1_decay").get<double>();
    sched.beta2 = j.at("schedule").at("beta2").get<double>();
    if (j.at("schedule").contains("restart_period")) {
      sched.restart_period = j.at("schedule").at("restart_period").get<std::int64_t>();
    }
    const double tau = j.at("tau").get<double>();
    const double radius = j.at("domain_radius").get<double>();
    const bool tabular = j.at("env").at("tabular").get<bool>();
    const double r_max = tabular ? j.at("env").at("r_max").get<double>() : nan;
    const double gamma = j.at("env").at("gamma").get<double>();
    const Eigen::Index dim = j.at("env").at("dim").get<Eigen::Index>();
    const std::optional<double> c =
        j.contains("assumption_c") ? std::optional<double>(j.at("assumption_c").get<double>())
                                   : std::nullopt;
    const std::optional<double> theta1_err =
        j.contains("theta1_err") ? std::optional<double>(j.at("theta1_err").get<double>())
                                 : std::nullopt;
    std::vector<double> snapshots;
    if (j.contains("restart_snapshot_err2")) {
      snapshots = j.at("restart_snapshot_err2").get<std::vector<double>>();
    }

    const double d_inf = 2.0 * radius;
    const double g_bound =
        tabular ? tau * tau * gradient_sup_bound(r_max, gamma, d_inf) : nan;
    const bool moments = uses_moments(algo);
    const bool amsgrad_family = algo == Algorithm::amsgrad || algo == Algorithm::amsgrad_r;

    const auto rows = read_trace_csv(dir + "/trace_" + run_id + ".csv");

    // The schedule sum extends incrementally across checkpoints.
    double schedsum = 0.0;
    std::int64_t sched_t = 0;
    double pow_l = 1.0;
    const double schedsum_bound =
        sched.beta1 / (sched.alpha * (1.0 - sched.beta1_decay) * (1.0 - sched.beta1_decay));

    for (const TraceRowLite& r : rows) {
      while (sched_t < r.t) {
        ++sched_t;
        pow_l *= sched.beta1_decay;
        schedsum +=
            sched.beta1 * pow_l * std::sqrt(static_cast<double>(sched_t)) / sched.alpha;
      }
      out << run_id << ',' << r.t << ',';
      // gradient / moment sup bounds
      if (tabular) {
        out << fmt_double(r.max_grad_norm) << ',' << fmt_double(g_bound) << ','
            << (r.max_grad_norm <= g_bound * (1 + 1e-12) ? 1 : 0) << ',';
        if (moments) {
          out << fmt_double(r.max_m_norm) << ',' << fmt_double(g_bound) << ','
              << (r.max_m_norm <= g_bound * (1 + 1e-12) ? 1 : 0) << ','
              << fmt_double(r.max_vhat) << ',' << fmt_double(g_bound * g_bound) << ','
              << (r.max_vhat <= g_bound * g_bound * (1 + 1e-12) ? 1 : 0) << ',';
        } else {
          out << "nan,nan,,nan,nan,,";
        }
      } else {
        out << fmt_double(r.max_grad_norm) << ",nan,,nan,nan,,nan,nan,,";
      }
      // step-energy inequality (max-tracking family)
      if (amsgrad_family) {
        const InequalityCheck en = step_energy_check(r.energy_lhs, r.col_norm_sum, sched, r.t);
        out << fmt_double(en.lhs) << ',' << fmt_double(en.rhs) << ',' << (en.holds ? 1 : 0)
            << ',';
      } else {
        out << "nan,nan,,";
      }
      // schedule sum vs closed form
      out << fmt_double(schedsum) << ',' << fmt_double(schedsum_bound) << ','
          << (schedsum <= schedsum_bound * (1 + 1e-12) ? 1 : 0) << ',';
      // convergence bounds need c, theta*, and at least 2 steps
      if (c && *c > 0.0 && theta1_err && tabular && r.t >= 2 && algo == Algorithm::amsgrad) {
        BoundInputs in;
        in.g_inf = g_bound;
        in.d_inf = d_inf;
        in.alpha = sched.alpha;
        in.beta1 = sched.beta1;
        in.beta1_decay = sched.beta1_decay;
        in.beta2 = sched.beta2;
        in.c = *c;
        in.dim = dim;
        in.steps = r.t;
        in.theta1_err = *theta1_err;
        in.grad_col_norm_sum = r.col_norm_sum;
        const double rhs = amsgrad_error_bound(in).total;
        const double lhs = r.thetabar_err * r.thetabar_err;
        out << fmt_double(lhs) << ',' << fmt_double(rhs) << ','
            << (lhs <= rhs * (1 + 1e-12) ? 1 : 0) << ',';
      } else {
        out << "nan,nan,,";
      }
      if (c && *c > 0.0 && theta1_err && tabular && algo == Algorithm::amsgrad_r &&
          sched.restart_period &&
          snapshots.size() >= static_cast<std::size_t>(r.t / *sched.restart_period) + 1) {
        BoundInputs in;
        in.g_inf = g_bound;
        in.d_inf = d_inf;
        in.alpha = sched.alpha;
        in.beta1 = sched.beta1;
        in.beta1_decay = sched.beta1_decay;
        in.beta2 = sched.beta2;
        in.c = *c;
        in.dim = dim;
        in.steps = r.t;
        in.restart_period = sched.restart_period;
        in.theta1_err = *theta1_err;
        in.grad_col_norm_sum = r.col_norm_sum;
        const double rhs = restart_error_bound(in, snapshots);
        const double lhs = r.thetabar_err * r.thetabar_err;
        out << fmt_double(rhs) << ',' << (lhs <= rhs * (1 + 1e-12) ? 1 : 0) << "\n";
      } else {
        out << "nan,\n";
      }
    }
  }
}

}  // namespace altq
