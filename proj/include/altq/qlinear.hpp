#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "altq/common.hpp"
#include "altq/optim.hpp"

namespace altq {

enum class Algorithm { sgd, adam, adam_r, amsgrad, amsgrad_r };

inline bool uses_restart(Algorithm a) {
  return a == Algorithm::adam_r || a == Algorithm::amsgrad_r;
}
inline bool uses_moments(Algorithm a) { return a != Algorithm::sgd; }
inline bool is_adam_family(Algorithm a) {
  return a == Algorithm::adam || a == Algorithm::adam_r;
}

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::sgd: return "sgd";
    case Algorithm::adam: return "adam";
    case Algorithm::adam_r: return "adam_r";
    case Algorithm::amsgrad: return "amsgrad";
    case Algorithm::amsgrad_r: return "amsgrad_r";
  }
  return "unknown";
}

inline std::optional<Algorithm> algorithm_from_name(const std::string& s) {
  if (s == "sgd") return Algorithm::sgd;
  if (s == "adam") return Algorithm::adam;
  if (s == "adam_r") return Algorithm::adam_r;
  if (s == "amsgrad") return Algorithm::amsgrad;
  if (s == "amsgrad_r") return Algorithm::amsgrad_r;
  return std::nullopt;
}

// Q(s,a) = phi(s,a)' theta for whatever feature map the environment provides.
template <class Env>
struct LinearQ {
  const Env* env;
  Vec theta;

  double value(const typename Env::Experience& e) const {
    return env->features(e).dot(theta);
  }
};

inline double td_target_value(double reward, double gamma, double best_next) {
  require_finite(reward, "td_target reward");
  return reward + gamma * best_next;
}

// b = r + gamma * ext_{a'} Q(s', a'; theta); the environment supplies the
// extremum in its own mode (max for rewards, min for costs).
template <class Env>
double td_target(const Env& env, const typename Env::Experience& e, const Vec& theta) {
  return td_target_value(e.reward, env.gamma(), env.best_next_value(theta, e));
}

// g = scale * (phi' theta - b) * phi, scale = tau^2.
inline Vec td_gradient(const Vec& phi, const Vec& theta, double target, double scale) {
  require_same_size(phi, theta, "td_gradient");
  require_finite(target, "td_gradient target");
  return scale * (phi.dot(theta) - target) * phi;
}

// Target for the two-estimator update: the updated estimator selects the
// greedy action, the other one evaluates it.
template <class Env>
double double_q_target(const Env& env, const typename Env::Experience& e,
                       const Vec& theta_update, const Vec& theta_other) {
  return td_target_value(e.reward, env.gamma(),
                         env.cross_next_value(theta_update, theta_other, e));
}

struct RunOptions {
  Algorithm algo = Algorithm::amsgrad;
  Schedule sched;
  Domain dom;
  std::int64_t steps = 1000;
  std::uint64_t seed = 1;
  int batch_size = 1;
  double tau = 1.0;  // loss scale; the gradient carries tau^2
  bool double_q = false;
  double adam_epsilon = 1e-8;
  std::int64_t cadence = 1;
  std::optional<Vec> theta0;
  std::optional<Vec> theta_star;
  std::optional<Mat> k_star;
  std::optional<double> stop_k_err;
  bool record_theta = false;
  double divergence_factor = 1e3;

  void validate() const {
    sched.validate();
    if (steps < 1) throw std::invalid_argument("run: steps must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("run: batch_size must be >= 1");
    if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("run: tau must be in (0,1]");
    if (cadence < 1) throw std::invalid_argument("run: cadence must be >= 1");
    if (!(dom.radius > 0.0)) throw std::invalid_argument("run: domain radius must be > 0");
    if (uses_restart(algo) && !sched.restart_period) {
      throw std::invalid_argument("run: restart variants need a restart_period");
    }
  }
};

struct TraceRow {
  std::int64_t t = 0;
  double alpha_t = 0.0;
  double beta1_t = 0.0;
  double target_mean = 0.0;
  double grad_norm = 0.0;
  double m_norm = 0.0;    // l2; nan for sgd
  double vhat_max = 0.0;  // linf; nan for sgd
  double loss = 0.0;      // batch mean of the squared scaled residual
  double theta_norm = 0.0;
  double theta_err = 0.0;     // ||theta_t - theta*||, nan when unknown
  double thetabar_err = 0.0;  // ||mean(theta_1..t) - theta*||, nan when unknown
  double k_err = 0.0;         // ||K_t - K*||_2, nan when unavailable
  double max_grad_norm = 0.0;
  double max_m_norm = 0.0;
  double max_vhat = 0.0;
  double col_norm_sum = 0.0;  // sum_i ||g_{1:t,i}||
  double energy_lhs = 0.0;    // sum_t alpha_t ||Vhat^{-1/4} m||^2 up to t
  std::optional<Vec> theta;   // theta_t when recording is on
};

struct RunFailure {
  std::int64_t step = 0;
  std::string reason;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  std::int64_t steps_executed = 0;
  Vec grad_col_sq;      // per-coordinate sum of squared gradient entries
  double energy_lhs = 0.0;
  double max_grad_norm = 0.0;
  double max_m_norm = 0.0;
  double max_vhat = 0.0;
  std::vector<double> restart_snapshot_err2;       // k = 0 .. floor(T/r)
  std::vector<std::pair<Vec, Vec>> restart_pairs;  // (theta_{kr}, theta_{kr+1})
  std::int64_t restart_identity_violations = 0;
  Vec theta_final;
  Vec theta_bar;
  std::optional<std::int64_t> stopped_at;
  std::optional<RunFailure> failure;

  Vec grad_col_norms() const { return grad_col_sq.cwiseSqrt(); }
};

namespace detail {

template <class Env>
double policy_error(const Env& env, const Vec& theta, const std::optional<Mat>& k_star) {
  if constexpr (requires(const Env& e, const Vec& v) { e.policy_gain(v); }) {
    if (k_star) {
      try {
        return (env.policy_gain(theta) - *k_star).norm();
      } catch (const DefinitenessError&) {
        return std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

// The alternating loop: sample a batch, form the empirical target, take one
// scaled gradient step on the parameters, projecting where the algorithm
// calls for it. Restart variants zero both moments every r steps; the
// parameter step at those iterations is exactly zero, so theta repeats.
template <class Env>
RunTrace run_q_learning(const Env& env, const RunOptions& opt) {
  opt.validate();
  const Eigen::Index d = env.dim();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double scale = opt.tau * opt.tau;

  std::mt19937_64 rng(opt.seed);
  auto sampler = env.sampler();

  Vec theta_a = opt.theta0 ? *opt.theta0 : Vec(Vec::Zero(d));
  if (theta_a.size() != d) throw ShapeError("run: theta0 size mismatch");
  Vec theta_b = theta_a;
  MomentState state_a = MomentState::zero(d);
  MomentState state_b = MomentState::zero(d);

  RunTrace trace;
  trace.grad_col_sq = Vec::Zero(d);
  trace.rows.reserve(static_cast<std::size_t>(opt.steps / opt.cadence + 3));
  if (uses_restart(opt.algo)) {
    // k = 0 snapshot, with theta_0 := theta_1.
    trace.restart_snapshot_err2.push_back(
        opt.theta_star ? (theta_a - *opt.theta_star).squaredNorm() : nan);
  }

  Vec bar_sum = Vec::Zero(d);
  std::bernoulli_distribution coin(0.5);
  std::vector<typename Env::Experience> batch;
  batch.reserve(static_cast<std::size_t>(opt.batch_size));

  for (std::int64_t t = 1; t <= opt.steps; ++t) {
    const StepParams params = schedule_at(opt.sched, t);
    const bool update_a = opt.double_q ? coin(rng) : true;
    Vec& theta_upd = update_a ? theta_a : theta_b;
    const Vec& theta_other = update_a ? theta_b : theta_a;
    MomentState& state_upd = update_a ? state_a : state_b;

    Vec g = Vec::Zero(d);
    double target_sum = 0.0;
    double loss_sum = 0.0;
    try {
      batch.clear();
      for (int i = 0; i < opt.batch_size; ++i) {
        batch.push_back(sampler.draw(rng, theta_a));
      }
      for (const auto& e : batch) {
        const double b = opt.double_q ? double_q_target(env, e, theta_upd, theta_other)
                                      : td_target(env, e, theta_upd);
        const Vec phi = env.features(e);
        const double resid = scale * (phi.dot(theta_upd) - b);
        g += resid * phi;
        target_sum += b;
        loss_sum += resid * resid;
      }
      g /= static_cast<double>(opt.batch_size);
      require_finite(g, "run gradient");
    } catch (const std::exception& ex) {
      trace.failure = RunFailure{t, ex.what()};
      break;
    }

    const Vec theta_pre = theta_a;

    const bool restart_due =
        uses_restart(opt.algo) && opt.sched.restart_period && t % *opt.sched.restart_period == 0;

    double m_norm = nan;
    double vhat_max = nan;
    try {
      if (restart_due) {
        state_a = restart_if_due(state_a, t, opt.sched);
        state_b = restart_if_due(state_b, t, opt.sched);
        state_a.step = t;
        state_b.step = t;
        // Zero moments, zero step: theta_{t+1} = theta_t exactly.
        m_norm = 0.0;
        vhat_max = 0.0;
        trace.restart_snapshot_err2.push_back(
            opt.theta_star ? (theta_a - *opt.theta_star).squaredNorm() : nan);
      } else {
        state_upd.step = t - 1;  // both estimators follow the global clock
        switch (opt.algo) {
          case Algorithm::sgd: {
            theta_upd = sgd_step(theta_upd, g, params.alpha_t, opt.dom);
            break;
          }
          case Algorithm::adam:
          case Algorithm::adam_r: {
            StepResult r = adam_step(state_upd, theta_upd, g, opt.sched, opt.adam_epsilon);
            theta_upd = std::move(r.theta);
            state_upd = std::move(r.state);
            break;
          }
          case Algorithm::amsgrad:
          case Algorithm::amsgrad_r: {
            StepResult r = amsgrad_step(state_upd, theta_upd, g, opt.sched, opt.dom);
            theta_upd = std::move(r.theta);
            state_upd = std::move(r.state);
            break;
          }
        }
        if (uses_moments(opt.algo)) {
          m_norm = state_upd.m.norm();
          vhat_max = state_upd.v_hat.maxCoeff();
          double energy = 0.0;
          for (Eigen::Index i = 0; i < d; ++i) {
            if (state_upd.v_hat[i] > 0.0) {
              energy += state_upd.m[i] * state_upd.m[i] / std::sqrt(state_upd.v_hat[i]);
            }
          }
          trace.energy_lhs += params.alpha_t * energy;
        }
      }
    } catch (const std::exception& ex) {
      trace.failure = RunFailure{t, ex.what()};
      break;
    }

    if (restart_due) {
      trace.restart_pairs.emplace_back(theta_pre, theta_a);
      if ((theta_a.array() != theta_pre.array()).any()) {
        ++trace.restart_identity_violations;
      }
    }

    bar_sum += theta_pre;
    trace.steps_executed = t;
    trace.grad_col_sq += g.cwiseProduct(g);
    const double gn = g.norm();
    trace.max_grad_norm = std::max(trace.max_grad_norm, gn);
    if (!std::isnan(m_norm)) trace.max_m_norm = std::max(trace.max_m_norm, m_norm);
    if (!std::isnan(vhat_max)) trace.max_vhat = std::max(trace.max_vhat, vhat_max);

    const Vec& theta_metric = theta_pre;
    if (!theta_a.allFinite() ||
        theta_a.norm() > opt.divergence_factor * opt.dom.radius) {
      trace.failure = RunFailure{t, "divergence guard: parameter left the trust region"};
      break;
    }

    const bool record = (t % opt.cadence == 0) || t == opt.steps || t == 1;
    if (record) {
      TraceRow row;
      row.t = t;
      row.alpha_t = params.alpha_t;
      row.beta1_t = params.beta1_t;
      row.target_mean = target_sum / static_cast<double>(opt.batch_size);
      row.grad_norm = gn;
      row.m_norm = m_norm;
      row.vhat_max = vhat_max;
      row.loss = loss_sum / static_cast<double>(opt.batch_size);
      row.theta_norm = theta_metric.norm();
      row.theta_err = opt.theta_star ? (theta_metric - *opt.theta_star).norm() : nan;
      row.thetabar_err =
          opt.theta_star ? (bar_sum / static_cast<double>(t) - *opt.theta_star).norm() : nan;
      row.k_err = detail::policy_error(env, theta_metric, opt.k_star);
      row.max_grad_norm = trace.max_grad_norm;
      row.max_m_norm = trace.max_m_norm;
      row.max_vhat = trace.max_vhat;
      row.col_norm_sum = trace.grad_col_sq.cwiseSqrt().sum();
      row.energy_lhs = trace.energy_lhs;
      if (opt.record_theta) row.theta = theta_metric;
      trace.rows.push_back(std::move(row));

      if (opt.stop_k_err && std::isfinite(trace.rows.back().k_err) &&
          trace.rows.back().k_err <= *opt.stop_k_err) {
        trace.stopped_at = t;
        break;
      }
    }
  }

  trace.theta_final = theta_a;
  trace.theta_bar = trace.steps_executed > 0
                        ? Vec(bar_sum / static_cast<double>(trace.steps_executed))
                        : theta_a;
  return trace;
}

}  // namespace altq
