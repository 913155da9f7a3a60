#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "altq/common.hpp"
#include "altq/optim.hpp"
#include "altq/qlinear.hpp"

namespace altq {

// Uniform gradient bound G = r_max + (1 + gamma) * d_inf for feature maps with
// ||phi|| <= 1 and parameters confined to a ball of diameter d_inf.
inline double gradient_sup_bound(double r_max, double gamma, double d_inf) {
  if (r_max < 0.0 || d_inf < 0.0 || !(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("gradient_sup_bound: invalid inputs");
  }
  return r_max + (1.0 + gamma) * d_inf;
}

// Everything the closed-form error bounds need about a run.
struct BoundInputs {
  double g_inf = 0.0;
  double d_inf = 0.0;
  double alpha = 0.0;
  double beta1 = 0.0;
  double beta1_decay = 0.0;  // lambda
  double beta2 = 0.0;
  double c = 0.0;            // monotonicity constant of the expected gradient
  Eigen::Index dim = 0;
  std::int64_t steps = 0;
  std::optional<std::int64_t> restart_period;
  double theta1_err = 0.0;       // ||theta_1 - theta*||
  double grad_col_norm_sum = 0.0;  // sum_i ||g_{1:T,i}||

  double moment_ratio() const { return beta1 / beta2; }

  void validate_for_bounds() const {
    std::vector<std::string> problems;
    if (!(c > 0.0)) {
      problems.push_back("monotonicity constant c must be > 0 (assumption failure)");
    }
    if (!(alpha > 0.0)) problems.push_back("alpha must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) problems.push_back("beta1 must be in [0,1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) problems.push_back("beta2 must be in (0,1)");
    if (!(moment_ratio() < 1.0)) problems.push_back("beta1/beta2 must be < 1");
    if (!(beta1_decay > 0.0 && beta1_decay < 1.0)) {
      problems.push_back("beta1_decay must be in (0,1)");
    }
    if (dim < 1) problems.push_back("dimension must be >= 1");
    if (!problems.empty()) throw ConfigError(std::move(problems));
  }
};

struct ConvergenceBound {
  double b1 = 0.0;
  double b2 = 0.0;
  double b3 = 0.0;
  double total = 0.0;
};

// Closed-form bound on E||theta_bar - theta*||^2 for the projected
// max-tracking algorithm:
//   B1/T + B2/sqrt(T) + B3 sqrt(1 + log T)/T * sum_i ||g_{1:T,i}||
inline ConvergenceBound amsgrad_error_bound(const BoundInputs& in) {
  in.validate_for_bounds();
  if (in.steps < 2) throw std::invalid_argument("amsgrad_error_bound: needs T >= 2");
  const double g = in.g_inf;
  const double d2 = in.d_inf * in.d_inf;
  const double one_m_b1 = 1.0 - in.beta1;
  const double one_m_delta = 1.0 - in.moment_ratio();
  const double one_m_lambda = 1.0 - in.beta1_decay;
  const double alpha2 = in.alpha / std::sqrt(2.0);
  const double t = static_cast<double>(in.steps);

  ConvergenceBound out;
  out.b1 = g * d2 / (2.0 * alpha2 * in.c * one_m_b1) +
           in.beta1 * g * d2 / (2.0 * in.alpha * in.c * one_m_b1 * one_m_lambda * one_m_lambda) +
           in.theta1_err * in.theta1_err;
  out.b2 = static_cast<double>(in.dim) * g * d2 / (2.0 * in.alpha * in.c * one_m_b1);
  out.b3 = in.alpha * (1.0 + in.beta1) /
           (2.0 * in.c * one_m_b1 * one_m_b1 * one_m_delta * std::sqrt(1.0 - in.beta2));
  out.total = out.b1 / t + out.b2 / std::sqrt(t) +
              out.b3 * std::sqrt(1.0 + std::log(t)) / t * in.grad_col_norm_sum;
  return out;
}

// Restart-variant bound. snapshot_err2[k] = ||theta_{kr} - theta*||^2 for
// k = 0..floor(T/r), with theta_0 := theta_1.
inline double restart_error_bound(const BoundInputs& in,
                                  const std::vector<double>& snapshot_err2) {
  in.validate_for_bounds();
  if (!in.restart_period || *in.restart_period < 1) {
    throw std::invalid_argument("restart_error_bound: restart period required");
  }
  if (in.steps < 1) throw std::invalid_argument("restart_error_bound: needs T >= 1");
  const double t = static_cast<double>(in.steps);
  const double r = static_cast<double>(*in.restart_period);
  const std::int64_t k_max = in.steps / *in.restart_period;
  if (snapshot_err2.size() < static_cast<std::size_t>(k_max) + 1) {
    throw ShapeError("restart_error_bound: missing restart snapshots");
  }

  const double g = in.g_inf;
  const double d2 = in.d_inf * in.d_inf;
  const double one_m_b1 = 1.0 - in.beta1;
  const double one_m_delta = 1.0 - in.moment_ratio();
  const double one_m_lambda = 1.0 - in.beta1_decay;

  const double b1 =
      in.beta1 * d2 * g / (2.0 * in.alpha * in.c * one_m_b1 * one_m_lambda * one_m_lambda);
  const double b2 = in.alpha * (1.0 + in.beta1) /
                    (2.0 * in.c * one_m_b1 * one_m_b1 * one_m_delta * std::sqrt(1.0 - in.beta2));
  const double b3 = static_cast<double>(in.dim) * g * d2 / (2.0 * in.alpha * in.c * one_m_b1);
  const double b4 = 4.0 * in.c * one_m_b1;

  double restart_sqrt_sum = 0.0;
  for (std::int64_t k = 1; k <= k_max; ++k) {
    restart_sqrt_sum += std::sqrt(static_cast<double>(k) * r - 1.0);
  }
  double snapshot_sum = 0.0;
  for (std::int64_t k = 0; k <= k_max; ++k) {
    snapshot_sum += g * d2 / in.alpha * std::sqrt(static_cast<double>(k) * r + 2.0) +
                    b4 * snapshot_err2[static_cast<std::size_t>(k)];
  }

  return b1 / t + b2 * std::sqrt(1.0 + std::log(t)) / t * in.grad_col_norm_sum +
         b3 / t * (std::sqrt(t) + restart_sqrt_sum) + snapshot_sum / t;
}

struct InequalityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

// Weighted step-energy inequality:
//   sum_t alpha_t ||Vhat_t^{-1/4} m_t||^2
//     <= alpha sqrt(1 + log T) / ((1-beta1)(1-delta) sqrt(1-beta2)) * sum_i ||g_{1:T,i}||
inline InequalityCheck step_energy_check(double lhs, double grad_col_norm_sum,
                                         const Schedule& sched, std::int64_t steps) {
  sched.validate();
  if (steps < 1) throw std::invalid_argument("step_energy_check: needs T >= 1");
  const double delta = sched.moment_ratio();
  const double coef = sched.alpha * std::sqrt(1.0 + std::log(static_cast<double>(steps))) /
                      ((1.0 - sched.beta1) * (1.0 - delta) * std::sqrt(1.0 - sched.beta2));
  InequalityCheck out;
  out.lhs = lhs;
  out.rhs = coef * grad_col_norm_sum;
  out.holds = out.lhs <= out.rhs * (1.0 + 1e-12) + 1e-300;
  return out;
}

inline InequalityCheck step_energy_check(const RunTrace& trace, const Schedule& sched) {
  return step_energy_check(trace.energy_lhs, trace.grad_col_norms().sum(), sched,
                           trace.steps_executed);
}

// Decayed-momentum schedule sum against its closed form:
//   sum_{t=1}^T beta1_t / alpha_t <= beta1 / (alpha (1-lambda)^2)
inline InequalityCheck schedule_sum_check(const Schedule& sched, std::int64_t steps) {
  sched.validate();
  if (steps < 0) throw std::invalid_argument("schedule_sum_check: needs T >= 0");
  double sum = 0.0;
  double pow_l = 1.0;
  for (std::int64_t t = 1; t <= steps; ++t) {
    pow_l *= sched.beta1_decay;
    sum += sched.beta1 * pow_l * std::sqrt(static_cast<double>(t)) / sched.alpha;
  }
  InequalityCheck out;
  out.lhs = sum;
  out.rhs = sched.beta1 /
            (sched.alpha * (1.0 - sched.beta1_decay) * (1.0 - sched.beta1_decay));
  out.holds = out.lhs <= out.rhs * (1.0 + 1e-12);
  return out;
}

// Per-trace moment bounds: ||g_t|| <= G, ||m_t|| <= G (both l2) and
// max_i vhat_{t,i} <= G^2 (the max bound is a per-coordinate statement).
struct MomentBoundReport {
  double g_bound = 0.0;
  double max_grad_norm = 0.0;
  double max_m_norm = 0.0;
  double max_vhat = 0.0;
  bool g_holds = false;
  bool m_holds = false;
  bool vhat_holds = false;
  bool all() const { return g_holds && m_holds && vhat_holds; }
};

inline MomentBoundReport moment_bound_check(const RunTrace& trace, double g_bound,
                                            double rel_tol = 1e-12) {
  MomentBoundReport rep;
  rep.g_bound = g_bound;
  rep.max_grad_norm = trace.max_grad_norm;
  rep.max_m_norm = trace.max_m_norm;
  rep.max_vhat = trace.max_vhat;
  const double tol_g = g_bound * (1.0 + rel_tol);
  rep.g_holds = trace.max_grad_norm <= tol_g;
  rep.m_holds = trace.max_m_norm <= tol_g;
  rep.vhat_holds = trace.max_vhat <= g_bound * g_bound * (1.0 + rel_tol);
  return rep;
}

}  // namespace altq
