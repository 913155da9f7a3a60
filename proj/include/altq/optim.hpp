#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>

#include "altq/common.hpp"

namespace altq {

// Step-size and momentum schedule. At step t >= 1:
//   alpha_t = alpha / sqrt(t)
//   beta1_t = beta1 * beta1_decay^t
// Both sequences are strictly decreasing. restart_period enables periodic
// moment resets for the *_r algorithm variants.
struct Schedule {
  double alpha = 0.1;
  double beta1 = 0.9;
  double beta1_decay = 0.99;
  double beta2 = 0.999;
  std::optional<std::int64_t> restart_period;

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("schedule: alpha must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0))
      throw std::invalid_argument("schedule: beta1 must be in [0,1)");
    if (!(beta2 > 0.0 && beta2 < 1.0))
      throw std::invalid_argument("schedule: beta2 must be in (0,1)");
    if (!(beta1 < beta2))
      throw std::invalid_argument("schedule: beta1/beta2 must be < 1");
    if (!(beta1_decay > 0.0 && beta1_decay < 1.0))
      throw std::invalid_argument("schedule: beta1_decay must be in (0,1)");
    if (restart_period && *restart_period < 1)
      throw std::invalid_argument("schedule: restart_period must be >= 1");
  }

  double moment_ratio() const { return beta1 / beta2; }
};

struct StepParams {
  double alpha_t;
  double beta1_t;
};

inline StepParams schedule_at(const Schedule& s, std::int64_t t) {
  if (t < 1) throw std::invalid_argument("schedule_at: step index must be >= 1");
  const double td = static_cast<double>(t);
  return {s.alpha / std::sqrt(td), s.beta1 * std::pow(s.beta1_decay, td)};
}

// Feasible parameter region: a ball of the given radius centered at the origin.
struct Domain {
  double radius = 1.0;

  bool contains(const Vec& v, double tol = 0.0) const { return v.norm() <= radius + tol; }
};

// First/second moment accumulators. For the max-tracking update v_hat holds the
// running elementwise maximum; for the plain adaptive update it holds the
// running second-moment average.
struct MomentState {
  Vec m;
  Vec v_hat;
  std::int64_t step = 0;

  static MomentState zero(Eigen::Index d) {
    MomentState s;
    s.m = Vec::Zero(d);
    s.v_hat = Vec::Zero(d);
    s.step = 0;
    return s;
  }

  void reset_moments() {
    m.setZero();
    v_hat.setZero();
  }
};

struct StepResult {
  Vec theta;
  MomentState state;
};

// Euclidean projection onto the ball.
inline Vec project_ball(const Vec& x, const Domain& dom) {
  const double n = x.norm();
  if (n <= dom.radius) return x;
  return x * (dom.radius / n);
}

// Projection of theta_raw onto the ball under the norm weighted by v_hat^{1/4}:
// minimize sum_i sqrt(v_i) (theta_raw_i - theta_i)^2 subject to ||theta|| <= radius.
// Stationarity gives theta_i = sqrt(v_i) theta_raw_i / (sqrt(v_i) + mu) with a
// scalar multiplier mu >= 0; mu is found by bisection on ||theta(mu)|| = radius.
// Coordinates with v_i = 0 carry no weight and go to 0 whenever the constraint
// is active.
inline Vec project_weighted_ball(const Vec& theta_raw, const Vec& v_hat, const Domain& dom) {
  require_same_size(theta_raw, v_hat, "project_weighted_ball");
  require_finite(theta_raw, "project_weighted_ball");
  if (theta_raw.norm() <= dom.radius) return theta_raw;

  const Eigen::Index d = theta_raw.size();
  Vec w(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    w[i] = v_hat[i] > 0.0 ? std::sqrt(v_hat[i]) : 0.0;
  }

  auto candidate = [&](double mu) {
    Vec th = Vec::Zero(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (w[i] > 0.0) th[i] = w[i] * theta_raw[i] / (w[i] + mu);
    }
    return th;
  };

  const double r = dom.radius;
  const double tol = 1e-12 * r;

  if (candidate(0.0).norm() <= r) {
    // Weighted coordinates already fit once the zero-weight ones are dropped.
    return candidate(0.0);
  }

  double lo = 0.0;
  double hi = 1.0;
  int expand = 0;
  while (candidate(hi).norm() > r) {
    hi *= 2.0;
    if (++expand > 200) {
      throw ConvergenceError("project_weighted_ball: failed to bracket the multiplier");
    }
  }

  Vec th;
  bool ok = false;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    th = candidate(mid);
    const double n = th.norm();
    if (std::abs(n - r) <= tol) {
      ok = true;
      break;
    }
    (n > r ? lo : hi) = mid;
  }
  if (!ok) {
    throw ConvergenceError("project_weighted_ball: bisection did not reach tolerance");
  }
  return th;
}

// One max-tracking adaptive-moment update with weighted-ball projection:
//   m     <- (1 - beta1_t) m + beta1_t g
//   v     <- (1 - beta2) v_hat + beta2 g^2
//   v_hat <- max(v_hat, v)
//   theta <- project(theta - alpha_t m / sqrt(v_hat))
// Coordinates with v_hat_i = 0 take a zero step (m_i = 0 there as well).
inline StepResult amsgrad_step(const MomentState& st, const Vec& theta, const Vec& g,
                               const Schedule& sched, const Domain& dom) {
  require_same_size(theta, g, "amsgrad_step");
  require_same_size(theta, st.m, "amsgrad_step state");
  require_finite(g, "amsgrad_step gradient");

  MomentState next = st;
  next.step = st.step + 1;
  const StepParams p = schedule_at(sched, next.step);

  next.m = (1.0 - p.beta1_t) * st.m + p.beta1_t * g;
  const Vec v = (1.0 - sched.beta2) * st.v_hat + sched.beta2 * g.cwiseProduct(g);
  next.v_hat = st.v_hat.cwiseMax(v);

  Vec raw = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (next.v_hat[i] > 0.0) raw[i] -= p.alpha_t * next.m[i] / std::sqrt(next.v_hat[i]);
  }
  return {project_weighted_ball(raw, next.v_hat, dom), std::move(next)};
}

// Plain adaptive-moment variant: the second moment is the running average v
// (no max), the denominator is sqrt(v + epsilon), and no projection is applied.
inline StepResult adam_step(const MomentState& st, const Vec& theta, const Vec& g,
                            const Schedule& sched, double epsilon = 1e-8) {
  require_same_size(theta, g, "adam_step");
  require_same_size(theta, st.m, "adam_step state");
  require_finite(g, "adam_step gradient");
  if (epsilon < 0.0) throw std::invalid_argument("adam_step: epsilon must be >= 0");

  MomentState next = st;
  next.step = st.step + 1;
  const StepParams p = schedule_at(sched, next.step);

  next.m = (1.0 - p.beta1_t) * st.m + p.beta1_t * g;
  next.v_hat = (1.0 - sched.beta2) * st.v_hat + sched.beta2 * g.cwiseProduct(g);

  Vec theta_next = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double denom = std::sqrt(next.v_hat[i] + epsilon);
    if (denom > 0.0) theta_next[i] -= p.alpha_t * next.m[i] / denom;
  }
  return {std::move(theta_next), std::move(next)};
}

// Projected gradient step under the plain Euclidean norm.
inline Vec sgd_step(const Vec& theta, const Vec& g, double alpha_t, const Domain& dom) {
  require_same_size(theta, g, "sgd_step");
  require_finite(theta, "sgd_step theta");
  require_finite(g, "sgd_step gradient");
  require_finite(alpha_t, "sgd_step alpha_t");
  return project_ball(theta - alpha_t * g, dom);
}

// Zero both moments when t is a multiple of the restart period. The parameter
// update performed with the zeroed moments is exactly zero, so the iterate
// repeats at restart steps.
inline MomentState restart_if_due(const MomentState& st, std::int64_t t, const Schedule& sched) {
  if (!sched.restart_period) return st;
  if (t >= 1 && t % *sched.restart_period == 0) {
    MomentState next = st;
    next.reset_moments();
    return next;
  }
  return st;
}

}  // namespace altq
