#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>

#include "altq/lqr.hpp"
#include "altq/optim.hpp"
#include "altq/tabular.hpp"

namespace altq {

struct DareSolution {
  Mat p;
  Mat k_star;
  double residual = 0.0;
  int iterations = 0;
};

// Fixed-point iteration of the Riccati map from P0 = Qc:
//   P <- A'PA - (A'PB + N)(R + B'PB)^{-1}(B'PA + N') + Qc
// For gamma < 1 the standard discounted reduction substitutes sqrt(gamma) A
// and sqrt(gamma) B, which leaves the cross term N untouched.
inline DareSolution solve_dare(const LqrModel& model, double tol = 1e-12, int max_iter = 100000) {
  const double sg = std::sqrt(model.gamma);
  const Mat a = sg * model.a;
  const Mat b = sg * model.b;
  const Mat at = a.transpose();
  const Mat bt = b.transpose();

  DareSolution sol;
  Mat p = model.qc;
  double resid = std::numeric_limits<double>::infinity();
  int it = 0;
  Mat g;
  for (; it < max_iter; ++it) {
    g = model.rc + bt * p * b;
    Eigen::LLT<Mat> llt(g);
    if (llt.info() != Eigen::Success) {
      throw NumericError("solve_dare: R + B'PB is not positive definite");
    }
    const Mat cross = at * p * b + model.n;
    const Mat p_next = at * p * a - cross * llt.solve(cross.transpose()) + model.qc;
    resid = (p_next - p).norm();
    p = p_next;
    if (resid <= tol) break;
  }
  if (resid > tol) {
    throw ConvergenceError("solve_dare: no convergence in " + std::to_string(max_iter) +
                           " iterations, last residual " + std::to_string(resid));
  }
  g = model.rc + bt * p * b;
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) {
    throw NumericError("solve_dare: R + B'PB is not positive definite");
  }
  sol.p = p;
  sol.k_star = llt.solve(model.n.transpose() + bt * p * a);
  sol.iterations = it + 1;
  const Mat cross = at * p * b + model.n;
  sol.residual = (at * p * a - cross * llt.solve(cross.transpose()) + model.qc - p).norm();
  return sol;
}

// Quadratic form of the optimal Q-function:
//   Q*(x,u) = [x;u]' H* [x;u],  H* = [[Qc + g A'PA, N + g A'PB],
//                                     [N' + g B'PA, Rc + g B'PB]]
inline Mat optimal_h(const LqrModel& model, const DareSolution& dare) {
  const int n = model.state_dim();
  const int m = model.input_dim();
  const double g = model.gamma;
  Mat h(n + m, n + m);
  h.topLeftCorner(n, n) = model.qc + g * model.a.transpose() * dare.p * model.a;
  h.topRightCorner(n, m) = model.n + g * model.a.transpose() * dare.p * model.b;
  h.bottomLeftCorner(m, n) = h.topRightCorner(n, m).transpose();
  h.bottomRightCorner(m, m) = model.rc + g * model.b.transpose() * dare.p * model.b;
  return h;
}

inline double closed_loop_spectral_radius(const LqrModel& model, const DareSolution& dare) {
  const Mat acl = model.a - model.b * dare.k_star;
  return acl.eigenvalues().cwiseAbs().maxCoeff();
}

struct OptimalQ {
  Mat q_star;                // n_states x n_actions
  Vec j_star;                // n_states
  std::vector<int> policy;   // greedy action per state, lowest-index tie-break
  double residual = 0.0;     // sup-norm Bellman residual
  int iterations = 0;
};

inline Mat bellman_backup(const TabularMdp& mdp, const Mat& q) {
  const Vec j = q.rowwise().maxCoeff();
  Mat out(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      double ev = 0.0;
      for (int t = 0; t < mdp.n_states; ++t) ev += mdp.transition(s, a, t) * j[t];
      out(s, a) = mdp.r(s, a) + mdp.gamma * ev;
    }
  }
  return out;
}

inline OptimalQ value_iteration(const TabularMdp& mdp, double tol = 1e-12,
                                int max_iter = 1000000, double q_init = 0.0) {
  if (!(mdp.gamma < 1.0)) {
    throw std::invalid_argument("value_iteration: requires gamma < 1");
  }
  mdp.validate();
  OptimalQ out;
  Mat q = Mat::Constant(mdp.n_states, mdp.n_actions, q_init);
  double resid = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < max_iter; ++it) {
    Mat qn = bellman_backup(mdp, q);
    resid = (qn - q).cwiseAbs().maxCoeff();
    q = std::move(qn);
    if (resid <= tol) break;
  }
  if (resid > tol) {
    throw ConvergenceError("value_iteration: no convergence, residual " + std::to_string(resid));
  }
  out.q_star = q;
  out.j_star = q.rowwise().maxCoeff();
  out.policy.resize(static_cast<std::size_t>(mdp.n_states));
  for (int s = 0; s < mdp.n_states; ++s) {
    int best = 0;
    double bv = q(s, 0);
    for (int a = 1; a < mdp.n_actions; ++a) {
      if (q(s, a) > bv) {
        bv = q(s, a);
        best = a;
      }
    }
    out.policy[static_cast<std::size_t>(s)] = best;
  }
  out.residual = (bellman_backup(mdp, q) - q).cwiseAbs().maxCoeff();
  out.iterations = it + 1;
  return out;
}

// One-hot identification: theta*(s * n_actions + a) = Q*(s,a).
inline Vec theta_star_tabular(const TabularMdp& mdp, const OptimalQ& opt) {
  Vec theta(static_cast<Eigen::Index>(mdp.n_states) * mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      theta[s * mdp.n_actions + a] = opt.q_star(s, a);
    }
  }
  return theta;
}

// Exact expected gradient under uniform (s,a) sampling and s' ~ P(.|s,a):
//   gbar(s,a) = (theta_sa - R(s,a) - gamma * sum_s' P(s'|s,a) max_a' theta_s'a')
//               / (n_states * n_actions)
inline Vec expected_gradient_exact(const TabularMdp& mdp, const Vec& theta) {
  const Eigen::Index d = static_cast<Eigen::Index>(mdp.n_states) * mdp.n_actions;
  if (theta.size() != d) throw ShapeError("expected_gradient_exact: theta size mismatch");
  Vec g = Vec::Zero(d);
  Vec best(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) {
    double bv = theta[s * mdp.n_actions];
    for (int a = 1; a < mdp.n_actions; ++a) bv = std::max(bv, theta[s * mdp.n_actions + a]);
    best[s] = bv;
  }
  const double w = 1.0 / (static_cast<double>(mdp.n_states) * mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      double ev = 0.0;
      for (int t = 0; t < mdp.n_states; ++t) ev += mdp.transition(s, a, t) * best[t];
      g[s * mdp.n_actions + a] =
          w * (theta[s * mdp.n_actions + a] - mdp.r(s, a) - mdp.gamma * ev);
    }
  }
  return g;
}

// Monte-Carlo estimate of the same quantity from i.i.d. samples.
inline Vec expected_gradient_mc(const TabularMdp& mdp, const Vec& theta, int n_samples,
                                std::mt19937_64& rng) {
  if (n_samples < 1) throw std::invalid_argument("expected_gradient_mc: n_samples must be >= 1");
  const Eigen::Index d = static_cast<Eigen::Index>(mdp.n_states) * mdp.n_actions;
  if (theta.size() != d) throw ShapeError("expected_gradient_mc: theta size mismatch");
  Vec g = Vec::Zero(d);
  for (int k = 0; k < n_samples; ++k) {
    const TabularExperience e = sample_iid(mdp, rng);
    double bv = theta[e.s_next * mdp.n_actions];
    for (int a = 1; a < mdp.n_actions; ++a) {
      bv = std::max(bv, theta[e.s_next * mdp.n_actions + a]);
    }
    const double target = e.reward + mdp.gamma * bv;
    g[e.s * mdp.n_actions + e.a] += theta[e.s * mdp.n_actions + e.a] - target;
  }
  return g / static_cast<double>(n_samples);
}

// Smallest observed monotonicity ratio (theta - theta*)' gbar(theta) /
// ||theta - theta*||^2 over probe points in the domain: half uniform over the
// ball, half on rays through theta*. Exact enumeration supplies gbar. A
// non-positive result is a finding, not an error; +inf means every probe was
// degenerate.
inline double estimate_c(const TabularMdp& mdp, const Domain& dom, int n_probes,
                         std::mt19937_64& rng) {
  const OptimalQ opt = value_iteration(mdp, 1e-14);
  const Vec theta_star = theta_star_tabular(mdp, opt);
  // Probes this close to theta* would amplify the oracle's own tolerance.
  const double skip2 = 1e-18 * (1.0 + theta_star.squaredNorm());
  const Eigen::Index d = theta_star.size();
  std::normal_distribution<double> dn(0.0, 1.0);
  std::uniform_real_distribution<double> du(0.0, 1.0);

  auto uniform_ball = [&]() {
    Vec v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = dn(rng);
    const double nrm = v.norm();
    if (nrm == 0.0) return Vec(Vec::Zero(d));
    const double r = dom.radius * std::pow(du(rng), 1.0 / static_cast<double>(d));
    return Vec(v * (r / nrm));
  };
  auto ray_probe = [&]() {
    Vec dir(d);
    for (Eigen::Index i = 0; i < d; ++i) dir[i] = dn(rng);
    const double nrm = dir.norm();
    if (nrm == 0.0) return theta_star;
    const double s = du(rng) * dom.radius;
    return Vec(project_ball(theta_star + (s / nrm) * dir, dom));
  };

  double c_min = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n_probes; ++k) {
    const Vec theta = (k % 2 == 0) ? uniform_ball() : ray_probe();
    const Vec diff = theta - theta_star;
    const double n2 = diff.squaredNorm();
    if (n2 <= skip2) continue;  // probe coincides with theta*
    const Vec gbar = expected_gradient_exact(mdp, theta);
    c_min = std::min(c_min, diff.dot(gbar) / n2);
  }
  return c_min;
}

}  // namespace altq
