#pragma once

#include <Eigen/Cholesky>

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

#include "altq/common.hpp"

namespace altq {

// Discrete-time linear dynamics x' = A x + B u with quadratic stage cost
// x'Qc x + u'Rc u + 2 x'N u.
struct LqrModel {
  Mat a;
  Mat b;
  Mat qc;
  Mat rc;
  Mat n;
  double gamma = 1.0;

  int state_dim() const { return static_cast<int>(a.rows()); }
  int input_dim() const { return static_cast<int>(b.cols()); }

  void validate() const {
    const int ns = state_dim();
    const int ni = input_dim();
    if (ns < 1 || ni < 1) throw std::invalid_argument("lqr model: empty dimensions");
    if (a.cols() != ns || b.rows() != ns) throw ShapeError("lqr model: A/B shape mismatch");
    if (qc.rows() != ns || qc.cols() != ns) throw ShapeError("lqr model: Qc shape mismatch");
    if (rc.rows() != ni || rc.cols() != ni) throw ShapeError("lqr model: Rc shape mismatch");
    if (n.rows() != ns || n.cols() != ni) throw ShapeError("lqr model: N shape mismatch");
    if (!(gamma > 0.0 && gamma <= 1.0)) {
      throw std::invalid_argument("lqr model: gamma must be in (0,1]");
    }
    if (!qc.isApprox(qc.transpose(), 1e-10)) {
      throw std::invalid_argument("lqr model: Qc must be symmetric");
    }
    if (!rc.isApprox(rc.transpose(), 1e-10)) {
      throw std::invalid_argument("lqr model: Rc must be symmetric");
    }
    Eigen::LLT<Mat> llt(rc);
    if (llt.info() != Eigen::Success) {
      throw DefinitenessError("lqr model: Rc must be positive definite");
    }
  }
};

struct LqrExperience {
  Vec x;
  Vec u;
  Vec x_next;
  double reward = 0.0;  // stage cost; the environment runs in cost mode
};

inline double lqr_cost(const LqrModel& m, const Vec& x, const Vec& u) {
  return x.dot(m.qc * x) + u.dot(m.rc * u) + 2.0 * x.dot(m.n * u);
}

// Deterministic step. The noisy overload adds Gaussian process noise to x'.
inline std::pair<Vec, double> lqr_step(const LqrModel& m, const Vec& x, const Vec& u) {
  if (x.size() != m.state_dim() || u.size() != m.input_dim()) {
    throw ShapeError("lqr_step: dimension mismatch");
  }
  return {m.a * x + m.b * u, lqr_cost(m, x, u)};
}

inline std::pair<Vec, double> lqr_step(const LqrModel& m, const Vec& x, const Vec& u,
                                       double noise_std, std::mt19937_64& rng) {
  auto [x_next, cost] = lqr_step(m, x, u);
  if (noise_std > 0.0) {
    std::normal_distribution<double> dn(0.0, noise_std);
    for (Eigen::Index i = 0; i < x_next.size(); ++i) x_next[i] += dn(rng);
  }
  return {std::move(x_next), cost};
}

// Quadratic feature map over z = [x; u]: the upper-triangular monomials of z
// with off-diagonal entries doubled, divided by c_phi. Inputs are clipped to
// the box |z_i| <= z_max first, so ||phi|| <= 1 everywhere by the choice of
// c_phi (the supremum of the raw monomial norm over the box, attained at the
// corner and confirmed against random box points).
class QuadFeatures {
 public:
  QuadFeatures(int state_dim, int input_dim, double z_max)
      : n_(state_dim), m_(input_dim), z_max_(z_max) {
    if (n_ < 1 || m_ < 1) throw std::invalid_argument("quad features: empty dimensions");
    if (!(z_max > 0.0)) throw std::invalid_argument("quad features: z_max must be > 0");
    c_phi_ = sup_raw_norm();
  }

  QuadFeatures(int state_dim, int input_dim, double z_max, double c_phi_override)
      : QuadFeatures(state_dim, input_dim, z_max) {
    if (!(c_phi_override > 0.0)) throw std::invalid_argument("quad features: c_phi must be > 0");
    c_phi_ = c_phi_override;
  }

  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  int z_dim() const { return n_ + m_; }
  double z_max() const { return z_max_; }
  double c_phi() const { return c_phi_; }
  Eigen::Index dim() const {
    const Eigen::Index p = z_dim();
    return p * (p + 1) / 2;
  }

  Vec operator()(const Vec& x, const Vec& u) const {
    if (x.size() != n_ || u.size() != m_) throw ShapeError("quad features: dimension mismatch");
    Vec z(z_dim());
    z.head(n_) = x;
    z.tail(m_) = u;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      z[i] = std::clamp(z[i], -z_max_, z_max_);
    }
    return raw_monomials(z) / c_phi_;
  }

  // theta <-> symmetric quadratic form. The map stores each off-diagonal once
  // (the factor 2 lives in the features), so Q(z; theta) = z' H z with
  // H = theta_to_h(theta), and theta_for_h inverts it exactly.
  Mat theta_to_h(const Vec& theta) const {
    if (theta.size() != dim()) throw ShapeError("quad features: theta size mismatch");
    const Eigen::Index p = z_dim();
    Mat h(p, p);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = i; j < p; ++j) {
        h(i, j) = theta[k];
        h(j, i) = theta[k];
        ++k;
      }
    }
    return h / c_phi_;
  }

  Vec theta_for_h(const Mat& h) const {
    const Eigen::Index p = z_dim();
    if (h.rows() != p || h.cols() != p) throw ShapeError("quad features: H size mismatch");
    Vec theta(dim());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = i; j < p; ++j) {
        theta[k++] = h(i, j) * c_phi_;
      }
    }
    return theta;
  }

  Vec raw_monomials(const Vec& z) const {
    const Eigen::Index p = z_dim();
    Vec phi(dim());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < p; ++i) {
      phi[k++] = z[i] * z[i];
      for (Eigen::Index j = i + 1; j < p; ++j) {
        phi[k++] = 2.0 * z[i] * z[j];
      }
    }
    return phi;
  }

 private:
  double sup_raw_norm() const {
    const Eigen::Index p = z_dim();
    const Vec corner = Vec::Constant(p, z_max_);
    double best = raw_monomials(corner).norm();
    std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> du(-z_max_, z_max_);
    Vec z(p);
    for (int k = 0; k < 10000; ++k) {
      for (Eigen::Index i = 0; i < p; ++i) z[i] = du(rng);
      best = std::max(best, raw_monomials(z).norm());
    }
    return best;
  }

  int n_;
  int m_;
  double z_max_;
  double c_phi_;
};

// K = H_uu^{-1} H_ux for the quadratic form encoded by theta. Requires H_uu
// positive definite; the greedy action is then u = -K x.
inline Mat policy_from_theta(const Vec& theta, const QuadFeatures& feats) {
  const Mat h = feats.theta_to_h(theta);
  const int n = feats.state_dim();
  const int m = feats.input_dim();
  const Mat h_uu = h.bottomRightCorner(m, m);
  const Mat h_ux = h.bottomLeftCorner(m, n);
  Eigen::LLT<Mat> llt(h_uu);
  if (llt.info() != Eigen::Success) {
    throw DefinitenessError("policy_from_theta: H_uu is not positive definite");
  }
  return llt.solve(h_ux);
}

// Exploration and state-reset knobs for the rollout sampler.
struct LqrBehavior {
  double explore_eps = 0.1;    // probability of a purely random action
  double action_noise = 0.2;   // stddev of the additive Gaussian action noise
  double reset_std = 0.3;      // stddev of the state reset distribution
  double reset_bound = 0.5;    // resample the state when |x_i| exceeds this
  double process_noise = 0.0;  // optional dynamics noise, off by default
};

class LqrEnv {
 public:
  using Experience = LqrExperience;

  LqrEnv(LqrModel model, QuadFeatures feats, LqrBehavior behavior = {})
      : model_(std::move(model)), feats_(std::move(feats)), behavior_(behavior) {
    model_.validate();
    if (feats_.state_dim() != model_.state_dim() || feats_.input_dim() != model_.input_dim()) {
      throw ShapeError("lqr env: feature map does not match the model dimensions");
    }
  }

  const LqrModel& model() const { return model_; }
  const QuadFeatures& features_map() const { return feats_; }
  const LqrBehavior& behavior() const { return behavior_; }

  Eigen::Index dim() const { return feats_.dim(); }
  double gamma() const { return model_.gamma; }
  bool cost_mode() const { return true; }

  struct Sampler {
    const LqrEnv* env;
    Vec x;
    bool started = false;

    Experience draw(std::mt19937_64& rng, const Vec& theta) {
      const LqrBehavior& b = env->behavior_;
      if (!started) {
        x = env->reset_state(rng);
        started = true;
      }
      if (x.lpNorm<Eigen::Infinity>() > b.reset_bound) {
        x = env->reset_state(rng);
      }
      std::normal_distribution<double> dn(0.0, 1.0);
      std::uniform_real_distribution<double> du(0.0, 1.0);
      const bool explore = du(rng) < b.explore_eps;
      Vec u(env->model_.input_dim());
      for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = b.action_noise * dn(rng);
      if (!explore) {
        const Mat k = policy_from_theta(theta, env->feats_);
        u += -k * x;
      }
      const double u_cap = env->feats_.z_max();
      for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = std::clamp(u[i], -u_cap, u_cap);

      Experience e;
      e.x = x;
      e.u = u;
      auto [x_next, cost] = lqr_step(env->model_, x, u, b.process_noise, rng);
      e.x_next = x_next;
      e.reward = cost;
      x = std::move(x_next);
      return e;
    }
  };

  Sampler sampler() const { return Sampler{this, Vec::Zero(model_.state_dim()), false}; }

  Vec features(const Experience& e) const { return feats_(e.x, e.u); }

  Mat policy_gain(const Vec& theta) const { return policy_from_theta(theta, feats_); }

  Vec greedy(const Vec& theta, const Vec& x) const { return -policy_gain(theta) * x; }

  double best_next_value(const Vec& theta, const Experience& e) const {
    const Vec u = greedy(theta, e.x_next);
    return feats_(e.x_next, u).dot(theta);
  }

  double cross_next_value(const Vec& theta_select, const Vec& theta_eval,
                          const Experience& e) const {
    const Vec u = greedy(theta_select, e.x_next);
    return feats_(e.x_next, u).dot(theta_eval);
  }

 private:
  Vec reset_state(std::mt19937_64& rng) const {
    std::normal_distribution<double> dn(0.0, behavior_.reset_std);
    Vec x(model_.state_dim());
    for (int attempt = 0; attempt < 100; ++attempt) {
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = dn(rng);
      if (x.lpNorm<Eigen::Infinity>() <= behavior_.reset_bound) return x;
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x[i] = std::clamp(x[i], -behavior_.reset_bound, behavior_.reset_bound);
    }
    return x;
  }

  LqrModel model_;
  QuadFeatures feats_;
  LqrBehavior behavior_;
};

}  // namespace altq
