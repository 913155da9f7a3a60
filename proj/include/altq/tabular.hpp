#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "altq/common.hpp"

namespace altq {

// Finite MDP with a row-stochastic transition tensor P(s'|s,a) and a bounded
// reward table R(s,a) in [0, r_max].
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> p;  // [(s * n_actions + a) * n_states + s']
  Mat r;                  // n_states x n_actions
  double r_max = 1.0;
  double gamma = 0.9;

  double transition(int s, int a, int s_next) const {
    return p[static_cast<std::size_t>((s * n_actions + a) * n_states + s_next)];
  }

  void validate() const {
    if (n_states < 1 || n_actions < 1) {
      throw std::invalid_argument("tabular mdp: need at least one state and one action");
    }
    if (!(gamma > 0.0 && gamma < 1.0)) {
      throw std::invalid_argument("tabular mdp: gamma must be in (0,1)");
    }
    if (r.rows() != n_states || r.cols() != n_actions) {
      throw ShapeError("tabular mdp: reward table shape mismatch");
    }
    if (p.size() != static_cast<std::size_t>(n_states) * n_actions * n_states) {
      throw ShapeError("tabular mdp: transition tensor shape mismatch");
    }
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) {
        double sum = 0.0;
        for (int t = 0; t < n_states; ++t) {
          const double v = transition(s, a, t);
          if (v < 0.0) throw std::invalid_argument("tabular mdp: negative transition probability");
          sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12) {
          throw std::invalid_argument("tabular mdp: transition row does not sum to 1");
        }
        if (r(s, a) < 0.0 || r(s, a) > r_max) {
          throw std::invalid_argument("tabular mdp: reward outside [0, r_max]");
        }
      }
    }
  }
};

struct TabularExperience {
  int s = 0;
  int a = 0;
  int s_next = 0;
  double reward = 0.0;
};

inline int one_hot_index(const TabularMdp& mdp, int s, int a) {
  if (s < 0 || s >= mdp.n_states || a < 0 || a >= mdp.n_actions) {
    throw std::out_of_range("tabular features: state/action index out of range");
  }
  return s * mdp.n_actions + a;
}

// phi(s,a) = e_{s * n_actions + a}
inline Vec tabular_features(const TabularMdp& mdp, int s, int a) {
  Vec phi = Vec::Zero(static_cast<Eigen::Index>(mdp.n_states) * mdp.n_actions);
  phi[one_hot_index(mdp, s, a)] = 1.0;
  return phi;
}

// (s,a) uniform over the state-action grid, s' ~ P(.|s,a).
inline TabularExperience sample_iid(const TabularMdp& mdp, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> ds(0, mdp.n_states - 1);
  std::uniform_int_distribution<int> da(0, mdp.n_actions - 1);
  TabularExperience e;
  e.s = ds(rng);
  e.a = da(rng);
  std::uniform_real_distribution<double> du(0.0, 1.0);
  const double u = du(rng);
  double acc = 0.0;
  e.s_next = mdp.n_states - 1;
  for (int t = 0; t < mdp.n_states; ++t) {
    acc += mdp.transition(e.s, e.a, t);
    if (u <= acc) {
      e.s_next = t;
      break;
    }
  }
  e.reward = mdp.r(e.s, e.a);
  return e;
}

// Random instance: transition rows from a symmetric Dirichlet(1), rewards
// uniform on [0, r_max]. With deterministic_transitions each row is a one-hot
// picked uniformly.
inline TabularMdp random_mdp(std::uint64_t seed, int n_states, int n_actions, double r_max,
                             double gamma, bool deterministic_transitions = false) {
  if (n_states < 1 || n_actions < 1) {
    throw std::invalid_argument("random_mdp: sizes must be >= 1");
  }
  std::mt19937_64 rng(seed);
  TabularMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.r_max = r_max;
  mdp.gamma = gamma;
  mdp.r = Mat::Zero(n_states, n_actions);
  mdp.p.assign(static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);

  std::uniform_real_distribution<double> dr(0.0, r_max);
  std::uniform_int_distribution<int> dt(0, n_states - 1);
  std::exponential_distribution<double> de(1.0);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      mdp.r(s, a) = dr(rng);
      const std::size_t base = static_cast<std::size_t>(s * n_actions + a) * n_states;
      if (deterministic_transitions) {
        mdp.p[base + static_cast<std::size_t>(dt(rng))] = 1.0;
      } else {
        double sum = 0.0;
        for (int t = 0; t < n_states; ++t) {
          const double x = de(rng);
          mdp.p[base + t] = x;
          sum += x;
        }
        for (int t = 0; t < n_states; ++t) mdp.p[base + t] /= sum;
      }
    }
  }
  mdp.validate();
  return mdp;
}

// Adapter used by the learning loop.
class TabularEnv {
 public:
  using Experience = TabularExperience;

  explicit TabularEnv(TabularMdp mdp) : mdp_(std::move(mdp)) { mdp_.validate(); }

  const TabularMdp& mdp() const { return mdp_; }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(mdp_.n_states) * mdp_.n_actions; }
  double gamma() const { return mdp_.gamma; }
  bool cost_mode() const { return false; }
  double r_max() const { return mdp_.r_max; }

  struct Sampler {
    const TabularMdp* mdp;
    Experience draw(std::mt19937_64& rng, const Vec& /*theta*/) { return sample_iid(*mdp, rng); }
  };

  Sampler sampler() const { return Sampler{&mdp_}; }

  Vec features(const Experience& e) const { return tabular_features(mdp_, e.s, e.a); }

  int greedy(const Vec& theta, int s) const {
    int best = 0;
    double best_v = theta[one_hot_index(mdp_, s, 0)];
    for (int a = 1; a < mdp_.n_actions; ++a) {
      const double v = theta[one_hot_index(mdp_, s, a)];
      if (v > best_v) {
        best_v = v;
        best = a;
      }
    }
    return best;
  }

  double best_next_value(const Vec& theta, const Experience& e) const {
    return theta[one_hot_index(mdp_, e.s_next, greedy(theta, e.s_next))];
  }

  // Action picked by theta_select, value read from theta_eval.
  double cross_next_value(const Vec& theta_select, const Vec& theta_eval,
                          const Experience& e) const {
    return theta_eval[one_hot_index(mdp_, e.s_next, greedy(theta_select, e.s_next))];
  }

 private:
  TabularMdp mdp_;
};

}  // namespace altq
