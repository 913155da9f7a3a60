#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "altq/oracle.hpp"

using namespace altq;

namespace {

LqrModel scalar_model() {
  LqrModel m;
  m.a = Mat::Constant(1, 1, 1.0);
  m.b = Mat::Constant(1, 1, 1.0);
  m.qc = Mat::Constant(1, 1, 1.0);
  m.rc = Mat::Constant(1, 1, 1.0);
  m.n = Mat::Zero(1, 1);
  m.gamma = 1.0;
  return m;
}

TabularMdp single_state_mdp(double reward, double gamma) {
  TabularMdp mdp;
  mdp.n_states = 1;
  mdp.n_actions = 1;
  mdp.gamma = gamma;
  mdp.r_max = std::max(reward, 1.0);
  mdp.r = Mat::Constant(1, 1, reward);
  mdp.p = {1.0};
  mdp.validate();
  return mdp;
}

TabularMdp chain_mdp() {
  // s0 -> s1 with reward 0; s1 absorbing with reward 1; gamma 0.5.
  TabularMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 1;
  mdp.gamma = 0.5;
  mdp.r_max = 1.0;
  mdp.r = Mat::Zero(2, 1);
  mdp.r(1, 0) = 1.0;
  mdp.p = {0, 1, 0, 1};
  mdp.validate();
  return mdp;
}

}  // namespace

TEST_CASE("scalar Riccati fixed point has the closed-form golden ratio solution") {
  const DareSolution sol = solve_dare(scalar_model(), 1e-14);
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  CHECK(sol.p(0, 0) == doctest::Approx(golden).epsilon(1e-10));
  CHECK(sol.k_star(0, 0) == doctest::Approx(golden / (1.0 + golden)).epsilon(1e-10));
  CHECK(sol.k_star(0, 0) == doctest::Approx(0.618034).epsilon(1e-6));
  CHECK(sol.residual <= 1e-10);
}

TEST_CASE("no control authority means zero gain") {
  LqrModel m;
  m.a = Mat::Zero(2, 2);
  m.a(0, 0) = 0.6;
  m.a(1, 1) = 0.4;
  m.a(0, 1) = 0.2;
  m.b = Mat::Zero(2, 1);
  m.qc = Mat::Identity(2, 2);
  m.rc = Mat::Identity(1, 1);
  m.n = Mat::Zero(2, 1);
  const DareSolution sol = solve_dare(m);
  CHECK(sol.k_star.norm() == 0.0);
  CHECK(sol.residual <= 1e-12);
}

TEST_CASE("the returned P reproduces itself under the Riccati map") {
  LqrModel m;
  m.a = Mat(2, 2);
  m.a << 0.5, 0.3, 0.1, 0.6;
  m.b = Mat::Zero(2, 1);
  m.b(1, 0) = 1.0;
  m.qc = 0.4 * Mat::Identity(2, 2);
  m.rc = Mat::Constant(1, 1, 0.5);
  m.n = Mat::Zero(2, 1);
  const DareSolution sol = solve_dare(m, 1e-13);
  CHECK(sol.residual <= 1e-12);
  CHECK(sol.p.isApprox(sol.p.transpose(), 1e-10));
  CHECK(closed_loop_spectral_radius(m, sol) < 1.0);
}

TEST_CASE("discounting reduces to the scaled-dynamics solution") {
  LqrModel m;
  m.a = Mat(2, 2);
  m.a << 0.9, 0.2, 0.0, 0.8;
  m.b = Mat::Zero(2, 1);
  m.b(0, 0) = 0.5;
  m.b(1, 0) = 1.0;
  m.qc = Mat::Identity(2, 2);
  m.rc = Mat::Constant(1, 1, 1.0);
  m.n = Mat::Zero(2, 1);
  m.gamma = 0.9;
  const DareSolution discounted = solve_dare(m);

  LqrModel scaled = m;
  scaled.gamma = 1.0;
  scaled.a = std::sqrt(0.9) * m.a;
  scaled.b = std::sqrt(0.9) * m.b;
  const DareSolution reference = solve_dare(scaled);
  CHECK(discounted.p.isApprox(reference.p, 1e-10));
  CHECK(discounted.k_star.isApprox(reference.k_star, 1e-10));
}

TEST_CASE("singular control-cost block is reported") {
  LqrModel m = scalar_model();
  m.rc = Mat::Zero(1, 1);
  m.b = Mat::Zero(1, 1);  // makes R + B'PB identically zero
  CHECK_THROWS_AS(solve_dare(m), NumericError);
}

TEST_CASE("optimal_h is consistent with the optimal gain") {
  LqrModel m;
  m.a = Mat(2, 2);
  m.a << 0.5, 0.3, 0.1, 0.6;
  m.b = Mat::Zero(2, 1);
  m.b(1, 0) = 1.0;
  m.qc = 0.05 * Mat::Identity(2, 2);
  m.rc = Mat::Constant(1, 1, 0.1);
  m.n = Mat::Zero(2, 1);
  const DareSolution sol = solve_dare(m);
  const Mat h = optimal_h(m, sol);
  const Mat h_uu = h.bottomRightCorner(1, 1);
  const Mat h_ux = h.bottomLeftCorner(1, 2);
  CHECK((h_uu.inverse() * h_ux).isApprox(sol.k_star, 1e-10));
}

TEST_CASE("value iteration on the single-state geometric series") {
  const OptimalQ opt = value_iteration(single_state_mdp(1.0, 0.5));
  CHECK(opt.q_star(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(opt.residual <= 1e-12);
}

TEST_CASE("value iteration solves the two-state chain") {
  const OptimalQ opt = value_iteration(chain_mdp());
  CHECK(opt.q_star(1, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(opt.q_star(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("value iteration result is initialization independent") {
  const TabularMdp mdp = random_mdp(3, 5, 3, 1.0, 0.7);
  const OptimalQ from_zero = value_iteration(mdp, 1e-12, 1000000, 0.0);
  const OptimalQ from_high = value_iteration(mdp, 1e-12, 1000000, 1.0 / (1.0 - 0.7));
  CHECK((from_zero.q_star - from_high.q_star).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("value iteration refuses gamma >= 1") {
  TabularMdp mdp = single_state_mdp(1.0, 0.5);
  mdp.gamma = 1.0;
  CHECK_THROWS_AS(value_iteration(mdp), std::invalid_argument);
}

TEST_CASE("value iteration satisfies the fixed-point equation everywhere") {
  const TabularMdp mdp = random_mdp(11, 6, 4, 2.0, 0.85);
  const OptimalQ opt = value_iteration(mdp, 1e-12);
  const Mat backup = bellman_backup(mdp, opt.q_star);
  CHECK((backup - opt.q_star).cwiseAbs().maxCoeff() <= 1e-11);
}

TEST_CASE("greedy policy ties break toward the lowest action index") {
  TabularMdp mdp;
  mdp.n_states = 1;
  mdp.n_actions = 3;
  mdp.gamma = 0.5;
  mdp.r_max = 1.0;
  mdp.r = Mat::Zero(1, 3);
  mdp.r(0, 1) = 1.0;
  mdp.r(0, 2) = 1.0;  // actions 1 and 2 tie
  mdp.p = {1, 1, 1};
  mdp.validate();
  const OptimalQ opt = value_iteration(mdp);
  CHECK(opt.policy[0] == 1);
}

TEST_CASE("theta* identification and round trip") {
  const TabularMdp mdp = chain_mdp();
  const OptimalQ opt = value_iteration(mdp);
  const Vec theta = theta_star_tabular(mdp, opt);
  CHECK(theta.size() == 2);
  CHECK(theta[0] == opt.q_star(0, 0));
  CHECK(theta[1] == opt.q_star(1, 0));
  for (int s = 0; s < 2; ++s) {
    CHECK(tabular_features(mdp, s, 0).dot(theta) == opt.q_star(s, 0));
  }
}

TEST_CASE("the exact expected gradient vanishes at theta*") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const TabularMdp mdp = random_mdp(seed, 5, 3, 1.0, 0.6);
    const OptimalQ opt = value_iteration(mdp, 1e-14);
    const Vec theta_star = theta_star_tabular(mdp, opt);
    CHECK(expected_gradient_exact(mdp, theta_star).norm() <= 1e-12);
  }
}

TEST_CASE("single-transition closed form of the expected gradient") {
  const TabularMdp mdp = single_state_mdp(1.0, 0.5);
  for (double theta : {-1.0, 0.0, 1.5, 2.0, 7.0}) {
    const Vec g = expected_gradient_exact(mdp, Vec::Constant(1, theta));
    CHECK(g[0] == doctest::Approx((1.0 - 0.5) * theta - 1.0).epsilon(1e-14));
  }
}

TEST_CASE("Monte-Carlo gradient estimate is statistically consistent") {
  const TabularMdp mdp = random_mdp(17, 4, 2, 1.0, 0.7);
  Vec theta = Vec::Zero(8);
  theta << 0.3, -0.2, 0.9, 0.1, -0.5, 0.4, 0.0, 0.7;
  const Vec exact = expected_gradient_exact(mdp, theta);

  std::mt19937_64 rng(99);
  const int n = 200000;
  const Vec mc = expected_gradient_mc(mdp, theta, n, rng);
  // Entry-wise bound: a single sample gradient entry is O(1), so the standard
  // error is at most ~ O(1)/sqrt(n). Use a generous 5-sigma envelope.
  const double envelope = 5.0 * 3.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index i = 0; i < 8; ++i) {
    CHECK(std::abs(mc[i] - exact[i]) <= envelope);
  }
}

TEST_CASE("estimate_c recovers 1 - gamma on the single-state instance") {
  const TabularMdp mdp = single_state_mdp(1.0, 0.5);
  std::mt19937_64 rng(5);
  const double c = estimate_c(mdp, Domain{5.0}, 200, rng);
  CHECK(c == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("estimate_c never increases with more probes") {
  const TabularMdp mdp = random_mdp(23, 3, 2, 1.0, 0.5, true);
  std::mt19937_64 r1(8), r2(8);
  const double c100 = estimate_c(mdp, Domain{6.0}, 100, r1);
  const double c200 = estimate_c(mdp, Domain{6.0}, 200, r2);
  CHECK(c200 <= c100 + 1e-15);
}

TEST_CASE("estimate_c skips degenerate probes") {
  // radius 0 makes every probe coincide with theta* = 0 (zero rewards).
  const TabularMdp mdp = single_state_mdp(0.0, 0.5);
  std::mt19937_64 rng(1);
  const double c = estimate_c(mdp, Domain{0.0}, 50, rng);
  CHECK(std::isinf(c));
}
