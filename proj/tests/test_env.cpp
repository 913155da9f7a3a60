#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "altq/lqr.hpp"
#include "altq/tabular.hpp"

using namespace altq;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Mat mat2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

TabularMdp tiny_mdp() {
  // 2 states x 2 actions, deterministic-ish transitions.
  TabularMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 2;
  mdp.gamma = 0.5;
  mdp.r_max = 1.0;
  mdp.r = mat2(0.2, 0.8, 1.0, 0.1);
  mdp.p = {1, 0, 0, 1, 0.5, 0.5, 0, 1};
  mdp.validate();
  return mdp;
}

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

}  // namespace

TEST_CASE("tabular one-hot features") {
  const TabularMdp mdp = tiny_mdp();
  CHECK(tabular_features(mdp, 0, 0) == vec({1, 0, 0, 0}));
  CHECK(tabular_features(mdp, 1, 1) == vec({0, 0, 0, 1}));
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) {
      CHECK(tabular_features(mdp, s, a).norm() == 1.0);
    }
  }
  CHECK_THROWS_AS(tabular_features(mdp, 2, 0), std::out_of_range);
  CHECK_THROWS_AS(tabular_features(mdp, 0, -1), std::out_of_range);
}

TEST_CASE("tabular mdp validation") {
  TabularMdp bad = tiny_mdp();
  bad.p[0] = 0.9;  // row no longer sums to one
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = tiny_mdp();
  bad.r(0, 0) = 2.0;  // above r_max
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = tiny_mdp();
  bad.gamma = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = tiny_mdp();
  bad.n_actions = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("sample_iid is deterministic per seed and follows the kernel") {
  const TabularMdp mdp = tiny_mdp();
  std::mt19937_64 a(42), b(42);
  for (int k = 0; k < 200; ++k) {
    const auto ea = sample_iid(mdp, a);
    const auto eb = sample_iid(mdp, b);
    CHECK(ea.s == eb.s);
    CHECK(ea.a == eb.a);
    CHECK(ea.s_next == eb.s_next);
    CHECK(ea.reward == eb.reward);
    if (ea.s == 0 && ea.a == 0) CHECK(ea.s_next == 0);  // deterministic row
    CHECK(ea.reward == mdp.r(ea.s, ea.a));
  }
}

TEST_CASE("sample_iid state-action frequencies are uniform within 3-sigma bands") {
  const TabularMdp mdp = tiny_mdp();
  std::mt19937_64 rng(7);
  const int n = 100000;
  Eigen::Matrix<int, 2, 2> counts;
  counts.setZero();
  for (int k = 0; k < n; ++k) {
    const auto e = sample_iid(mdp, rng);
    counts(e.s, e.a)++;
  }
  const double p = 0.25;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) {
      CHECK(std::abs(counts(s, a) - n * p) <= 3.0 * sigma);
    }
  }
}

TEST_CASE("random_mdp rows are stochastic and reproducible") {
  const TabularMdp m1 = random_mdp(5, 6, 3, 2.0, 0.8);
  const TabularMdp m2 = random_mdp(5, 6, 3, 2.0, 0.8);
  CHECK(m1.p == m2.p);
  CHECK(m1.r == m2.r);
  for (int s = 0; s < 6; ++s) {
    for (int a = 0; a < 3; ++a) {
      double sum = 0.0;
      for (int t = 0; t < 6; ++t) sum += m1.transition(s, a, t);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(m1.r(s, a) >= 0.0);
      CHECK(m1.r(s, a) <= 2.0);
    }
  }

  const TabularMdp det = random_mdp(9, 4, 2, 1.0, 0.5, true);
  for (int s = 0; s < 4; ++s) {
    for (int a = 0; a < 2; ++a) {
      int ones = 0;
      for (int t = 0; t < 4; ++t) {
        if (det.transition(s, a, t) == 1.0) ++ones;
      }
      CHECK(ones == 1);
    }
  }
  CHECK_THROWS_AS(random_mdp(1, 0, 2, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("lqr_step arithmetic") {
  const LqrModel m = scalar_model();
  auto [x0, c0] = lqr_step(m, vec({0.0}), vec({0.0}));
  CHECK(x0[0] == 0.0);
  CHECK(c0 == 0.0);

  auto [x1, c1] = lqr_step(m, vec({1.0}), vec({-0.5}));
  CHECK(x1[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(c1 == doctest::Approx(1.25).epsilon(1e-15));

  LqrModel id;
  id.a = Mat::Identity(2, 2);
  id.b = Mat::Zero(2, 1);
  id.qc = Mat::Identity(2, 2);
  id.rc = Mat::Identity(1, 1);
  id.n = Mat::Zero(2, 1);
  auto [x2, c2] = lqr_step(id, vec({0.3, -0.7}), vec({5.0}));
  CHECK(x2 == vec({0.3, -0.7}));
  (void)c2;
}

TEST_CASE("quadratic features match the worked scalar example") {
  QuadFeatures feats(1, 1, 2.0, 3.0);  // explicit c_phi = 3
  const Vec phi = feats(vec({1.0}), vec({1.0}));
  CHECK(phi == vec({1.0 / 3, 2.0 / 3, 1.0 / 3}));
  CHECK(phi.norm() == doctest::Approx(std::sqrt(6.0) / 3.0).epsilon(1e-15));
  CHECK(phi.norm() <= 1.0);

  CHECK(feats(vec({0.0}), vec({0.0})).isZero(0.0));
}

TEST_CASE("quadratic representation identity on random symmetric forms") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> dn(0.0, 1.0);
  QuadFeatures feats(2, 1, 1.5);
  for (int k = 0; k < 100; ++k) {
    Mat h(3, 3);
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) {
        h(i, j) = dn(rng);
        h(j, i) = h(i, j);
      }
    }
    Vec x(2), u(1);
    x << 1.2 * dn(rng), 1.2 * dn(rng);
    u << 1.2 * dn(rng);
    Vec z(3);
    z << x, u;
    bool inside = true;
    for (int i = 0; i < 3; ++i) inside = inside && std::abs(z[i]) <= 1.5;
    if (!inside) continue;
    const double quad = z.dot(h * z);
    const double lin = feats(x, u).dot(feats.theta_for_h(h));
    CHECK(lin == doctest::Approx(quad).epsilon(1e-12));
  }
}

TEST_CASE("feature norm stays below one even for inputs outside the box") {
  QuadFeatures feats(2, 1, 0.7);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> dn(0.0, 2.0);
  double max_norm = 0.0;
  for (int k = 0; k < 10000; ++k) {
    Vec x(2), u(1);
    x << dn(rng), dn(rng);
    u << dn(rng);
    max_norm = std::max(max_norm, feats(x, u).norm());
  }
  CHECK(max_norm <= 1.0 + 1e-12);
}

TEST_CASE("c_phi equals the box-corner supremum") {
  QuadFeatures feats(2, 1, 0.7);
  const int p = 3;
  const double corner = 0.7 * 0.7 * std::sqrt(static_cast<double>(p * (2 * p - 1)));
  CHECK(feats.c_phi() == doctest::Approx(corner).epsilon(1e-12));
}

TEST_CASE("policy_from_theta closed form and its properties") {
  QuadFeatures feats(1, 1, 2.0);
  Mat h(2, 2);
  h << 1.0, 1.0, 1.0, 2.0;  // h_ux = 1, h_uu = 2
  const Vec theta = feats.theta_for_h(h);
  const Mat k = policy_from_theta(theta, feats);
  CHECK(k(0, 0) == doctest::Approx(0.5).epsilon(1e-14));

  // Greedy action u = -K x at x = 4.
  CHECK((-k * vec({4.0}))(0) == doctest::Approx(-2.0).epsilon(1e-14));

  // No cross term: K = 0.
  Mat h0(2, 2);
  h0 << 1.0, 0.0, 0.0, 2.0;
  CHECK(policy_from_theta(feats.theta_for_h(h0), feats)(0, 0) == 0.0);

  // Invariance to positive scaling.
  const Mat k3 = policy_from_theta(3.0 * theta, feats);
  CHECK(k3(0, 0) == doctest::Approx(k(0, 0)).epsilon(1e-14));

  // Indefinite H_uu is rejected.
  Mat hbad(2, 2);
  hbad << 1.0, 1.0, 1.0, -2.0;
  CHECK_THROWS_AS(policy_from_theta(feats.theta_for_h(hbad), feats), DefinitenessError);
}

TEST_CASE("lqr model validation") {
  LqrModel m = scalar_model();
  m.rc = Mat::Constant(1, 1, -1.0);
  CHECK_THROWS_AS(m.validate(), DefinitenessError);

  m = scalar_model();
  m.qc = Mat::Zero(2, 2);
  CHECK_THROWS_AS(m.validate(), ShapeError);

  m = scalar_model();
  m.gamma = 1.5;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("lqr sampler keeps inputs clamped and is reproducible") {
  LqrModel m;
  m.a = mat2(0.5, 0.3, 0.1, 0.6);
  m.b = Mat::Zero(2, 1);
  m.b(1, 0) = 1.0;
  m.qc = 0.05 * Mat::Identity(2, 2);
  m.rc = Mat::Constant(1, 1, 0.1);
  m.n = Mat::Zero(2, 1);
  m.gamma = 1.0;
  LqrBehavior behavior;
  behavior.reset_bound = 0.5;
  LqrEnv env(m, QuadFeatures(2, 1, 0.7), behavior);

  const Vec theta0 = env.features_map().theta_for_h(0.1 * Mat::Identity(3, 3));
  auto s1 = env.sampler();
  auto s2 = env.sampler();
  std::mt19937_64 r1(3), r2(3);
  for (int k = 0; k < 500; ++k) {
    const auto e1 = s1.draw(r1, theta0);
    const auto e2 = s2.draw(r2, theta0);
    CHECK(e1.x == e2.x);
    CHECK(e1.u == e2.u);
    CHECK(e1.x_next == e2.x_next);
    CHECK(e1.x.lpNorm<Eigen::Infinity>() <= 0.5 + 1e-12);
    CHECK(e1.u.lpNorm<Eigen::Infinity>() <= 0.7 + 1e-12);
    CHECK(e1.reward == doctest::Approx(lqr_cost(m, e1.x, e1.u)).epsilon(1e-14));
  }
}
