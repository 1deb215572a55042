#include "qld/classical.hpp"

#include "qld/example_models.hpp"
#include "qld/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace qld;

TEST_CASE("stationary_kalman_gain: no process noise") {
  MatrixXd a(1, 1), g(1, 1), c(1, 1);
  a << 0.9;
  g << 0.0;
  c << 1.0;
  const auto sg = stationary_kalman_gain(a, g, c, 0.01);
  CHECK(sg.S(0, 0) == 0.0);
  CHECK(sg.K(0) == 0.0);
  CHECK(sg.sigma_e2 == doctest::Approx(0.01).epsilon(1e-14));
}

TEST_CASE("stationary_kalman_gain: scalar Riccati closed form") {
  // s = a^2 s + g^2 - a^2 s^2 / (s + v)  ->  quadratic in s
  const double a = 0.8, g = 0.3, v = 0.05;
  MatrixXd am(1, 1), gm(1, 1), cm(1, 1);
  am << a;
  gm << g;
  cm << 1.0;
  const auto sg = stationary_kalman_gain(am, gm, cm, v);
  // (s + v) s = a^2 s v + g^2 (s + v):
  // s^2 + (v - a^2 v - g^2) s - g^2 v = 0
  const double b = v - a * a * v - g * g;
  const double root = 0.5 * (-b + std::sqrt(b * b + 4.0 * g * g * v));
  CHECK(sg.S(0, 0) == doctest::Approx(root).epsilon(1e-10));

  // fixed point: one more update moves it below tolerance
  const double s = sg.S(0, 0);
  const double next = a * a * s + g * g - a * a * s * s / (s + v);
  CHECK(std::abs(next - s) < 1e-11);
}

TEST_CASE("stationary_kalman_gain: built-in examples converge inside the cap") {
  {
    const auto ex = make_example("dc_motor");
    const VectorXd u0 = VectorXd::Zero(1);
    for (double th : {0.05, 0.462, 1.588, 2.0}) {
      const VectorXd theta = VectorXd::Constant(1, th);
      CHECK_NOTHROW(stationary_kalman_gain(ex.model.A(theta, u0),
                                           ex.model.G(theta, u0), ex.model.C,
                                           ex.model.S_v(0, 0)));
    }
  }
  {
    const auto ex = make_example("atomic_oscillator");
    const VectorXd u0 = VectorXd::Zero(1);
    const VectorXd theta = VectorXd::Constant(1, 54.6637);
    const auto sg = stationary_kalman_gain(ex.model.A(theta, u0),
                                           ex.model.G(theta, u0), ex.model.C,
                                           ex.model.S_v(0, 0));
    CHECK(sg.sigma_e2 > ex.model.S_v(0, 0));
  }
}

TEST_CASE("sensitivity_sweep: zero input gives zero sensitivities") {
  const auto adapter =
      make_lti_adapter("example1", {}, SensitivityProvider::AnalyticExample1);
  VectorXd theta(2);
  theta << 0.8, 0.2;
  const auto sweep = sensitivity_sweep(adapter, theta, InputSignal::zeros(30));
  CHECK(sweep.psi.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sensitivity_sweep: linear in the input") {
  const auto adapter =
      make_lti_adapter("dc_motor", {}, SensitivityProvider::AnalyticExample2);
  const VectorXd theta = VectorXd::Constant(1, 0.7);
  Rng rng(5);
  VectorXd u(40);
  for (int i = 0; i < 40; ++i) u[i] = rng.normal();
  const auto s1 = sensitivity_sweep(adapter, theta, InputSignal(40, 1, u));
  const auto s2 = sensitivity_sweep(adapter, theta, InputSignal(40, 1, VectorXd(2.0 * u)));
  CHECK((s2.psi - 2.0 * s1.psi).cwiseAbs().maxCoeff() <
        1e-10 * (1.0 + s1.psi.cwiseAbs().maxCoeff()));
}

TEST_CASE("sensitivity_sweep: analytic matches finite differences") {
  Rng rng(7);
  VectorXd u(50);
  for (int i = 0; i < 50; ++i) u[i] = rng.normal();
  const InputSignal sig(50, 1, u);

  {
    const auto analytic =
        make_lti_adapter("example1", {}, SensitivityProvider::AnalyticExample1);
    const auto fd =
        make_lti_adapter("example1", {}, SensitivityProvider::FiniteDifference);
    VectorXd theta(2);
    theta << 0.8, 0.2;
    const MatrixXd pa = sensitivity_sweep(analytic, theta, sig).psi;
    const MatrixXd pf = sensitivity_sweep(fd, theta, sig).psi;
    CHECK((pa - pf).cwiseAbs().maxCoeff() <=
          1e-4 * (1.0 + pa.cwiseAbs().maxCoeff()));
  }
  {
    const auto analytic =
        make_lti_adapter("dc_motor", {}, SensitivityProvider::AnalyticExample2);
    const auto fd =
        make_lti_adapter("dc_motor", {}, SensitivityProvider::FiniteDifference);
    const VectorXd theta = VectorXd::Constant(1, 1.0);
    const MatrixXd pa = sensitivity_sweep(analytic, theta, sig).psi;
    const MatrixXd pf = sensitivity_sweep(fd, theta, sig).psi;
    CHECK((pa - pf).cwiseAbs().maxCoeff() <=
          1e-4 * (1.0 + pa.cwiseAbs().maxCoeff()));
  }
  {
    const auto analytic = make_lti_adapter("atomic_oscillator", {},
                                           SensitivityProvider::AnalyticExample3);
    const auto fd = make_lti_adapter("atomic_oscillator", {},
                                     SensitivityProvider::FiniteDifference);
    const VectorXd theta = VectorXd::Constant(1, 54.6637);
    const MatrixXd pa = sensitivity_sweep(analytic, theta, sig).psi;
    const MatrixXd pf = sensitivity_sweep(fd, theta, sig).psi;
    CHECK((pa - pf).cwiseAbs().maxCoeff() <=
          1e-4 * (1.0 + pa.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("avg_d_optimal_criterion: zero input, scaling, two-node assembly") {
  const auto adapter =
      make_lti_adapter("dc_motor", {}, SensitivityProvider::AnalyticExample2);
  const auto dprior = gl_two_point(0.05, 2.0);

  CHECK(avg_d_optimal_criterion(adapter, dprior, InputSignal::zeros(25)) == 0.0);

  Rng rng(11);
  VectorXd u(25);
  for (int i = 0; i < 25; ++i) u[i] = rng.normal();
  const InputSignal sig(25, 1, u);
  const double q1 = avg_d_optimal_criterion(adapter, dprior, sig);
  CHECK(q1 >= 0.0);

  // scalar theta_G: Q(cU) = c^2 Q(U)
  const double q2 =
      avg_d_optimal_criterion(adapter, dprior, InputSignal(25, 1, VectorXd(3.0 * u)));
  CHECK(q2 == doctest::Approx(9.0 * q1).epsilon(1e-10));

  // average of the two single-node criteria
  DiscretePrior single1, single2;
  single1.nodes = {dprior.nodes[0]};
  single1.weights = VectorXd::Constant(1, 1.0);
  single2.nodes = {dprior.nodes[1]};
  single2.weights = VectorXd::Constant(1, 1.0);
  const double qa = avg_d_optimal_criterion(adapter, single1, sig);
  const double qb = avg_d_optimal_criterion(adapter, single2, sig);
  CHECK(q1 == doctest::Approx(0.5 * qa + 0.5 * qb).epsilon(1e-12));
}

TEST_CASE("avg_d_optimal_criterion: example1 two-parameter determinant") {
  const auto adapter =
      make_lti_adapter("example1", {}, SensitivityProvider::AnalyticExample1);
  DiscretePrior dprior;
  VectorXd n1(2), n2(2);
  n1 << 0.78, 0.18;
  n2 << 0.82, 0.22;
  dprior.nodes = {n1, n2};
  dprior.weights = VectorXd::Constant(2, 0.5);

  Rng rng(13);
  VectorXd u(30);
  for (int i = 0; i < 30; ++i) u[i] = rng.normal();
  const double q = avg_d_optimal_criterion(adapter, dprior, InputSignal(30, 1, u));
  CHECK(q >= 0.0);
  // scaling with n_theta_G = 2: c^{2*2}
  const double q2 = avg_d_optimal_criterion(adapter, dprior,
                                            InputSignal(30, 1, VectorXd(2.0 * u)));
  CHECK(q2 == doctest::Approx(16.0 * q).epsilon(1e-9));
}

TEST_CASE("make_lti_adapter: provider and example must match") {
  CHECK_THROWS_AS(
      make_lti_adapter("example1", {}, SensitivityProvider::AnalyticExample2),
      ConfigError);
  CHECK_THROWS_AS(
      make_lti_adapter("opm_reduced", {}, SensitivityProvider::FiniteDifference),
      ConfigError);
}
