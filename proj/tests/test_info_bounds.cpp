#include "qld/info_bounds.hpp"
#include "qld/kalman.hpp"
#include "qld/rng.hpp"

#include <doctest.h>

#include <cmath>

#include "support/test_instances.hpp"

using namespace qld;
using namespace qld::testing;

namespace {

MixtureDesignProblem tiny_problem(std::uint64_t seed, int n, int ny, int N,
                                  double separation) {
  auto inst = random_instance(seed, n, ny, N);
  MixtureDesignProblem p{inst.model,
                         DiscretePrior{},
                         N,
                         SignalConstraint::ball_at_zero(N, 10.0),
                         false};
  p.dprior.nodes = {inst.theta, VectorXd(inst.theta.array() + separation)};
  p.dprior.weights = VectorXd::Constant(2, 0.5);
  return p;
}

InputSignal signal_of(const MixtureDesignProblem& p, std::uint64_t seed) {
  Rng rng(seed);
  VectorXd v(p.horizon);
  for (int i = 0; i < p.horizon; ++i) v[i] = rng.normal();
  return InputSignal(p.horizon, 1, v);
}

}  // namespace

TEST_CASE("prior_entropy: closed forms") {
  CHECK(prior_entropy((VectorXd(2) << 0.5, 0.5).finished()) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(prior_entropy((VectorXd(2) << 1.0, 0.0).finished()) == 0.0);
  const int r = 7;
  CHECK(prior_entropy(VectorXd::Constant(r, 1.0 / r)) ==
        doctest::Approx(std::log(static_cast<double>(r))).epsilon(1e-12));
}

TEST_CASE("itb_floor: substitution, identity, monotonicity") {
  CHECK(itb_floor(1.7, 1.7, 1) ==
        doctest::Approx(1.0 / (2.0 * M_PI * M_E)).epsilon(1e-12));
  // algebraic identity: floor * 2 pi e / n = exp(2 (H - I) / n)
  for (double h : {0.3, 1.0, 2.5})
    for (double i : {0.0, 0.2, 0.9})
      for (int n : {1, 2, 3})
        CHECK(itb_floor(h, i, n) * 2.0 * M_PI * M_E / n ==
              doctest::Approx(std::exp(2.0 * (h - i) / n)).epsilon(1e-12));
  CHECK(itb_floor(1.0, 0.5, 1) > itb_floor(1.0, 0.6, 1));
}

TEST_CASE("kt_lower_bound: single component gives zero information") {
  auto p = tiny_problem(1, 1, 1, 3, 0.4);
  p.dprior.nodes.resize(1);
  p.dprior.weights = VectorXd::Constant(1, 1.0);
  const auto rep = kt_lower_bound(p, signal_of(p, 2));
  CHECK(rep.I_l == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(rep.H_theta == 0.0);
  CHECK(rep.pair_distances(0, 0) == 0.0);
}

TEST_CASE("kt_lower_bound: saturates at H_theta for far-apart components") {
  // Engineered distance of ~500 nats: static scalar model, huge mean separation.
  QuasiLinearModel m;
  m.state_dim = 1;
  m.noise_dim = 1;
  m.output_dim = 1;
  m.input_dim = 1;
  m.A = [](const VectorXd&, const VectorXd&) { return MatrixXd::Zero(1, 1); };
  m.B = [](const VectorXd& th, const VectorXd&) { return VectorXd::Constant(1, th[0]); };
  m.G = [](const VectorXd&, const VectorXd&) { return MatrixXd::Zero(1, 1); };
  m.C = MatrixXd::Identity(1, 1);
  m.S_v = MatrixXd::Identity(1, 1);
  m.m0 = [](const VectorXd& th) { return VectorXd::Constant(1, th[0]); };
  m.S0 = [](const VectorXd&) { return MatrixXd::Constant(1, 1, 1e-6); };

  MixtureDesignProblem p{m, DiscretePrior{}, 2, SignalConstraint::ball_at_zero(2, 1.0),
                         false};
  // d ~ (1/8) * sum_k delta^2 / 1; delta = 2000/sqrt(3) per step over 3 steps -> 1e6/2
  const double delta = std::sqrt(500.0 * 8.0 / 3.0);
  p.dprior.nodes = {VectorXd::Zero(1), VectorXd::Constant(1, delta)};
  p.dprior.weights = VectorXd::Constant(2, 0.5);

  const auto rep = kt_lower_bound(p, InputSignal::zeros(2));
  CHECK(rep.pair_distances(0, 1) > 400.0);
  CHECK(std::isfinite(rep.I_l));
  CHECK(rep.I_l == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(rep.I_l <= rep.H_theta + 1e-9);
}

TEST_CASE("kt_lower_bound: invariant under node permutation, sandwiched by H") {
  auto p = tiny_problem(5, 2, 1, 4, 0.3);
  const auto u = signal_of(p, 7);
  const auto rep = kt_lower_bound(p, u);
  CHECK(rep.I_l >= 0.0);
  CHECK(rep.I_l <= rep.H_theta + 1e-9);
  CHECK(rep.pair_distances(0, 1) == rep.pair_distances(1, 0));
  CHECK(rep.pair_distances(0, 0) == 0.0);

  MixtureDesignProblem swapped = p;
  std::swap(swapped.dprior.nodes[0], swapped.dprior.nodes[1]);
  const auto rep2 = kt_lower_bound(swapped, u);
  CHECK(rep.I_l == doctest::Approx(rep2.I_l).epsilon(1e-13));
}

TEST_CASE("two_alt_objective: consistency with the two-component bound") {
  auto p = tiny_problem(11, 2, 1, 5, 0.25);
  const auto u = signal_of(p, 13);
  const double d12 = two_alt_objective(p, u);
  const double i_l = two_alt_bound_from_distance(d12, 0.5, 0.5);
  const auto rep = kt_lower_bound(p, u);
  CHECK(i_l == doctest::Approx(rep.I_l).epsilon(1e-10));

  // exp(-I_l) = (p1 + p2 e^-d)^p1 (p1 e^-d + p2)^p2
  const double lhs = std::exp(-i_l);
  const double rhs = std::pow(0.5 + 0.5 * std::exp(-d12), 0.5) *
                     std::pow(0.5 * std::exp(-d12) + 0.5, 0.5);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

  auto p3 = p;
  p3.dprior.nodes.push_back(VectorXd(p.dprior.nodes[0].array() + 0.5));
  p3.dprior.weights = VectorXd::Constant(3, 1.0 / 3.0);
  CHECK_THROWS_AS(two_alt_objective(p3, u), ConfigError);
}

TEST_CASE("two_alt_objective: no excitation, identical output laws") {
  // theta enters only the input gain; with U = 0 the two nodes are identical.
  QuasiLinearModel m;
  m.state_dim = 1;
  m.noise_dim = 1;
  m.output_dim = 1;
  m.input_dim = 1;
  m.A = [](const VectorXd&, const VectorXd&) { return MatrixXd::Constant(1, 1, 0.8); };
  m.B = [](const VectorXd& th, const VectorXd& u) {
    return VectorXd::Constant(1, th[0] * u[0]);
  };
  m.G = [](const VectorXd&, const VectorXd&) { return MatrixXd::Constant(1, 1, 0.1); };
  m.C = MatrixXd::Identity(1, 1);
  m.S_v = MatrixXd::Constant(1, 1, 0.01);
  m.m0 = [](const VectorXd&) { return VectorXd::Zero(1); };
  m.S0 = [](const VectorXd&) { return MatrixXd::Constant(1, 1, 0.01); };

  MixtureDesignProblem p{m, DiscretePrior{}, 6, SignalConstraint::ball_at_zero(6, 1.0),
                         true};
  p.dprior.nodes = {VectorXd::Constant(1, 0.1), VectorXd::Constant(1, 0.9)};
  p.dprior.weights = VectorXd::Constant(2, 0.5);
  CHECK(two_alt_objective(p, InputSignal::zeros(6)) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cond_entropy_Y_given_theta: closed form and invariances") {
  // r = 1, n = 1, N = 0, S = s -> (1/2) ln(2 pi e s)
  QuasiLinearModel m;
  m.state_dim = 1;
  m.noise_dim = 1;
  m.output_dim = 1;
  m.input_dim = 1;
  m.A = [](const VectorXd&, const VectorXd&) { return MatrixXd::Zero(1, 1); };
  m.B = [](const VectorXd&, const VectorXd&) { return VectorXd::Zero(1); };
  m.G = [](const VectorXd&, const VectorXd&) { return MatrixXd::Zero(1, 1); };
  m.C = MatrixXd::Identity(1, 1);
  m.S_v = MatrixXd::Constant(1, 1, 0.7);
  m.m0 = [](const VectorXd&) { return VectorXd::Zero(1); };
  m.S0 = [](const VectorXd&) { return MatrixXd::Constant(1, 1, 0.5); };
  MixtureDesignProblem p{m, DiscretePrior{}, 0, SignalConstraint::ball_at_zero(0, 1.0)
                                                    ,
                         false};
  p.constraint.center = VectorXd::Zero(0);
  p.dprior.nodes = {VectorXd::Zero(1)};
  p.dprior.weights = VectorXd::Constant(1, 1.0);
  const double s = 1.2;  // S0 + Sv
  CHECK(cond_entropy_Y_given_theta(p, InputSignal::zeros(0)) ==
        doctest::Approx(0.5 * std::log(2.0 * M_PI * M_E * s)).epsilon(1e-12));

  // matches the Gaussian entropy average computed densely; permutation invariant
  auto tp = tiny_problem(23, 2, 1, 4, 0.3);
  const auto u = signal_of(tp, 29);
  double dense_avg = 0.0;
  for (int j = 0; j < tp.dprior.size(); ++j) {
    const auto mom = dense_moments(tp.model, tp.dprior.nodes[j], u);
    const double ny_total = static_cast<double>(mom.F.size());
    dense_avg += tp.dprior.weights[j] * 0.5 *
                 (ny_total * std::log(2.0 * M_PI * M_E) + dense_log_det(mom.S));
  }
  const double h = cond_entropy_Y_given_theta(tp, u);
  CHECK(h == doctest::Approx(dense_avg).epsilon(1e-8));

  auto swapped = tp;
  std::swap(swapped.dprior.nodes[0], swapped.dprior.nodes[1]);
  CHECK(cond_entropy_Y_given_theta(swapped, u) == doctest::Approx(h).epsilon(1e-13));
}

TEST_CASE("mi_monte_carlo: constant parameter, perfect separation, sandwich") {
  auto single = tiny_problem(31, 1, 1, 3, 0.4);
  single.dprior.nodes.resize(1);
  single.dprior.weights = VectorXd::Constant(1, 1.0);
  const auto u1 = signal_of(single, 33);
  const auto mc1 = mi_monte_carlo(single, u1, 4000, 97);
  CHECK(std::abs(mc1.estimate) <= 3.0 * std::max(mc1.stderr_, 1e-12));

  auto far = tiny_problem(37, 1, 1, 3, 60.0);
  const auto u2 = signal_of(far, 39);
  const auto rep = kt_lower_bound(far, u2);
  if (rep.pair_distances(0, 1) > 20.0) {
    const auto mc2 = mi_monte_carlo(far, u2, 4000, 101);
    CHECK(std::abs(mc2.estimate - std::log(2.0)) <= 3.0 * mc2.stderr_ + 1e-6);
  }

  for (int trial = 0; trial < 4; ++trial) {
    auto p = tiny_problem(41 + trial, 1 + trial % 2, 1, 3, 0.2 + 0.1 * trial);
    const auto u = signal_of(p, 50 + trial);
    const auto mc = mi_monte_carlo(p, u, 20000, 200 + trial);
    const auto b = kt_lower_bound(p, u);
    CHECK(b.I_l <= mc.estimate + 3.0 * mc.stderr_ + 1e-9);
    CHECK(mc.estimate <= b.H_theta + 3.0 * mc.stderr_ + 1e-9);
  }

  CHECK_THROWS_AS(mi_monte_carlo(tiny_problem(1, 1, 1, 40, 0.1),
                                 InputSignal::zeros(40), 100, 1),
                  ConfigError);
}

TEST_CASE("itb_bcrb_gap_demo: smoothed-uniform prior") {
  const auto rep = itb_bcrb_gap_demo(100.0, 2001);
  CHECK(rep.j_d == 1.0);
  CHECK(rep.jp_lower_bound_holds);
  CHECK(rep.j_p >= 100.0 / (2.0 * std::sqrt(M_PI)));
  CHECK(rep.bcrb_floor < rep.itb_floor);
  CHECK(rep.itb_floor / rep.bcrb_floor > 2.0);

  // widening smoothing shrinks bcrb relative to itb
  double prev_ratio = 1e300;
  for (double alpha : {1.0, 10.0, 100.0, 1000.0}) {
    const auto r = itb_bcrb_gap_demo(alpha, 2001);
    const double ratio = r.bcrb_floor / r.itb_floor;
    CHECK(ratio < prev_ratio);
    prev_ratio = ratio;
  }
}

TEST_CASE("itb_bcrb_gap_demo: Gaussian variant floors coincide") {
  for (double s2 : {0.25, 1.0, 4.0}) {
    const auto rep = itb_bcrb_gap_gaussian_prior(s2, 8001);
    CHECK(std::abs(rep.itb_floor - rep.bcrb_floor) < 1e-9);
    CHECK(rep.bcrb_floor == doctest::Approx(s2 / (s2 + 1.0)).epsilon(1e-9));
  }
}

TEST_CASE("itb_bcrb_gap_demo: coarse grid fails the self-check") {
  CHECK_THROWS_AS(itb_bcrb_gap_demo(10000.0, 15), NumericalError);
}
