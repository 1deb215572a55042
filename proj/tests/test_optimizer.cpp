#include "qld/optimizer.hpp"

#include "qld/example_models.hpp"
#include "qld/kalman.hpp"
#include "qld/rng.hpp"

#include <doctest.h>

#include <cmath>

#include "support/test_instances.hpp"

using namespace qld;
using namespace qld::testing;

namespace {

// theta scales the input gain only; covariances are input-independent, means are
// linear in U, so the closed-form eigenvector solution applies.
MixtureDesignProblem linear_two_alt_problem(std::uint64_t seed, int n, int N,
                                            double rho) {
  Rng rng(seed);
  const MatrixXd a0 = random_matrix(rng, n, n, 0.4 / n);
  const MatrixXd b0 = random_matrix(rng, n, 1, 1.0);
  const MatrixXd g0 = random_matrix(rng, n, 1, 0.3);
  const MatrixXd s0 = random_spd(rng, n, 0.2);
  const MatrixXd c = random_matrix(rng, 1, n, 1.0);

  QuasiLinearModel m;
  m.state_dim = n;
  m.noise_dim = 1;
  m.output_dim = 1;
  m.input_dim = 1;
  m.A = [a0](const VectorXd&, const VectorXd&) { return a0; };
  m.B = [b0](const VectorXd& th, const VectorXd& u) {
    return VectorXd(b0.col(0) * (th[0] * u[0]));
  };
  m.G = [g0](const VectorXd&, const VectorXd&) { return g0; };
  m.C = c;
  m.S_v = MatrixXd::Constant(1, 1, 0.5 + rng.uniform());
  m.m0 = [n](const VectorXd&) { return VectorXd::Zero(n); };
  m.S0 = [s0](const VectorXd&) { return s0; };

  MixtureDesignProblem p{m, DiscretePrior{}, N, SignalConstraint::ball_at_zero(N, rho),
                         true};
  p.dprior.nodes = {VectorXd::Constant(1, 0.4), VectorXd::Constant(1, 1.3)};
  p.dprior.weights = VectorXd::Constant(2, 0.5);
  return p;
}

// Dense input-to-mean map F_i (rows: stacked outputs, cols: input components).
MatrixXd dense_input_map(const QuasiLinearModel& m, const VectorXd& theta, int N) {
  const Eigen::Index rows = static_cast<Eigen::Index>(N + 1) * m.output_dim;
  MatrixXd f(rows, N);
  for (int j = 0; j < N; ++j) {
    VectorXd e = VectorXd::Zero(N);
    e[j] = 1.0;
    const auto mom = dense_moments(m, theta, InputSignal(N, 1, e));
    VectorXd zero_resp =
        dense_moments(m, theta, InputSignal::zeros(N)).F;
    f.col(j) = mom.F - zero_resp;
  }
  return f;
}

}  // namespace

TEST_CASE("project: ball and box") {
  const auto ball = SignalConstraint::ball_at_zero(3, 2.0);
  VectorXd inside(3);
  inside << 0.5, -0.5, 1.0;
  CHECK((project(inside, ball) - inside).norm() == 0.0);

  VectorXd outside = VectorXd::Constant(3, 4.0);
  const VectorXd proj = project(outside, ball);
  CHECK(proj.norm() == doctest::Approx(2.0).epsilon(1e-12));

  const auto box = SignalConstraint::box_uniform(3, -1.0, 1.0);
  VectorXd mixed(3);
  mixed << -3.0, 0.2, 7.0;
  const VectorXd clamped = project(mixed, box);
  CHECK(clamped[0] == -1.0);
  CHECK(clamped[1] == 0.2);
  CHECK(clamped[2] == 1.0);
  CHECK((project(clamped, box) - clamped).norm() == 0.0);  // idempotent
}

TEST_CASE("maximize_objective: interior optimum of a concave quadratic") {
  VectorXd target(4);
  target << 0.3, -0.2, 0.5, 0.0;
  const auto box = SignalConstraint::box_uniform(4, -1.0, 1.0);
  DesignOptions opt;
  opt.max_iters = 300;
  opt.tol = 1e-12;
  opt.seed = 3;
  const auto res = maximize_objective(
      [&](const VectorXd& u) { return -(u - target).squaredNorm(); }, 4, box, opt);
  CHECK((res.u_star.values - target).cwiseAbs().maxCoeff() < 1e-5);
  CHECK(res.objective_value > -1e-9);

  // ascent and feasibility invariants
  for (std::size_t i = 1; i < res.trace.size(); ++i)
    CHECK(res.trace[i].value >= res.trace[i - 1].value);
  CHECK(box.contains(res.u_star.values, 1e-9));
}

TEST_CASE("maximize_objective: deterministic for fixed seed") {
  const auto ball = SignalConstraint::ball_at_zero(6, 1.5);
  Rng rng(9);
  const MatrixXd q = random_spd(rng, 6, 0.1);
  auto objective = [&](const VectorXd& u) { return u.dot(q * u); };
  DesignOptions opt;
  opt.seed = 11;
  opt.max_iters = 120;
  const auto a = maximize_objective(objective, 6, ball, opt);
  const auto b = maximize_objective(objective, 6, ball, opt);
  CHECK(a.objective_value == b.objective_value);
  CHECK((a.u_star.values - b.u_star.values).norm() == 0.0);
}

TEST_CASE("eigen_solution_linear_two_alt: rank-one and isotropic cases") {
  // F1 - F2 = e_1 row, S1 + S2 = 2 I -> U* = +- rho e_1
  const int dim = 5;
  MatrixXd f1 = MatrixXd::Zero(1, dim), f2 = MatrixXd::Zero(1, dim);
  f1(0, 0) = 1.0;
  const MatrixXd s = MatrixXd::Identity(1, 1);
  const auto u = eigen_solution_linear_two_alt(f1, f2, s, s, 2.0);
  CHECK(std::abs(u.values[0]) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(u.values[0] > 0.0);  // sign convention
  CHECK(u.values.tail(dim - 1).cwiseAbs().maxCoeff() < 1e-12);

  // general case: the attained quadratic value equals rho^2 * lambda_max(Q),
  // so the distance's quadratic term is (1/8) rho^2 lambda_max of the
  // half-sum-normalized matrix
  Rng rng(21);
  const MatrixXd f = random_matrix(rng, 4, 4, 1.0);
  const MatrixXd s1 = random_spd(rng, 4, 0.3);
  const double rho = 1.7;
  const auto sol = eigen_solution_linear_two_alt(f, MatrixXd::Zero(4, 4), s1, s1, rho);
  Eigen::LLT<MatrixXd> llt(MatrixXd(2.0 * s1));
  const MatrixXd q = f.transpose() * llt.solve(f);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(q);
  const VectorXd delta = f * sol.values;
  const double attained = delta.dot(llt.solve(delta));
  CHECK(attained ==
        doctest::Approx(rho * rho * es.eigenvalues().maxCoeff()).epsilon(1e-10));
  const double quad_term = 0.125 * delta.dot(Eigen::LLT<MatrixXd>(s1).solve(delta));
  const MatrixXd q_half = f.transpose() * Eigen::LLT<MatrixXd>(s1).solve(f);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es_half(q_half);
  CHECK(quad_term == doctest::Approx(0.125 * rho * rho *
                                     es_half.eigenvalues().maxCoeff())
                         .epsilon(1e-10));
}

TEST_CASE("eigen_solution_linear_two_alt: beats random feasible signals") {
  Rng rng(33);
  for (int trial = 0; trial < 5; ++trial) {
    const int dim = 3 + trial;
    const MatrixXd f1 = random_matrix(rng, dim + 2, dim, 1.0);
    const MatrixXd f2 = random_matrix(rng, dim + 2, dim, 1.0);
    const MatrixXd s1 = random_spd(rng, dim + 2, 0.4);
    const MatrixXd s2 = random_spd(rng, dim + 2, 0.4);
    const double rho = 0.5 + rng.uniform();
    const auto u_star = eigen_solution_linear_two_alt(f1, f2, s1, s2, rho);

    Eigen::LLT<MatrixXd> llt(MatrixXd(s1 + s2));
    auto value = [&](const VectorXd& u) {
      const VectorXd d = (f1 - f2) * u;
      return d.dot(llt.solve(d));
    };
    const double best = value(u_star.values);
    for (int k = 0; k < 1000; ++k) {
      VectorXd u = rng.normal_vec(dim);
      u *= rho * rng.uniform() / u.norm();
      CHECK(value(u) <= best * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("optimize_signal: matches the closed form on a linear two-alt problem") {
  auto p = linear_two_alt_problem(57, 2, 8, 1.3);
  DesignOptions opt;
  opt.objective = DesignObjective::TwoAlt;
  opt.max_iters = 2000;
  opt.tol = 1e-13;
  opt.multi_starts = 4;
  opt.seed = 5;
  const auto res = optimize_signal(p, opt);

  const MatrixXd f1 = dense_input_map(p.model, p.dprior.nodes[0], p.horizon);
  const MatrixXd f2 = dense_input_map(p.model, p.dprior.nodes[1], p.horizon);
  const auto mom = dense_moments(p.model, p.dprior.nodes[0], InputSignal::zeros(8));
  const auto mom2 = dense_moments(p.model, p.dprior.nodes[1], InputSignal::zeros(8));
  const auto u_eig =
      eigen_solution_linear_two_alt(f1, f2, mom.S, mom2.S, p.constraint.radius);
  const double v_eig = two_alt_objective(p, u_eig);

  CHECK(res.objective_value >= (1.0 - 1e-6) * v_eig);
  CHECK(std::abs(res.u_star.values.norm() - p.constraint.radius) < 1e-6);
  CHECK(p.constraint.contains(res.u_star.values, 1e-9));
}

TEST_CASE("optimize_signal: objective value nondecreasing in the ball radius") {
  const auto ex = make_example("example1");
  const int N = 12;
  double prev = -1e300;
  for (double rho : {0.5, 1.0, 2.0, 4.0}) {
    MixtureDesignProblem p{ex.model, gh_sigma_nodes(ex.prior.mean, ex.prior.cov), N,
                           SignalConstraint::ball_at_zero(N, rho), true};
    DesignOptions opt;
    opt.objective = DesignObjective::KtBound;
    opt.max_iters = 150;
    opt.seed = 71;
    const auto res = optimize_signal(p, opt);
    CHECK(res.objective_value >= prev - 1e-9);
    prev = res.objective_value;
  }
}

TEST_CASE("signal shaping helpers respect constraints") {
  const auto ball = SignalConstraint::ball_at_zero(10, 2.0);
  const auto c = constant_signal(10, 1, ball);
  CHECK(c.values.norm() == doctest::Approx(2.0).epsilon(1e-12));
  const auto h = harmonic_signal(10, 1, 0.7, 1.0, ball);
  CHECK(h.values.norm() == doctest::Approx(2.0).epsilon(1e-9));

  const auto box = SignalConstraint::box_uniform(10, 0.0, 4.0);
  const auto hb = harmonic_signal(10, 1, 0.7, 1.0, box);
  CHECK(hb.values.minCoeff() >= 0.0);
  CHECK(hb.values.maxCoeff() <= 4.0);
  CHECK(hb.values[0] == doctest::Approx(4.0).epsilon(1e-12));  // cos(0) = 1
}
