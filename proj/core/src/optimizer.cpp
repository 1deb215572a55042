#include "qld/optimizer.hpp"

#include "qld/classical.hpp"
#include "qld/parallel.hpp"
#include "qld/rng.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <string>

namespace qld {

VectorXd project(const VectorXd& u, const SignalConstraint& c) {
  if (u.size() != c.dim()) throw ConfigError("project: dimension mismatch");
  if (c.kind == SignalConstraint::Kind::Ball) {
    const VectorXd d = u - c.center;
    const double norm = d.norm();
    if (norm <= c.radius) return u;
    return c.center + d * (c.radius / norm);
  }
  return u.cwiseMax(c.lower).cwiseMin(c.upper);
}

InputSignal project(const InputSignal& u, const SignalConstraint& c) {
  return InputSignal(u.horizon, u.input_dim, project(u.values, c));
}

InputSignal constant_signal(int horizon, int input_dim, const SignalConstraint& c) {
  const int dim = horizon * input_dim;
  if (c.dim() != dim) throw ConfigError("constant_signal: constraint dimension mismatch");
  if (c.kind == SignalConstraint::Kind::Ball) {
    VectorXd u = VectorXd::Ones(dim) * (c.radius / std::sqrt(static_cast<double>(dim)));
    return InputSignal(horizon, input_dim, project(VectorXd(c.center + u), c));
  }
  return InputSignal(horizon, input_dim, c.upper);
}

InputSignal harmonic_signal(int horizon, int input_dim, double omega, double dt,
                            const SignalConstraint& c) {
  const int dim = horizon * input_dim;
  if (c.dim() != dim) throw ConfigError("harmonic_signal: constraint dimension mismatch");
  VectorXd wave(dim);
  for (int k = 0; k < horizon; ++k) {
    const double v = std::cos(omega * dt * k);
    for (int i = 0; i < input_dim; ++i) wave[k * input_dim + i] = v;
  }
  if (c.kind == SignalConstraint::Kind::Ball) {
    const double norm = wave.norm();
    if (norm > 0) wave *= c.radius / norm;
    return InputSignal(horizon, input_dim, project(VectorXd(c.center + wave), c));
  }
  // Box: u = lower + (upper - lower)/2 * (1 + cos), e.g. 0.5*u_max*(1 + cos) on [0, u_max].
  VectorXd u = c.lower + 0.5 * (c.upper - c.lower).cwiseProduct(VectorXd::Ones(dim) + wave);
  return InputSignal(horizon, input_dim, project(u, c));
}

namespace {

VectorXd initial_point(InitStrategy strategy, const SignalConstraint& c, int horizon,
                       int input_dim, const DesignOptions& opt, std::uint64_t seed) {
  const int dim = c.dim();
  switch (strategy) {
    case InitStrategy::ZeroProjected:
      return project(VectorXd::Zero(dim), c);
    case InitStrategy::ConstantScale:
      return constant_signal(horizon, input_dim, c).values;
    case InitStrategy::Harmonic: {
      const double omega = opt.harmonic_freq.value_or(0.0);
      if (omega == 0.0) return project(VectorXd::Zero(dim), c);
      return harmonic_signal(horizon, input_dim, omega, opt.dt, c).values;
    }
    case InitStrategy::RandomFeasible: {
      Rng rng(seed);
      if (c.kind == SignalConstraint::Kind::Ball) {
        VectorXd z = rng.normal_vec(dim);
        const double norm = z.norm();
        if (norm > 0) z *= c.radius * rng.uniform() / norm;
        return c.center + z;
      }
      VectorXd u(dim);
      for (int i = 0; i < dim; ++i)
        u[i] = c.lower[i] + (c.upper[i] - c.lower[i]) * rng.uniform();
      return u;
    }
  }
  throw ConfigError("initial_point: invalid strategy");
}

std::vector<InitStrategy> default_inits(const DesignOptions& opt) {
  std::vector<InitStrategy> inits{InitStrategy::ZeroProjected,
                                  InitStrategy::ConstantScale};
  if (opt.harmonic_freq) inits.push_back(InitStrategy::Harmonic);
  while (static_cast<int>(inits.size()) < opt.multi_starts)
    inits.push_back(InitStrategy::RandomFeasible);
  inits.resize(opt.multi_starts);
  return inits;
}

struct StartOutcome {
  VectorXd u;
  double value = -std::numeric_limits<double>::infinity();
  std::vector<TracePoint> trace;
};

StartOutcome run_start(const std::function<double(const VectorXd&)>& objective,
                       const SignalConstraint& c, VectorXd u,
                       const DesignOptions& opt) {
  const int dim = static_cast<int>(u.size());
  StartOutcome out;

  double value = objective(u);
  if (!std::isfinite(value))
    throw NumericalError("optimize_signal: objective not finite at the initial point");
  out.trace.push_back({0, value, 0.0, 0.0});

  double step = 0.0;  // set from the first gradient
  VectorXd grad(dim), trial(dim);

  for (int iter = 1; iter <= opt.max_iters; ++iter) {
    const double h = opt.fd_step_rel * std::max(1.0, u.lpNorm<Eigen::Infinity>());
    std::vector<double> plus(dim), minus(dim);
    parallel_for(static_cast<std::size_t>(2 * dim), [&](std::size_t idx) {
      const int i = static_cast<int>(idx / 2);
      VectorXd v = u;
      if (idx % 2 == 0) {
        v[i] += h;
        plus[i] = objective(v);
      } else {
        v[i] -= h;
        minus[i] = objective(v);
      }
    });
    for (int i = 0; i < dim; ++i) {
      grad[i] = (plus[i] - minus[i]) / (2.0 * h);
      if (!std::isfinite(grad[i]))
        throw NumericalError("optimize_signal: non-finite gradient component " +
                             std::to_string(i));
    }
    const double gnorm = grad.norm();
    if (gnorm == 0.0) break;
    if (step == 0.0) step = 0.5 * c.scale() / gnorm;

    bool accepted = false;
    double trial_value = value;
    for (int bt = 0; bt < 60; ++bt) {
      trial = project(VectorXd(u + step * grad), c);
      trial_value = objective(trial);
      if (trial_value > value) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no ascent direction at this scale

    const double rel_change = (trial_value - value) / std::max(1.0, std::abs(trial_value));
    u = trial;
    value = trial_value;
    out.trace.push_back({iter, value, gnorm, step});
    step *= 1.3;
    if (rel_change < opt.tol) break;
  }

  out.u = u;
  out.value = value;
  return out;
}

}  // namespace

DesignResult maximize_objective(const std::function<double(const VectorXd&)>& objective,
                                int dim, const SignalConstraint& constraint,
                                const DesignOptions& options) {
  if (constraint.dim() != dim)
    throw ConfigError("maximize_objective: constraint dimension mismatch");
  const auto t0 = std::chrono::steady_clock::now();

  const int input_dim = 1;  // stacked coordinates; shaping only matters for inits
  const int horizon = dim;
  auto inits = options.inits.empty() ? default_inits(options) : options.inits;
  if (inits.empty()) throw ConfigError("maximize_objective: no initialization strategies");

  std::vector<StartOutcome> outcomes(inits.size());
  for (std::size_t s = 0; s < inits.size(); ++s) {
    const VectorXd u0 = initial_point(inits[s], constraint, horizon, input_dim, options,
                                      derive_seed(options.seed, 0xD0 + s));
    outcomes[s] = run_start(objective, constraint, u0, options);
  }

  std::size_t best = 0;
  for (std::size_t s = 1; s < outcomes.size(); ++s)
    if (outcomes[s].value > outcomes[best].value) best = s;

  DesignResult result;
  result.best_start = static_cast<int>(best);
  result.objective_value = outcomes[best].value;
  result.trace = std::move(outcomes[best].trace);
  result.u_star = InputSignal(horizon, input_dim, outcomes[best].u);

  if (constraint.kind == SignalConstraint::Kind::Box) {
    int active = 0;
    for (int i = 0; i < dim; ++i) {
      const double v = outcomes[best].u[i];
      if (v - constraint.lower[i] <= 1e-6 || constraint.upper[i] - v <= 1e-6) ++active;
    }
    result.boundary_fraction = static_cast<double>(active) / dim;
    result.radius_utilization = 0.0;
  } else {
    result.radius_utilization =
        (outcomes[best].u - constraint.center).norm() / constraint.radius;
    result.boundary_fraction = result.radius_utilization >= 1.0 - 1e-6 ? 1.0 : 0.0;
  }
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

DesignResult optimize_signal(const MixtureDesignProblem& problem,
                             const DesignOptions& options,
                             const LtiSisoAdapter* adapter) {
  const int dim = problem.horizon * problem.model.input_dim;
  if (problem.constraint.dim() != dim)
    throw ConfigError("optimize_signal: constraint dimension != horizon * input_dim");

  std::function<double(const VectorXd&)> objective;
  switch (options.objective) {
    case DesignObjective::KtBound:
      objective = [&problem](const VectorXd& v) {
        return kt_lower_bound(problem,
                              InputSignal(problem.horizon, problem.model.input_dim, v))
            .I_l;
      };
      break;
    case DesignObjective::TwoAlt:
      if (problem.dprior.size() != 2)
        throw ConfigError("optimize_signal: two_alt objective requires two prior nodes");
      objective = [&problem](const VectorXd& v) {
        return two_alt_objective(
            problem, InputSignal(problem.horizon, problem.model.input_dim, v));
      };
      break;
    case DesignObjective::AvgDOptimal:
      if (!adapter)
        throw ConfigError("optimize_signal: avg_d_optimal requires an LTI-SISO adapter");
      objective = [&problem, adapter](const VectorXd& v) {
        return avg_d_optimal_criterion(
            *adapter, problem.dprior,
            InputSignal(problem.horizon, problem.model.input_dim, v));
      };
      break;
  }

  auto result = maximize_objective(objective, dim, problem.constraint, options);
  result.u_star = InputSignal(problem.horizon, problem.model.input_dim,
                              result.u_star.values);
  return result;
}

InputSignal eigen_solution_linear_two_alt(const MatrixXd& F1, const MatrixXd& F2,
                                          const MatrixXd& S1, const MatrixXd& S2,
                                          double rho) {
  if (rho <= 0) throw ConfigError("eigen_solution_linear_two_alt: rho must be > 0");
  if (F1.rows() != F2.rows() || F1.cols() != F2.cols())
    throw ConfigError("eigen_solution_linear_two_alt: F shape mismatch");

  const MatrixXd diff = F1 - F2;
  Eigen::LLT<MatrixXd> llt(S1 + S2);
  if (llt.info() != Eigen::Success)
    throw NumericalError("eigen_solution_linear_two_alt: S1 + S2 not SPD");
  const MatrixXd q = diff.transpose() * llt.solve(diff);

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(q);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigen_solution_linear_two_alt: eigensolver failed");
  VectorXd v = es.eigenvectors().col(q.cols() - 1);  // largest eigenvalue

  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0) v = -v;
      break;
    }
  }
  return InputSignal(static_cast<int>(v.size()), 1, VectorXd(rho * v));
}

}  // namespace qld
