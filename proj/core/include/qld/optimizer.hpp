#pragma once

#include "qld/info_bounds.hpp"
#include "qld/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace qld {

struct LtiSisoAdapter;  // classical.hpp

enum class DesignObjective { KtBound, TwoAlt, AvgDOptimal };

enum class InitStrategy { ZeroProjected, ConstantScale, Harmonic, RandomFeasible };

struct DesignOptions {
  DesignObjective objective = DesignObjective::KtBound;
  int max_iters = 200;
  double fd_step_rel = 1e-4;  // central-difference step = fd_step_rel * max(1, |U|_inf)
  double tol = 1e-7;          // relative objective change at an accepted iterate
  int multi_starts = 4;
  std::vector<InitStrategy> inits;  // empty -> zero, constant, harmonic?, random...
  std::uint64_t seed = 0;
  std::optional<double> harmonic_freq;  // angular frequency for harmonic starts
  double dt = 1.0;
};

struct TracePoint {
  int iter = 0;
  double value = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
};

struct DesignResult {
  InputSignal u_star;
  double objective_value = 0.0;
  std::vector<TracePoint> trace;  // of the best start
  // Fraction of components within 1e-6 of a box bound, or |U - center|/radius
  // for ball constraints.
  double boundary_fraction = 0.0;
  double radius_utilization = 0.0;
  double wall_time_s = 0.0;
  int best_start = 0;
};

VectorXd project(const VectorXd& u, const SignalConstraint& constraint);
InputSignal project(const InputSignal& u, const SignalConstraint& constraint);

// Candidate signals shaped to the constraint set.
InputSignal constant_signal(int horizon, int input_dim, const SignalConstraint& c);
InputSignal harmonic_signal(int horizon, int input_dim, double omega, double dt,
                            const SignalConstraint& c);

// Projected gradient ascent on an arbitrary objective; multi-start, adaptive
// step, deterministic for a fixed seed.
DesignResult maximize_objective(const std::function<double(const VectorXd&)>& objective,
                                int dim, const SignalConstraint& constraint,
                                const DesignOptions& options);

// Dispatch on options.objective; AvgDOptimal requires an adapter.
DesignResult optimize_signal(const MixtureDesignProblem& problem,
                             const DesignOptions& options,
                             const LtiSisoAdapter* adapter = nullptr);

// Closed-form optimum for F(theta_i, U) = F_i U with input-independent SPD
// covariances and a centered ball constraint: rho times the top eigenvector of
// (F1 - F2)^T (S1 + S2)^{-1} (F1 - F2). Sign fixed so the first nonzero
// component is positive.
InputSignal eigen_solution_linear_two_alt(const MatrixXd& F1, const MatrixXd& F2,
                                          const MatrixXd& S1, const MatrixXd& S2,
                                          double rho);

}  // namespace qld
