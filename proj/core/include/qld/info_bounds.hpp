#pragma once

#include "qld/quadrature.hpp"
#include "qld/types.hpp"

#include <cstdint>

namespace qld {

// Everything the bound machinery needs: a model, a discretized prior, a horizon,
// the admissible signal set. input_independent_cov enables the reduced pairwise
// distance (quadratic term only) for models whose G and S0 do not depend on the
// input; it is an explicit caller statement, never auto-detected.
struct MixtureDesignProblem {
  QuasiLinearModel model;
  DiscretePrior dprior;
  int horizon = 1;
  SignalConstraint constraint;
  bool input_independent_cov = false;
};

struct BoundReport {
  double I_l = 0.0;             // nats
  double H_theta = 0.0;         // nats
  MatrixXd pair_distances;      // r x r, nats
  double itb_floor = 0.0;       // squared-error units, using I = I_l
  int n_theta = 0;
  bool constraint_ok = true;
};

// Mixture mutual-information lower bound evaluated in the log domain, so large
// pairwise distances saturate at H_theta instead of under/overflowing.
BoundReport kt_lower_bound(const MixtureDesignProblem& problem, const InputSignal& u);

// d_12 for two-node priors; monotone surrogate for I_l.
double two_alt_objective(const MixtureDesignProblem& problem, const InputSignal& u);

// I_l reconstructed from a two-alternative distance.
double two_alt_bound_from_distance(double d12, double p1, double p2);

double prior_entropy(const VectorXd& weights);

// Minimum achievable mean squared estimation error given mutual information I:
// n/(2 pi e) * exp(2 (H - I) / n).
double itb_floor(double H_theta, double info, int n_theta);

double cond_entropy_Y_given_theta(const MixtureDesignProblem& problem,
                                  const InputSignal& u);

struct MonteCarloMi {
  double estimate = 0.0;
  double stderr_ = 0.0;
  int samples = 0;
};

// Plain MC estimate of the mixture mutual information via the stacked-moment
// oracle; guarded to small (N+1)*n_y. Test oracle, not a design objective.
MonteCarloMi mi_monte_carlo(const MixtureDesignProblem& problem, const InputSignal& u,
                            int n_samples, std::uint64_t seed);

// Scalar location model y = theta + v, v ~ N(0,1), with a smoothed-uniform prior
// on [-1, 1] (smoothing alpha). Compares the information-theoretic error floor
// with the Bayesian Cramer-Rao floor 1/(J_P + J_D).
struct GapReport {
  double param = 0.0;  // alpha (smoothed-uniform) or sigma^2 (Gaussian variant)
  double j_p = 0.0;
  double j_d = 1.0;
  double bcrb_floor = 0.0;
  double itb_floor = 0.0;
  bool jp_lower_bound_holds = true;  // J_P >= alpha / (2 sqrt(pi))
};

GapReport itb_bcrb_gap_demo(double alpha, int grid = 3001);

// Gaussian-prior variant of the same model; the two floors coincide.
GapReport itb_bcrb_gap_gaussian_prior(double sigma2, int grid = 8001);

}  // namespace qld
