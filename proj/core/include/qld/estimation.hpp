#pragma once

#include "qld/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qld {

struct MapSearchConfig {
  int grid_per_dim = 101;
  double refine_tol_rel = 1e-8;  // on theta, relative to the search span
  int max_refine_iters = 60;
  double span_sigmas = 4.0;  // Gaussian priors: mean +- span_sigmas * sqrt(diag cov)
};

// Coarse grid scan of the negative log posterior followed by golden-section
// refinement (coordinate descent for multi-dimensional theta). Discrete priors
// reduce to an argmin over the nodes; ties keep the lower index.
VectorXd map_estimate(const QuasiLinearModel& model, const ParameterPrior& prior,
                      const VectorXd& observations, const InputSignal& u,
                      const MapSearchConfig& cfg = {});

struct McReport {
  std::vector<double> sq_errors;
  double mse = 0.0;
  double stderr_ = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
  MatrixXd theta_true;  // trials x n_theta
  MatrixXd theta_hat;   // trials x n_theta
  double elapsed_s = 0.0;
  std::uint64_t theta_digest = 0;  // FNV over the theta draws, in trial order
};

// Mean squared MAP error over seeded trials. Per-trial seeds derive from
// (seed, trial index), so results do not depend on scheduling or thread count.
McReport mc_error(const QuasiLinearModel& model, const ParameterPrior& prior,
                  const InputSignal& u, int trials, std::uint64_t seed,
                  const MapSearchConfig& cfg = {});

struct NamedSignal {
  std::string name;
  InputSignal u;
};

// One report per signal with shared per-trial theta and noise draws (paired
// comparison); reports come back in input order.
std::vector<McReport> compare_signals(const QuasiLinearModel& model,
                                      const ParameterPrior& prior,
                                      const std::vector<NamedSignal>& signals,
                                      int trials, std::uint64_t seed,
                                      const MapSearchConfig& cfg = {});

}  // namespace qld
