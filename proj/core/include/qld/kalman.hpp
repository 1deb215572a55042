#pragma once

#include "qld/types.hpp"

#include <vector>

namespace qld {

// One filtering pass. Innovation covariances are SPD whenever S_v is; their
// Cholesky factors drive every inverse and log-determinant.
struct KalmanSweep {
  std::vector<VectorXd> predicted_output_means;  // C m_k^-
  std::vector<MatrixXd> innovation_covs;         // Sigma_k
  double log_det_sum = 0.0;                      // sum_k ln|Sigma_k|
  double quad_sum = 0.0;  // sum_k |y_k - C m_k^-|^2_{Sigma_k^{-1}} (observations only)
  VectorXd final_mean;
  MatrixXd final_cov;
};

// observations: stacked col(y_0..y_N) or nullptr for a covariance-only sweep.
KalmanSweep kalman_filter(const QuasiLinearModel& model, const VectorXd& theta,
                          const InputSignal& u, const VectorXd* observations,
                          bool keep_steps = false);

// Augmented two-parameter sweep used for the pairwise mixture distances: block
// dynamics for (theta_i, theta_j), difference output (1/sqrt2)[C, -C], zero
// pseudo-observations.
struct PairSweep {
  std::vector<VectorXd> predicted_diff_means;  // C~ m~_k^-
  std::vector<MatrixXd> innovation_covs;       // Sigma~_k
  double quad_sum = 0.0;                       // sum_k |C~ m~_k^-|^2_{Sigma~_k^{-1}}
  double log_det_sum = 0.0;                    // sum_k ln|Sigma~_k|
};

PairSweep pair_filter(const QuasiLinearModel& model, const VectorXd& theta_i,
                      const VectorXd& theta_j, const InputSignal& u,
                      bool keep_steps = false);

double log_likelihood(const QuasiLinearModel& model, const VectorXd& theta,
                      const VectorXd& observations, const InputSignal& u);

double neg_log_posterior(const QuasiLinearModel& model, const ParameterPrior& prior,
                         const VectorXd& theta, const VectorXd& observations,
                         const InputSignal& u);

// ln det of the stacked observation covariance, no observations needed.
double log_det_S(const QuasiLinearModel& model, const VectorXd& theta,
                 const InputSignal& u);

// Pairwise mixture distance d_ij. With input_independent_cov the log-det terms
// cancel against the single-parameter sweeps and only the quadratic term is
// evaluated.
double pair_distance(const QuasiLinearModel& model, const VectorXd& theta_i,
                     const VectorXd& theta_j, const InputSignal& u,
                     bool input_independent_cov = false);

// Stacked mean and covariance of col(y_0..y_N); verification oracle, O(N^2)
// memory, guarded to horizons <= 64.
struct DenseMoments {
  VectorXd F;  // (N+1)*n_y
  MatrixXd S;  // (N+1)*n_y square
};

DenseMoments dense_moments(const QuasiLinearModel& model, const VectorXd& theta,
                           const InputSignal& u);

}  // namespace qld
