#pragma once

#include "qld/quadrature.hpp"
#include "qld/types.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace qld {

struct StationaryGain {
  VectorXd K;          // predictor gain
  MatrixXd S;          // stationary predicted state covariance
  double sigma_e2 = 0; // stationary innovation variance C S C^T + sigma_v^2
  int iterations = 0;
};

// Fixed-point iteration of the predictor Riccati update from S = G G^T;
// fails (NumericalError) if 1e5 iterations do not reach |dS|_inf < 1e-12.
StationaryGain stationary_kalman_gain(const MatrixXd& A, const MatrixXd& G,
                                      const MatrixXd& C_row, double sigma_v2);

enum class SensitivityProvider {
  AnalyticExample1,
  AnalyticExample2,
  AnalyticExample3,
  FiniteDifference,
};

// SISO LTI view of a model whose matrices depend on theta only. Analytic
// providers carry closed-form derivatives of A(theta) and of the input column;
// prediction-error sensitivities then run as rational-filter difference
// equations with zero initial conditions.
struct LtiSisoAdapter {
  QuasiLinearModel model;
  std::vector<int> theta_g;  // parameter indices entering the input path
  SensitivityProvider provider = SensitivityProvider::FiniteDifference;

  // dA/dtheta_{theta_g[i]} and dBvec/dtheta_{theta_g[i]}; null for FD.
  std::function<MatrixXd(const VectorXd& theta, int i)> dA;
  std::function<VectorXd(const VectorXd& theta, int i)> dB;

  struct Cache;
  std::shared_ptr<Cache> cache;  // per-theta filter data, U-independent
};

// Builds the adapter for a built-in example (example1, dc_motor,
// atomic_oscillator); provider must match the example for the analytic tags.
LtiSisoAdapter make_lti_adapter(const std::string& example_name,
                                const std::map<std::string, double>& overrides,
                                SensitivityProvider provider);

struct SensitivitySweep {
  MatrixXd psi;  // N x |theta_g|, rows k = 1..N
  VectorXd theta;
};

SensitivitySweep sensitivity_sweep(const LtiSisoAdapter& adapter, const VectorXd& theta,
                                   const InputSignal& u);

// Prior-averaged D-optimal criterion: sum_j p_j det( (1/(N sigma_e^2)) Psi^T Psi ),
// constant additive information term omitted.
double avg_d_optimal_criterion(const LtiSisoAdapter& adapter, const DiscretePrior& dprior,
                               const InputSignal& u);

}  // namespace qld
