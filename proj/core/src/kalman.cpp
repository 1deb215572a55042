#include "qld/kalman.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

namespace qld {

namespace {

constexpr double kLn2Pi = 1.8378770664093454836;

double chol_log_det(const Eigen::LLT<MatrixXd>& llt) {
  double s = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

Eigen::LLT<MatrixXd> factor_innovation(const MatrixXd& sigma, int step) {
  Eigen::LLT<MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw NumericalError("innovation covariance not SPD at step " +
                         std::to_string(step));
  return llt;
}

}  // namespace

KalmanSweep kalman_filter(const QuasiLinearModel& model, const VectorXd& theta,
                          const InputSignal& u, const VectorXd* observations,
                          bool keep_steps) {
  const int n = model.state_dim;
  const int ny = model.output_dim;
  const int N = u.horizon;
  if (u.input_dim != model.input_dim)
    throw ConfigError("kalman_filter: signal input_dim mismatch");
  if (observations &&
      observations->size() != static_cast<Eigen::Index>(N + 1) * ny)
    throw ConfigError("kalman_filter: observations length != (N+1)*n_y");

  KalmanSweep sweep;
  if (keep_steps) {
    sweep.predicted_output_means.reserve(N + 1);
    sweep.innovation_covs.reserve(N + 1);
  }

  VectorXd m = model.m0(theta);
  MatrixXd S = model.S0(theta);
  MatrixXd sigma(ny, ny), cs(ny, n), gain(n, ny);
  VectorXd pred(ny), innov(ny);

  for (int k = 0; k <= N; ++k) {
    cs.noalias() = model.C * S;
    sigma.noalias() = cs * model.C.transpose();
    sigma += model.S_v;
    const auto llt = factor_innovation(sigma, k);
    sweep.log_det_sum += chol_log_det(llt);

    pred.noalias() = model.C * m;
    if (keep_steps) {
      sweep.predicted_output_means.push_back(pred);
      sweep.innovation_covs.push_back(sigma);
    }

    // gain = S C^T Sigma^{-1}
    gain = llt.solve(cs).transpose();
    S.noalias() -= gain * sigma * gain.transpose();
    S = 0.5 * (S + S.transpose());

    if (observations) {
      innov = observations->segment(static_cast<Eigen::Index>(k) * ny, ny) - pred;
      sweep.quad_sum += llt.matrixL().solve(innov).squaredNorm();
      m.noalias() += gain * innov;
    }

    if (k < N) {
      const VectorXd uk = u.step(k);
      const MatrixXd a = model.A(theta, uk);
      const MatrixXd g = model.G(theta, uk);
      m = a * m + model.B(theta, uk);
      S = a * S * a.transpose() + g * g.transpose();
    }
  }

  if (!std::isfinite(sweep.log_det_sum) || !std::isfinite(sweep.quad_sum))
    throw NumericalError("kalman_filter: non-finite accumulator");
  sweep.final_mean = m;
  sweep.final_cov = S;
  return sweep;
}

PairSweep pair_filter(const QuasiLinearModel& model, const VectorXd& theta_i,
                      const VectorXd& theta_j, const InputSignal& u,
                      bool keep_steps) {
  const int n = model.state_dim;
  const int ny = model.output_dim;
  const int N = u.horizon;

  MatrixXd c_tilde(ny, 2 * n);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  c_tilde.leftCols(n) = inv_sqrt2 * model.C;
  c_tilde.rightCols(n) = -inv_sqrt2 * model.C;

  VectorXd m(2 * n);
  m.head(n) = model.m0(theta_i);
  m.tail(n) = model.m0(theta_j);
  MatrixXd S = MatrixXd::Zero(2 * n, 2 * n);
  S.topLeftCorner(n, n) = model.S0(theta_i);
  S.bottomRightCorner(n, n) = model.S0(theta_j);

  PairSweep sweep;
  if (keep_steps) {
    sweep.predicted_diff_means.reserve(N + 1);
    sweep.innovation_covs.reserve(N + 1);
  }

  MatrixXd sigma(ny, ny), cs(ny, 2 * n), gain(2 * n, ny);
  VectorXd diff(ny);

  for (int k = 0; k <= N; ++k) {
    cs.noalias() = c_tilde * S;
    sigma.noalias() = cs * c_tilde.transpose();
    sigma += model.S_v;
    const auto llt = factor_innovation(sigma, k);
    sweep.log_det_sum += chol_log_det(llt);

    diff.noalias() = c_tilde * m;
    sweep.quad_sum += llt.matrixL().solve(diff).squaredNorm();
    if (keep_steps) {
      sweep.predicted_diff_means.push_back(diff);
      sweep.innovation_covs.push_back(sigma);
    }

    gain = llt.solve(cs).transpose();
    S.noalias() -= gain * sigma * gain.transpose();
    S = 0.5 * (S + S.transpose());
    // correction with the zero pseudo-observation: m <- (I - K C~) m
    m.noalias() -= gain * diff;

    if (k < N) {
      const VectorXd uk = u.step(k);
      const MatrixXd a_i = model.A(theta_i, uk);
      const MatrixXd a_j = model.A(theta_j, uk);
      const MatrixXd g_i = model.G(theta_i, uk);
      const MatrixXd g_j = model.G(theta_j, uk);

      VectorXd m_next(2 * n);
      m_next.head(n).noalias() = a_i * m.head(n);
      m_next.head(n) += model.B(theta_i, uk);
      m_next.tail(n).noalias() = a_j * m.tail(n);
      m_next.tail(n) += model.B(theta_j, uk);
      m = std::move(m_next);

      MatrixXd as(2 * n, 2 * n);
      as.topRows(n).noalias() = a_i * S.topRows(n);
      as.bottomRows(n).noalias() = a_j * S.bottomRows(n);
      S.topLeftCorner(n, n).noalias() = as.topLeftCorner(n, n) * a_i.transpose();
      S.topRightCorner(n, n).noalias() = as.topRightCorner(n, n) * a_j.transpose();
      S.bottomLeftCorner(n, n) = S.topRightCorner(n, n).transpose();
      S.bottomRightCorner(n, n).noalias() =
          as.bottomRightCorner(n, n) * a_j.transpose();
      S.topLeftCorner(n, n).noalias() += g_i * g_i.transpose();
      S.bottomRightCorner(n, n).noalias() += g_j * g_j.transpose();
    }
  }

  if (!std::isfinite(sweep.quad_sum) || !std::isfinite(sweep.log_det_sum))
    throw NumericalError("pair_filter: non-finite accumulator");
  return sweep;
}

double log_likelihood(const QuasiLinearModel& model, const VectorXd& theta,
                      const VectorXd& observations, const InputSignal& u) {
  const auto sweep = kalman_filter(model, theta, u, &observations);
  const double n_total = static_cast<double>(u.horizon + 1) * model.output_dim;
  return -0.5 * (sweep.quad_sum + sweep.log_det_sum + n_total * kLn2Pi);
}

double neg_log_posterior(const QuasiLinearModel& model, const ParameterPrior& prior,
                         const VectorXd& theta, const VectorXd& observations,
                         const InputSignal& u) {
  const double log_prior = prior.log_density(theta);
  const auto sweep = kalman_filter(model, theta, u, &observations);
  return 0.5 * (sweep.quad_sum + sweep.log_det_sum) - log_prior;
}

double log_det_S(const QuasiLinearModel& model, const VectorXd& theta,
                 const InputSignal& u) {
  return kalman_filter(model, theta, u, nullptr).log_det_sum;
}

double pair_distance(const QuasiLinearModel& model, const VectorXd& theta_i,
                     const VectorXd& theta_j, const InputSignal& u,
                     bool input_independent_cov) {
  const auto sweep = pair_filter(model, theta_i, theta_j, u);
  if (input_independent_cov) return 0.25 * sweep.quad_sum;
  const double ld_i = log_det_S(model, theta_i, u);
  const double ld_j = log_det_S(model, theta_j, u);
  return 0.25 * sweep.quad_sum + 0.5 * sweep.log_det_sum - 0.25 * (ld_i + ld_j);
}

DenseMoments dense_moments(const QuasiLinearModel& model, const VectorXd& theta,
                           const InputSignal& u) {
  const int n = model.state_dim;
  const int ny = model.output_dim;
  const int nw = model.noise_dim;
  const int N = u.horizon;
  if (N > 64) throw ConfigError("dense_moments: horizon > 64 (oracle guard)");

  // State-level transition stacks, propagated cumulatively.
  MatrixXd phi = MatrixXd::Identity(n, n);        // Phi(k, 0)
  VectorXd drift = VectorXd::Zero(n);             // sum Phi(k, j+1) B_j
  MatrixXd noise = MatrixXd::Zero(n, N * nw);     // row k of the G stack

  const Eigen::Index rows = static_cast<Eigen::Index>(N + 1) * n;
  MatrixXd a_stack(rows, n);
  MatrixXd b_stack(rows, 1);
  MatrixXd g_stack = MatrixXd::Zero(rows, static_cast<Eigen::Index>(N) * nw);

  for (int k = 0; k <= N; ++k) {
    a_stack.middleRows(static_cast<Eigen::Index>(k) * n, n) = phi;
    b_stack.middleRows(static_cast<Eigen::Index>(k) * n, n) = drift;
    g_stack.middleRows(static_cast<Eigen::Index>(k) * n, n) = noise;
    if (k < N) {
      const VectorXd uk = u.step(k);
      const MatrixXd a = model.A(theta, uk);
      phi = a * phi;
      drift = a * drift + model.B(theta, uk);
      noise = a * noise;
      noise.middleCols(static_cast<Eigen::Index>(k) * nw, nw) = model.G(theta, uk);
    }
  }

  // Outputs: F = Cal(A m0 + drift), S = Cal(A S0 A^T + G G^T) Cal^T + I (x) S_v
  const Eigen::Index m = static_cast<Eigen::Index>(N + 1) * ny;
  MatrixXd ca(m, n), cg(m, static_cast<Eigen::Index>(N) * nw);
  VectorXd f(m);
  const VectorXd m0 = model.m0(theta);
  for (int k = 0; k <= N; ++k) {
    const auto xa = a_stack.middleRows(static_cast<Eigen::Index>(k) * n, n);
    const auto xb = b_stack.middleRows(static_cast<Eigen::Index>(k) * n, n);
    const auto xg = g_stack.middleRows(static_cast<Eigen::Index>(k) * n, n);
    ca.middleRows(static_cast<Eigen::Index>(k) * ny, ny) = model.C * xa;
    cg.middleRows(static_cast<Eigen::Index>(k) * ny, ny) = model.C * xg;
    f.segment(static_cast<Eigen::Index>(k) * ny, ny) = model.C * (xa * m0 + xb);
  }

  DenseMoments out;
  out.F = f;
  out.S = ca * model.S0(theta) * ca.transpose() + cg * cg.transpose();
  for (int k = 0; k <= N; ++k)
    out.S.block(static_cast<Eigen::Index>(k) * ny, static_cast<Eigen::Index>(k) * ny,
                ny, ny) += model.S_v;
  out.S = 0.5 * (out.S + out.S.transpose());
  return out;
}

}  // namespace qld
