#pragma once

#include "qld/model.hpp"
#include "qld/rng.hpp"
#include "qld/types.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace qld::testing {

// Random quasi-linear instance with scalar theta: every matrix depends on both
// theta and the input so the recursions are exercised off the LTI special case.
struct RandomInstance {
  QuasiLinearModel model;
  InputSignal u;
  VectorXd theta;
};

inline MatrixXd random_matrix(Rng& rng, int rows, int cols, double scale) {
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

inline MatrixXd random_spd(Rng& rng, int n, double base) {
  const MatrixXd m = random_matrix(rng, n, n, 1.0);
  return MatrixXd(m * m.transpose() + base * MatrixXd::Identity(n, n));
}

inline RandomInstance random_instance(std::uint64_t seed, int n, int ny, int N) {
  Rng rng(seed);
  const int nw = 1 + static_cast<int>(rng.uniform() * n);

  const MatrixXd a0 = random_matrix(rng, n, n, 0.5 / n);
  const MatrixXd a1 = random_matrix(rng, n, n, 0.2 / n);
  const MatrixXd a2 = random_matrix(rng, n, n, 0.1 / n);
  const MatrixXd b0 = random_matrix(rng, n, 1, 1.0);
  const MatrixXd b1 = random_matrix(rng, n, 1, 0.5);
  const MatrixXd g0 = random_matrix(rng, n, nw, 0.4);
  const MatrixXd g1 = random_matrix(rng, n, nw, 0.1);
  const VectorXd m0v = random_matrix(rng, n, 1, 0.7).col(0);
  const MatrixXd s0 = random_spd(rng, n, 0.2);
  const MatrixXd sv = random_spd(rng, ny, 0.3);
  const MatrixXd c = random_matrix(rng, ny, n, 1.0);

  RandomInstance inst;
  inst.theta = VectorXd::Constant(1, 0.3 + 0.5 * rng.uniform());
  QuasiLinearModel& m = inst.model;
  m.state_dim = n;
  m.noise_dim = nw;
  m.output_dim = ny;
  m.input_dim = 1;
  m.A = [a0, a1, a2](const VectorXd& th, const VectorXd& u) {
    return MatrixXd(a0 + th[0] * a1 + std::sin(u[0]) * a2);
  };
  m.B = [b0, b1](const VectorXd& th, const VectorXd& u) {
    return VectorXd(b0.col(0) * u[0] + th[0] * b1.col(0));
  };
  m.G = [g0, g1](const VectorXd& th, const VectorXd& u) {
    return MatrixXd(g0 + th[0] * std::cos(u[0]) * g1);
  };
  m.C = c;
  m.S_v = sv;
  m.m0 = [m0v](const VectorXd& th) { return VectorXd(th[0] * m0v); };
  m.S0 = [s0](const VectorXd& th) {
    return MatrixXd((1.0 + 0.1 * th[0] * th[0]) * s0);
  };

  VectorXd uv(N);
  for (int k = 0; k < N; ++k) uv[k] = rng.normal();
  inst.u = InputSignal(N, 1, uv);
  return inst;
}

// ---- Dense oracles (independent of the recursive sweeps) ----

inline double dense_log_det(const MatrixXd& s) {
  Eigen::LLT<MatrixXd> llt(s);
  double ld = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i) ld += 2.0 * std::log(llt.matrixLLT()(i, i));
  return ld;
}

inline double dense_gaussian_log_pdf(const VectorXd& y, const VectorXd& f,
                                     const MatrixXd& s) {
  Eigen::LLT<MatrixXd> llt(s);
  const double quad = llt.matrixL().solve(y - f).squaredNorm();
  constexpr double ln2pi = 1.8378770664093454836;
  return -0.5 * (y.size() * ln2pi + dense_log_det(s) + quad);
}

// Pairwise mixture distance from stacked moments.
inline double dense_pair_distance(const VectorXd& f1, const MatrixXd& s1,
                                  const VectorXd& f2, const MatrixXd& s2) {
  const MatrixXd avg = 0.5 * (s1 + s2);
  Eigen::LLT<MatrixXd> llt(avg);
  const VectorXd delta = f1 - f2;
  const double quad = llt.matrixL().solve(delta).squaredNorm();
  return 0.125 * quad + 0.5 * dense_log_det(avg) -
         0.25 * (dense_log_det(s1) + dense_log_det(s2));
}

}  // namespace qld::testing
