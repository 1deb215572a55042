#include "qld/discretize.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace qld {

DiscretizedLti discretize_lti(const MatrixXd& A_c, const MatrixXd& B_c,
                              const MatrixXd& G_c, double dt) {
  if (dt <= 0) throw ConfigError("discretize_lti: dt must be > 0");
  if (!A_c.allFinite() || !B_c.allFinite() || !G_c.allFinite())
    throw ConfigError("discretize_lti: non-finite input matrices");
  const Eigen::Index n = A_c.rows();
  if (A_c.cols() != n || B_c.rows() != n || G_c.rows() != n)
    throw ConfigError("discretize_lti: inconsistent matrix shapes");
  const Eigen::Index nu = B_c.cols();

  // One exponential of [[A_c, G_c G_c^T, B_c], [0, -A_c^T, 0], [0, 0, 0]] * dt:
  // block (0,0) -> A, block (0,2) -> B, and D = block(0,1) * A^T.
  const Eigen::Index m = 2 * n + nu;
  MatrixXd blk = MatrixXd::Zero(m, m);
  blk.topLeftCorner(n, n) = A_c;
  blk.block(0, n, n, n) = G_c * G_c.transpose();
  blk.block(0, 2 * n, n, nu) = B_c;
  blk.block(n, n, n, n) = -A_c.transpose();
  blk *= dt;

  const MatrixXd e = blk.exp();
  DiscretizedLti out;
  out.A = e.topLeftCorner(n, n);
  out.B = e.block(0, 2 * n, n, nu);
  out.D = e.block(0, n, n, n) * out.A.transpose();
  out.D = 0.5 * (out.D + out.D.transpose());

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(out.D);
  if (es.info() != Eigen::Success)
    throw NumericalError("discretize_lti: eigendecomposition of D failed");
  VectorXd ev = es.eigenvalues();
  const double emax = std::max(ev.maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    ev[i] = ev[i] < 1e-12 * emax ? 0.0 : std::sqrt(ev[i]);
  out.G = es.eigenvectors() * ev.asDiagonal();
  return out;
}

}  // namespace qld
