#pragma once

#include "qld/types.hpp"

namespace qld {

struct DiscretizedLti {
  MatrixXd A;      // exp(A_c * dt)
  MatrixXd B;      // int_0^dt exp(A_c tau) B_c dtau
  MatrixXd G;      // PSD square root of D (eigenvalues below 1e-12*max zeroed)
  MatrixXd D;      // int_0^dt exp(A_c tau) G_c G_c^T exp(A_c^T tau) dtau
};

// Exact zero-order-hold discretization of dx = (A_c x + B_c u) dt + G_c dw via a
// single block matrix exponential (Van Loan construction).
DiscretizedLti discretize_lti(const MatrixXd& A_c, const MatrixXd& B_c,
                              const MatrixXd& G_c, double dt);

}  // namespace qld
