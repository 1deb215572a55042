#pragma once

#include "qld/types.hpp"

#include <cstdint>

namespace qld {

// Symmetric PSD square root with eigenvalue clipping; throws NumericalError when
// the matrix is indefinite beyond tolerance.
MatrixXd psd_sqrt(const MatrixXd& m, double rel_floor = 1e-12);

// Roll the system forward under U with a fixed seed. Draw order: x_0, then per
// step k: v_k (output), w_k (state). Identical seeds give identical trajectories.
Trajectory simulate(const QuasiLinearModel& model, const VectorXd& theta,
                    const InputSignal& u, std::uint64_t seed);

VectorXd sample_prior(const ParameterPrior& prior, std::uint64_t seed);

// SPD checks for S_v and S0 over prior/constraint samples (Cholesky-based).
void validate_model(const QuasiLinearModel& model, const VectorXd& theta);

}  // namespace qld
