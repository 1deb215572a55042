#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qld {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Invalid configuration, bad dimensions, unknown names. Maps to CLI exit 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failed factorizations, non-convergence, non-finite values. Maps to CLI exit 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Piecewise-constant control stacked as col(u_0, ..., u_{N-1}).
struct InputSignal {
  int horizon = 0;
  int input_dim = 1;
  VectorXd values;

  InputSignal() = default;
  InputSignal(int horizon_, int input_dim_, VectorXd values_)
      : horizon(horizon_), input_dim(input_dim_), values(std::move(values_)) {
    if (values.size() != static_cast<Eigen::Index>(horizon) * input_dim)
      throw ConfigError("InputSignal: values length != horizon * input_dim");
    if (!values.allFinite()) throw ConfigError("InputSignal: non-finite entries");
  }

  static InputSignal zeros(int horizon, int input_dim = 1) {
    return InputSignal(horizon, input_dim,
                       VectorXd::Zero(static_cast<Eigen::Index>(horizon) * input_dim));
  }

  Eigen::VectorBlock<const VectorXd> step(int k) const {
    return values.segment(static_cast<Eigen::Index>(k) * input_dim, input_dim);
  }
};

struct SignalConstraint {
  enum class Kind { Ball, Box };
  Kind kind = Kind::Ball;

  // Ball: |U - center| <= radius
  VectorXd center;
  double radius = 0.0;

  // Box: lower <= U <= upper componentwise
  VectorXd lower, upper;

  static SignalConstraint ball(VectorXd center, double radius) {
    if (radius <= 0) throw ConfigError("ball constraint: radius must be > 0");
    SignalConstraint c;
    c.kind = Kind::Ball;
    c.center = std::move(center);
    c.radius = radius;
    return c;
  }
  static SignalConstraint ball_at_zero(int dim, double radius) {
    return ball(VectorXd::Zero(dim), radius);
  }
  static SignalConstraint box(VectorXd lower, VectorXd upper) {
    if (lower.size() != upper.size() || (upper - lower).minCoeff() < 0)
      throw ConfigError("box constraint: bounds must satisfy lower <= upper");
    SignalConstraint c;
    c.kind = Kind::Box;
    c.lower = std::move(lower);
    c.upper = std::move(upper);
    return c;
  }
  static SignalConstraint box_uniform(int dim, double lo, double hi) {
    return box(VectorXd::Constant(dim, lo), VectorXd::Constant(dim, hi));
  }

  int dim() const {
    return static_cast<int>(kind == Kind::Ball ? center.size() : lower.size());
  }

  bool contains(const VectorXd& u, double tol = 1e-9) const {
    if (u.size() != dim()) return false;
    if (kind == Kind::Ball) return (u - center).norm() <= radius + tol;
    return (u - lower).minCoeff() >= -tol && (upper - u).minCoeff() >= -tol;
  }

  // Characteristic size of the feasible set, used for step and perturbation scaling.
  double scale() const {
    if (kind == Kind::Ball) return radius;
    return (upper - lower).maxCoeff();
  }
};

struct ParameterPrior {
  enum class Kind { Discrete, Gaussian, UniformBox };
  Kind kind = Kind::Gaussian;

  // Discrete
  std::vector<VectorXd> nodes;
  VectorXd weights;

  // Gaussian
  VectorXd mean;
  MatrixXd cov;

  // UniformBox
  VectorXd lower, upper;

  static ParameterPrior discrete(std::vector<VectorXd> nodes, VectorXd weights);
  static ParameterPrior gaussian(VectorXd mean, MatrixXd cov);
  static ParameterPrior gaussian_scalar(double mean, double variance);
  static ParameterPrior uniform_box(VectorXd lower, VectorXd upper);

  int dim() const;
  void validate() const;

  // ln p_0(theta); throws ConfigError when theta is outside the support.
  double log_density(const VectorXd& theta) const;
  bool in_support(const VectorXd& theta, double tol = 0.0) const;
};

// Quasi-linear state-space family: linear in the state, arbitrary dependence of
// A, B, G on (theta, u). B is the full additive drift vector, so linear models
// with input matrix Bm enter as B(theta, u) = Bm(theta) * u.
struct QuasiLinearModel {
  int state_dim = 0;
  int noise_dim = 0;
  int output_dim = 0;
  int input_dim = 1;

  std::function<MatrixXd(const VectorXd& theta, const VectorXd& u)> A;
  std::function<VectorXd(const VectorXd& theta, const VectorXd& u)> B;
  std::function<MatrixXd(const VectorXd& theta, const VectorXd& u)> G;
  MatrixXd C;    // output_dim x state_dim
  MatrixXd S_v;  // output_dim x output_dim, SPD

  std::function<VectorXd(const VectorXd& theta)> m0;
  std::function<MatrixXd(const VectorXd& theta)> S0;
};

struct Trajectory {
  std::vector<VectorXd> states;   // x_0 .. x_N
  std::vector<VectorXd> outputs;  // y_0 .. y_N
  VectorXd theta;
  std::uint64_t seed = 0;

  VectorXd stacked_outputs() const {
    const Eigen::Index ny = outputs.empty() ? 0 : outputs.front().size();
    VectorXd y(static_cast<Eigen::Index>(outputs.size()) * ny);
    for (std::size_t k = 0; k < outputs.size(); ++k)
      y.segment(static_cast<Eigen::Index>(k) * ny, ny) = outputs[k];
    return y;
  }
};

}  // namespace qld
