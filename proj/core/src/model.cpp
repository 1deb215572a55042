#include "qld/model.hpp"

#include "qld/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace qld {

namespace {

std::string vec_str(const VectorXd& v) {
  std::ostringstream ss;
  ss << "[" << v.transpose() << "]";
  return ss.str();
}

}  // namespace

MatrixXd psd_sqrt(const MatrixXd& m, double rel_floor) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  if (es.info() != Eigen::Success)
    throw NumericalError("psd_sqrt: eigendecomposition failed");
  VectorXd ev = es.eigenvalues();
  const double emax = ev.size() ? std::max(ev.maxCoeff(), 0.0) : 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -1e-10 * std::max(1.0, emax))
      throw NumericalError("psd_sqrt: matrix is not positive semi-definite");
    ev[i] = ev[i] < rel_floor * emax ? 0.0 : std::sqrt(ev[i]);
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

ParameterPrior ParameterPrior::discrete(std::vector<VectorXd> nodes, VectorXd weights) {
  ParameterPrior p;
  p.kind = Kind::Discrete;
  p.nodes = std::move(nodes);
  p.weights = std::move(weights);
  p.validate();
  return p;
}

ParameterPrior ParameterPrior::gaussian(VectorXd mean, MatrixXd cov) {
  ParameterPrior p;
  p.kind = Kind::Gaussian;
  p.mean = std::move(mean);
  p.cov = std::move(cov);
  p.validate();
  return p;
}

ParameterPrior ParameterPrior::gaussian_scalar(double mean, double variance) {
  return gaussian(VectorXd::Constant(1, mean), MatrixXd::Constant(1, 1, variance));
}

ParameterPrior ParameterPrior::uniform_box(VectorXd lower, VectorXd upper) {
  ParameterPrior p;
  p.kind = Kind::UniformBox;
  p.lower = std::move(lower);
  p.upper = std::move(upper);
  p.validate();
  return p;
}

int ParameterPrior::dim() const {
  switch (kind) {
    case Kind::Discrete: return nodes.empty() ? 0 : static_cast<int>(nodes.front().size());
    case Kind::Gaussian: return static_cast<int>(mean.size());
    case Kind::UniformBox: return static_cast<int>(lower.size());
  }
  return 0;
}

void ParameterPrior::validate() const {
  switch (kind) {
    case Kind::Discrete: {
      if (nodes.empty()) throw ConfigError("discrete prior: no nodes");
      if (weights.size() != static_cast<Eigen::Index>(nodes.size()))
        throw ConfigError("discrete prior: nodes/weights size mismatch");
      if (weights.minCoeff() < 0) throw ConfigError("discrete prior: negative weight");
      if (std::abs(weights.sum() - 1.0) > 1e-12)
        throw ConfigError("discrete prior: weights must sum to 1");
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].size() != nodes.front().size())
          throw ConfigError("discrete prior: inconsistent node dimensions");
        for (std::size_t j = i + 1; j < nodes.size(); ++j)
          if ((nodes[i] - nodes[j]).norm() == 0.0)
            throw ConfigError("discrete prior: duplicate nodes");
      }
      break;
    }
    case Kind::Gaussian: {
      if (cov.rows() != mean.size() || cov.cols() != mean.size())
        throw ConfigError("gaussian prior: covariance shape mismatch");
      Eigen::LLT<MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success)
        throw ConfigError("gaussian prior: covariance is not SPD");
      break;
    }
    case Kind::UniformBox: {
      if (lower.size() != upper.size())
        throw ConfigError("uniform prior: bound size mismatch");
      if ((upper - lower).minCoeff() <= 0)
        throw ConfigError("uniform prior: requires lower < upper componentwise");
      break;
    }
  }
}

bool ParameterPrior::in_support(const VectorXd& theta, double tol) const {
  if (theta.size() != dim()) return false;
  switch (kind) {
    case Kind::Discrete:
      for (const auto& n : nodes)
        if ((theta - n).norm() <= tol) return true;
      return false;
    case Kind::Gaussian:
      return theta.allFinite();
    case Kind::UniformBox:
      return (theta - lower).minCoeff() >= -tol && (upper - theta).minCoeff() >= -tol;
  }
  return false;
}

double ParameterPrior::log_density(const VectorXd& theta) const {
  switch (kind) {
    case Kind::Discrete: {
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        if ((theta - nodes[j]).norm() <= 1e-12 * (1.0 + nodes[j].norm())) {
          if (weights[static_cast<Eigen::Index>(j)] <= 0)
            throw ConfigError("prior: theta has zero prior mass");
          return std::log(weights[static_cast<Eigen::Index>(j)]);
        }
      }
      throw ConfigError("prior: theta is not a prior node");
    }
    case Kind::Gaussian: {
      Eigen::LLT<MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success)
        throw NumericalError("prior: covariance Cholesky failed");
      const VectorXd d = theta - mean;
      const VectorXd w = llt.matrixL().solve(d);
      double log_det = 0.0;
      for (Eigen::Index i = 0; i < cov.rows(); ++i)
        log_det += 2.0 * std::log(llt.matrixL()(i, i));
      constexpr double ln2pi = 1.8378770664093454836;
      return -0.5 * (dim() * ln2pi + log_det + w.squaredNorm());
    }
    case Kind::UniformBox: {
      if (!in_support(theta))
        throw ConfigError("prior: theta outside the uniform support " + vec_str(theta));
      double vol = 1.0;
      for (Eigen::Index i = 0; i < lower.size(); ++i) vol *= upper[i] - lower[i];
      return -std::log(vol);
    }
  }
  throw ConfigError("prior: invalid kind");
}

Trajectory simulate(const QuasiLinearModel& model, const VectorXd& theta,
                    const InputSignal& u, std::uint64_t seed) {
  if (!theta.allFinite()) throw ConfigError("simulate: non-finite theta");
  if (u.input_dim != model.input_dim)
    throw ConfigError("simulate: signal input_dim does not match model");

  const int n = model.state_dim;
  const int ny = model.output_dim;
  const int nw = model.noise_dim;
  const int N = u.horizon;

  MatrixXd s0 = model.S0(theta);
  if (s0.rows() != n || s0.cols() != n)
    throw ConfigError("simulate: S0(theta) has wrong shape");
  MatrixXd sqrt_s0;
  try {
    sqrt_s0 = psd_sqrt(s0);
  } catch (const NumericalError&) {
    throw NumericalError("simulate: S0 not PSD at theta=" + vec_str(theta));
  }
  const MatrixXd sqrt_sv = psd_sqrt(model.S_v);

  Rng rng(seed);
  Trajectory traj;
  traj.theta = theta;
  traj.seed = seed;
  traj.states.reserve(N + 1);
  traj.outputs.reserve(N + 1);

  VectorXd x = model.m0(theta) + sqrt_s0 * rng.normal_vec(n);
  for (int k = 0; k <= N; ++k) {
    traj.states.push_back(x);
    traj.outputs.push_back(model.C * x + sqrt_sv * rng.normal_vec(ny));
    if (k < N) {
      const VectorXd uk = u.step(k);
      const MatrixXd a = model.A(theta, uk);
      const VectorXd b = model.B(theta, uk);
      const MatrixXd g = model.G(theta, uk);
      if (a.rows() != n || a.cols() != n || b.size() != n || g.rows() != n ||
          g.cols() != nw)
        throw ConfigError("simulate: model matrix shape mismatch at step " +
                          std::to_string(k));
      x = a * x + b + g * rng.normal_vec(nw);
    }
  }
  return traj;
}

VectorXd sample_prior(const ParameterPrior& prior, std::uint64_t seed) {
  prior.validate();
  Rng rng(seed);
  switch (prior.kind) {
    case ParameterPrior::Kind::Discrete:
      return prior.nodes[static_cast<std::size_t>(rng.categorical(prior.weights))];
    case ParameterPrior::Kind::Gaussian: {
      Eigen::LLT<MatrixXd> llt(prior.cov);
      if (llt.info() != Eigen::Success)
        throw NumericalError("sample_prior: covariance Cholesky failed");
      return prior.mean + MatrixXd(llt.matrixL()) * rng.normal_vec(prior.dim());
    }
    case ParameterPrior::Kind::UniformBox: {
      VectorXd theta(prior.dim());
      for (Eigen::Index i = 0; i < theta.size(); ++i)
        theta[i] = prior.lower[i] + (prior.upper[i] - prior.lower[i]) * rng.uniform();
      return theta;
    }
  }
  throw ConfigError("sample_prior: invalid prior kind");
}

void validate_model(const QuasiLinearModel& model, const VectorXd& theta) {
  Eigen::LLT<MatrixXd> llt_sv(model.S_v);
  if (llt_sv.info() != Eigen::Success)
    throw NumericalError("model: S_v is not SPD");
  Eigen::LLT<MatrixXd> llt_s0(model.S0(theta));
  if (llt_s0.info() != Eigen::Success)
    throw NumericalError("model: S0 is not SPD at theta=" + vec_str(theta));
}

}  // namespace qld
