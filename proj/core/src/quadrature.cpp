#include "qld/quadrature.hpp"

#include "qld/model.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace qld {

void DiscretePrior::validate() const {
  if (nodes.empty()) throw ConfigError("discrete prior: no nodes");
  if (weights.size() != static_cast<Eigen::Index>(nodes.size()))
    throw ConfigError("discrete prior: nodes/weights size mismatch");
  if (weights.minCoeff() < 0) throw ConfigError("discrete prior: negative weight");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw ConfigError("discrete prior: weights must sum to 1");
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
      if ((nodes[i] - nodes[j]).norm() == 0.0)
        throw ConfigError("discrete prior: duplicate nodes");
}

DiscretePrior DiscretePrior::from_prior(const ParameterPrior& p) {
  if (p.kind != ParameterPrior::Kind::Discrete)
    throw ConfigError("DiscretePrior::from_prior: prior is not discrete");
  DiscretePrior d;
  d.nodes = p.nodes;
  d.weights = p.weights;
  d.source = Source::UserSupplied;
  d.validate();
  return d;
}

DiscretePrior gh_sigma_nodes(const VectorXd& mean, const MatrixXd& cov) {
  const int n = static_cast<int>(mean.size());
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw ConfigError("gh_sigma_nodes: covariance is not SPD");
  const MatrixXd root = psd_sqrt(cov);  // principal symmetric square root

  DiscretePrior d;
  d.source = DiscretePrior::Source::SigmaNodes;
  d.nodes.reserve(2 * n);
  const double r = std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    const VectorXd dir = root.col(i) * r;
    d.nodes.push_back(mean - dir);
    d.nodes.push_back(mean + dir);
  }
  d.weights = VectorXd::Constant(2 * n, 1.0 / (2.0 * n));
  d.validate();
  return d;
}

DiscretePrior gl_two_point(double a, double b) {
  if (a >= b) throw ConfigError("gl_two_point: requires a < b");
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a) / std::sqrt(3.0);
  DiscretePrior d;
  d.source = DiscretePrior::Source::GaussLegendre2;
  d.nodes = {VectorXd::Constant(1, mid - half), VectorXd::Constant(1, mid + half)};
  d.weights = VectorXd::Constant(2, 0.5);
  d.validate();
  return d;
}

DiscretePrior gh_scalar(int order, double mean, double sigma) {
  if (order < 1) throw ConfigError("gh_scalar: order must be >= 1");
  if (order > 64) throw ConfigError("gh_scalar: order > 64 is not supported");
  if (sigma <= 0) throw ConfigError("gh_scalar: sigma must be > 0");

  DiscretePrior d;
  d.source = DiscretePrior::Source::GaussHermite;
  if (order == 1) {
    d.nodes = {VectorXd::Constant(1, mean)};
    d.weights = VectorXd::Constant(1, 1.0);
    return d;
  }

  // Jacobi matrix of the monic Hermite polynomials for weight N(0,1);
  // nodes are its eigenvalues, weights the squared first eigenvector entries.
  MatrixXd jacobi = MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double off = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = off;
    jacobi(k, k - 1) = off;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success)
    throw NumericalError("gh_scalar: Jacobi eigendecomposition failed");

  d.nodes.reserve(order);
  VectorXd w(order);
  for (int i = 0; i < order; ++i) {
    d.nodes.push_back(VectorXd::Constant(1, mean + sigma * es.eigenvalues()[i]));
    const double v0 = es.eigenvectors()(0, i);
    w[i] = v0 * v0;
  }
  d.weights = w / w.sum();
  d.validate();
  return d;
}

QuadratureScheme QuadratureScheme::parse(const std::string& token) {
  QuadratureScheme s;
  if (token == "sigma_2n") {
    s.kind = Kind::Sigma2n;
    return s;
  }
  if (token == "gl_2") {
    s.kind = Kind::GaussLegendre2;
    return s;
  }
  if (token.rfind("gh:", 0) == 0) {
    s.kind = Kind::GaussHermite;
    try {
      s.order = std::stoi(token.substr(3));
    } catch (const std::exception&) {
      throw ConfigError("quadrature scheme: bad order in '" + token + "'");
    }
    return s;
  }
  throw ConfigError("unknown quadrature scheme '" + token +
                    "' (expected sigma_2n, gl_2 or gh:<p>)");
}

std::string QuadratureScheme::str() const {
  switch (kind) {
    case Kind::Sigma2n: return "sigma_2n";
    case Kind::GaussLegendre2: return "gl_2";
    case Kind::GaussHermite: return "gh:" + std::to_string(order);
  }
  return "?";
}

DiscretePrior discretize_prior(const ParameterPrior& prior, const QuadratureScheme& scheme) {
  prior.validate();
  switch (prior.kind) {
    case ParameterPrior::Kind::Discrete:
      return DiscretePrior::from_prior(prior);
    case ParameterPrior::Kind::Gaussian:
      if (scheme.kind == QuadratureScheme::Kind::Sigma2n)
        return gh_sigma_nodes(prior.mean, prior.cov);
      if (scheme.kind == QuadratureScheme::Kind::GaussHermite) {
        if (prior.dim() != 1)
          throw ConfigError("gh:<p> scheme applies to scalar Gaussian priors only");
        return gh_scalar(scheme.order, prior.mean[0], std::sqrt(prior.cov(0, 0)));
      }
      throw ConfigError("scheme gl_2 is incompatible with a Gaussian prior");
    case ParameterPrior::Kind::UniformBox:
      if (scheme.kind != QuadratureScheme::Kind::GaussLegendre2)
        throw ConfigError("uniform priors require the gl_2 scheme");
      if (prior.dim() != 1)
        throw ConfigError("gl_2 scheme applies to scalar uniform priors only");
      return gl_two_point(prior.lower[0], prior.upper[0]);
  }
  throw ConfigError("discretize_prior: invalid prior kind");
}

}  // namespace qld
