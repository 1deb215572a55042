#pragma once

#include "qld/types.hpp"

#include <string>
#include <vector>

namespace qld {

// Weighted node set standing in for a continuous prior; the observation density
// then becomes a finite Gaussian mixture.
struct DiscretePrior {
  enum class Source { SigmaNodes, GaussLegendre2, GaussHermite, UserSupplied };

  std::vector<VectorXd> nodes;
  VectorXd weights;
  Source source = Source::UserSupplied;

  int size() const { return static_cast<int>(nodes.size()); }
  int dim() const { return nodes.empty() ? 0 : static_cast<int>(nodes.front().size()); }
  void validate() const;

  static DiscretePrior from_prior(const ParameterPrior& discrete_prior);
};

// 2*n nodes at mean +- sqrt(n) * principal-sqrt(cov) * e_i, equal weights.
// Exact for quadratic integrands under the Gaussian.
DiscretePrior gh_sigma_nodes(const VectorXd& mean, const MatrixXd& cov);

// Two-point Gauss-Legendre rule for the uniform density on [a, b].
DiscretePrior gl_two_point(double a, double b);

// Order-p Gauss-Hermite rule (Golub-Welsch) mapped to mean m, stddev sigma.
DiscretePrior gh_scalar(int order, double mean, double sigma);

struct QuadratureScheme {
  enum class Kind { Sigma2n, GaussLegendre2, GaussHermite };
  Kind kind = Kind::Sigma2n;
  int order = 0;  // GaussHermite only

  // Tokens: "sigma_2n", "gl_2", "gh:<p>"
  static QuadratureScheme parse(const std::string& token);
  std::string str() const;
};

DiscretePrior discretize_prior(const ParameterPrior& prior, const QuadratureScheme& scheme);

}  // namespace qld
