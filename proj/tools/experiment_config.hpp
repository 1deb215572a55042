#pragma once

#include "qld/estimation.hpp"
#include "qld/example_models.hpp"
#include "qld/info_bounds.hpp"
#include "qld/optimizer.hpp"
#include "qld/quadrature.hpp"
#include "qld/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace qld::cli {

// Parsed experiment description. The JSON document looks like:
//
// {
//   "model":      {"name": "atomic_oscillator", "overrides": {"s_v": 11.85}},
//   "prior":      {"type": "gaussian", "mean": [54.6637], "cov": [[10.76]]},   (optional)
//   "horizon":    400,
//   "constraint": {"type": "ball", "radius": 1.0}  or  {"type": "box", "min": 0, "max": 200},
//   "scheme":     "sigma_2n" | "gl_2" | "gh:<p>",
//   "design":     {"objective": "two_alt", "max_iters": 200, "multi_starts": 4,
//                  "tol": 1e-7, "fd_step_rel": 1e-4},                          (optional)
//   "montecarlo": {"trials": 300, "grid_per_dim": 101},                        (optional)
//   "seed":       7
// }
struct ExperimentConfig {
  BuiltinExample example;
  ParameterPrior prior;  // example default unless overridden
  int horizon = 1;
  SignalConstraint constraint;
  QuadratureScheme scheme;
  DesignOptions design;
  int mc_trials = 300;
  MapSearchConfig map_config;
  std::uint64_t seed = 0;

  std::string digest_hex;  // FNV-1a of the canonical config serialization + seed

  MixtureDesignProblem problem() const;
};

ExperimentConfig parse_experiment_config(const std::string& path,
                                         std::optional<std::uint64_t> seed_override);

}  // namespace qld::cli
