#pragma once

#include "qld/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qld {

struct BuiltinExample {
  std::string name;
  QuasiLinearModel model;
  ParameterPrior prior;
  double dt = 1.0;  // sampling period in the model's (rescaled) time units
  // Prior-mean natural frequency for models with oscillatory dynamics; used to
  // seed harmonic candidate signals.
  std::optional<double> carrier_freq;
};

// Built-in models: "example1", "dc_motor", "atomic_oscillator", "opm_reduced".
// Overrides replace documented numeric constants; unknown keys are rejected.
BuiltinExample make_example(const std::string& name,
                            const std::map<std::string, double>& overrides = {});

std::vector<std::string> example_names();

}  // namespace qld
