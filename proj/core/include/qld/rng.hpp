#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace qld {

// splitmix64 step; also used to mix stream ids into per-task seeds.
std::uint64_t splitmix64(std::uint64_t& state);

// Seed for an independent stream: hash(master, stream). Execution-order independent.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Deterministic generator with an explicit normal transform (Marsaglia polar),
// so sampled values do not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // [0, 1)
  double normal();   // N(0, 1)
  Eigen::VectorXd normal_vec(Eigen::Index n);
  // Index in [0, n) from cumulative weights; weights must sum to ~1.
  int categorical(const Eigen::VectorXd& weights);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace qld
