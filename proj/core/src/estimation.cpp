#include "qld/estimation.hpp"

#include "qld/io.hpp"
#include "qld/kalman.hpp"
#include "qld/model.hpp"
#include "qld/parallel.hpp"
#include "qld/rng.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace qld {

namespace {

struct SearchBox {
  VectorXd lo, hi;
};

SearchBox search_span(const ParameterPrior& prior, double span_sigmas) {
  SearchBox box;
  switch (prior.kind) {
    case ParameterPrior::Kind::Gaussian: {
      const VectorXd sd = prior.cov.diagonal().cwiseSqrt();
      box.lo = prior.mean - span_sigmas * sd;
      box.hi = prior.mean + span_sigmas * sd;
      return box;
    }
    case ParameterPrior::Kind::UniformBox:
      box.lo = prior.lower;
      box.hi = prior.upper;
      return box;
    case ParameterPrior::Kind::Discrete:
      throw ConfigError("search_span: discrete priors have no continuous span");
  }
  throw ConfigError("search_span: invalid prior");
}

// Golden-section minimization on [lo, hi]; assumes a bracketed minimum.
double golden_section(const std::function<double(double)>& f, double lo, double hi,
                      double tol, int max_iters) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < max_iters && (b - a) > tol; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

}  // namespace

VectorXd map_estimate(const QuasiLinearModel& model, const ParameterPrior& prior,
                      const VectorXd& observations, const InputSignal& u,
                      const MapSearchConfig& cfg) {
  if (cfg.grid_per_dim < 3) throw ConfigError("map_estimate: grid_per_dim must be >= 3");

  auto objective = [&](const VectorXd& theta) {
    return neg_log_posterior(model, prior, theta, observations, u);
  };

  if (prior.kind == ParameterPrior::Kind::Discrete) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < prior.nodes.size(); ++j) {
      if (prior.weights[static_cast<Eigen::Index>(j)] <= 0) continue;
      const double v = objective(prior.nodes[j]);
      if (v < best) {
        best = v;
        best_j = j;
      }
    }
    if (!std::isfinite(best))
      throw NumericalError("map_estimate: objective not finite at any prior node");
    return prior.nodes[best_j];
  }

  const SearchBox box = search_span(prior, cfg.span_sigmas);
  const int d = prior.dim();
  const int g = cfg.grid_per_dim;
  double cells = 1.0;
  for (int i = 0; i < d; ++i) cells *= g;
  if (cells > 2e6) throw ConfigError("map_estimate: grid too large for dimension");

  // Coarse scan.
  VectorXd best_theta;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> idx(d, 0);
  VectorXd theta(d);
  const long total = static_cast<long>(cells);
  for (long cell = 0; cell < total; ++cell) {
    long rem = cell;
    for (int i = 0; i < d; ++i) {
      idx[i] = static_cast<int>(rem % g);
      rem /= g;
    }
    for (int i = 0; i < d; ++i)
      theta[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * idx[i] / (g - 1);
    double v;
    try {
      v = objective(theta);
    } catch (const NumericalError&) {
      continue;
    }
    if (std::isfinite(v) && v < best) {
      best = v;
      best_theta = theta;
    }
  }
  if (!std::isfinite(best))
    throw NumericalError("map_estimate: objective not finite on the whole grid");

  // Refinement.
  const VectorXd span = box.hi - box.lo;
  if (d == 1) {
    const double h = span[0] / (g - 1);
    const double lo = std::max(box.lo[0], best_theta[0] - h);
    const double hi = std::min(box.hi[0], best_theta[0] + h);
    const double tol = cfg.refine_tol_rel * span[0];
    best_theta[0] = golden_section(
        [&](double x) { return objective(VectorXd::Constant(1, x)); }, lo, hi, tol,
        cfg.max_refine_iters);
    return best_theta;
  }

  // Coordinate descent with golden-section line searches.
  VectorXd current = best_theta;
  for (int pass = 0; pass < cfg.max_refine_iters; ++pass) {
    const VectorXd before = current;
    for (int i = 0; i < d; ++i) {
      const double h = span[i] / (g - 1);
      const double lo = std::max(box.lo[i], current[i] - h);
      const double hi = std::min(box.hi[i], current[i] + h);
      const double tol = cfg.refine_tol_rel * span[i];
      current[i] = golden_section(
          [&](double x) {
            VectorXd t = current;
            t[i] = x;
            return objective(t);
          },
          lo, hi, tol, cfg.max_refine_iters);
    }
    double move = 0.0;
    for (int i = 0; i < d; ++i)
      move = std::max(move, std::abs(current[i] - before[i]) / std::max(span[i], 1e-300));
    if (move < cfg.refine_tol_rel) break;
  }
  return current;
}

McReport mc_error(const QuasiLinearModel& model, const ParameterPrior& prior,
                  const InputSignal& u, int trials, std::uint64_t seed,
                  const MapSearchConfig& cfg) {
  const auto reports = compare_signals(model, prior, {{"signal", u}}, trials, seed, cfg);
  return reports.front();
}

std::vector<McReport> compare_signals(const QuasiLinearModel& model,
                                      const ParameterPrior& prior,
                                      const std::vector<NamedSignal>& signals,
                                      int trials, std::uint64_t seed,
                                      const MapSearchConfig& cfg) {
  if (signals.empty()) throw ConfigError("compare_signals: need at least one signal");
  if (trials < 1) throw ConfigError("compare_signals: trials must be >= 1");
  const int horizon = signals.front().u.horizon;
  for (const auto& s : signals)
    if (s.u.horizon != horizon)
      throw ConfigError("compare_signals: signals must share one horizon");

  const auto t0 = std::chrono::steady_clock::now();
  const int d = prior.dim();

  // Same theta and noise seeds for every signal: paired comparison.
  std::vector<VectorXd> thetas(trials);
  std::vector<std::uint64_t> noise_seeds(trials);
  for (int t = 0; t < trials; ++t) {
    thetas[t] = sample_prior(prior, derive_seed(seed, 2 * static_cast<std::uint64_t>(t)));
    noise_seeds[t] = derive_seed(seed, 2 * static_cast<std::uint64_t>(t) + 1);
  }
  std::vector<double> theta_bytes;
  theta_bytes.reserve(static_cast<std::size_t>(trials) * d);
  for (const auto& th : thetas)
    theta_bytes.insert(theta_bytes.end(), th.data(), th.data() + th.size());
  const std::uint64_t digest = fnv1a_doubles(theta_bytes.data(), theta_bytes.size());

  std::vector<McReport> reports(signals.size());
  for (std::size_t s = 0; s < signals.size(); ++s) {
    McReport& rep = reports[s];
    rep.trials = trials;
    rep.seed = seed;
    rep.theta_digest = digest;
    rep.sq_errors.assign(trials, 0.0);
    rep.theta_true.resize(trials, d);
    rep.theta_hat.resize(trials, d);

    std::vector<std::string> failures(trials);
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
      try {
        const Trajectory traj =
            simulate(model, thetas[t], signals[s].u, noise_seeds[t]);
        const VectorXd y = traj.stacked_outputs();
        const VectorXd hat = map_estimate(model, prior, y, signals[s].u, cfg);
        rep.sq_errors[t] = (thetas[t] - hat).squaredNorm();
        rep.theta_true.row(static_cast<Eigen::Index>(t)) = thetas[t].transpose();
        rep.theta_hat.row(static_cast<Eigen::Index>(t)) = hat.transpose();
      } catch (const std::exception& e) {
        failures[t] = e.what();
      }
    });
    for (int t = 0; t < trials; ++t)
      if (!failures[t].empty())
        throw NumericalError("compare_signals: trial " + std::to_string(t) +
                             " failed: " + failures[t]);

    // Kahan summation in trial order keeps the aggregate thread-count invariant.
    double sum = 0.0, comp = 0.0;
    for (double e : rep.sq_errors) {
      const double yv = e - comp;
      const double tv = sum + yv;
      comp = (tv - sum) - yv;
      sum = tv;
    }
    rep.mse = sum / trials;
    double var = 0.0;
    for (double e : rep.sq_errors) var += (e - rep.mse) * (e - rep.mse);
    var = trials > 1 ? var / (trials - 1) : 0.0;
    rep.stderr_ = std::sqrt(var / trials);
    rep.elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return reports;
}

}  // namespace qld
