#include "experiment_config.hpp"

#include "qld/io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace qld::cli {

using nlohmann::json;

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
}

VectorXd parse_vector(const json& j) {
  if (j.is_number()) return VectorXd::Constant(1, j.get<double>());
  if (!j.is_array()) throw ConfigError("config: expected a number or array");
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

MatrixXd parse_matrix(const json& j) {
  if (j.is_number()) return MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ConfigError("config: expected a matrix");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) throw ConfigError("config: ragged matrix");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

ParameterPrior parse_prior(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "gaussian")
    return ParameterPrior::gaussian(parse_vector(j.at("mean")), parse_matrix(j.at("cov")));
  if (type == "uniform")
    return ParameterPrior::uniform_box(parse_vector(j.at("a")), parse_vector(j.at("b")));
  if (type == "discrete") {
    std::vector<VectorXd> nodes;
    for (const auto& n : j.at("nodes")) nodes.push_back(parse_vector(n));
    return ParameterPrior::discrete(std::move(nodes), parse_vector(j.at("weights")));
  }
  throw ConfigError("config: unknown prior type '" + type + "'");
}

SignalConstraint parse_constraint(const json& j, int dim) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "ball") {
    const double radius = j.at("radius").get<double>();
    VectorXd center = VectorXd::Zero(dim);
    if (j.contains("center")) {
      center = parse_vector(j.at("center"));
      if (center.size() == 1 && dim > 1) center = VectorXd::Constant(dim, center[0]);
    }
    if (center.size() != dim) throw ConfigError("config: ball center has wrong length");
    return SignalConstraint::ball(center, radius);
  }
  if (type == "box") {
    auto expand = [dim](const json& v) {
      VectorXd b = parse_vector(v);
      if (b.size() == 1 && dim > 1) b = VectorXd::Constant(dim, b[0]);
      if (b.size() != dim) throw ConfigError("config: box bound has wrong length");
      return b;
    };
    return SignalConstraint::box(expand(j.at("min")), expand(j.at("max")));
  }
  throw ConfigError("config: unknown constraint type '" + type + "'");
}

DesignObjective parse_objective(const std::string& name) {
  if (name == "kt_bound") return DesignObjective::KtBound;
  if (name == "two_alt") return DesignObjective::TwoAlt;
  if (name == "avg_d_optimal") return DesignObjective::AvgDOptimal;
  throw ConfigError("config: unknown objective '" + name + "'");
}

}  // namespace

MixtureDesignProblem ExperimentConfig::problem() const {
  MixtureDesignProblem p{example.model, discretize_prior(prior, scheme), horizon,
                         constraint, example.name != "opm_reduced"};
  return p;
}

ExperimentConfig parse_experiment_config(const std::string& path,
                                         std::optional<std::uint64_t> seed_override) {
  const json doc = load_json(path);
  ExperimentConfig cfg;

  const auto& model = doc.at("model");
  std::map<std::string, double> overrides;
  if (model.contains("overrides"))
    for (const auto& [key, value] : model.at("overrides").items())
      overrides[key] = value.get<double>();
  cfg.example = make_example(model.at("name").get<std::string>(), overrides);

  cfg.prior = doc.contains("prior") ? parse_prior(doc.at("prior")) : cfg.example.prior;
  cfg.prior.validate();

  cfg.horizon = doc.at("horizon").get<int>();
  if (cfg.horizon < 1) throw ConfigError("config: horizon must be >= 1");

  const int dim = cfg.horizon * cfg.example.model.input_dim;
  cfg.constraint = parse_constraint(doc.at("constraint"), dim);

  cfg.scheme = QuadratureScheme::parse(
      doc.contains("scheme") ? doc.at("scheme").get<std::string>()
                             : std::string("sigma_2n"));

  if (!doc.contains("seed") && !seed_override)
    throw ConfigError("config: seed is required (no wall-clock default)");
  cfg.seed = seed_override ? *seed_override : doc.at("seed").get<std::uint64_t>();

  if (doc.contains("design")) {
    const auto& d = doc.at("design");
    if (d.contains("objective"))
      cfg.design.objective = parse_objective(d.at("objective").get<std::string>());
    if (d.contains("max_iters")) cfg.design.max_iters = d.at("max_iters").get<int>();
    if (d.contains("multi_starts"))
      cfg.design.multi_starts = d.at("multi_starts").get<int>();
    if (d.contains("tol")) cfg.design.tol = d.at("tol").get<double>();
    if (d.contains("fd_step_rel"))
      cfg.design.fd_step_rel = d.at("fd_step_rel").get<double>();
    if (cfg.design.max_iters < 1 || cfg.design.multi_starts < 1 ||
        cfg.design.tol <= 0 || cfg.design.fd_step_rel <= 0)
      throw ConfigError("config: design options must be positive");
  }
  cfg.design.seed = cfg.seed;
  cfg.design.harmonic_freq = cfg.example.carrier_freq;
  cfg.design.dt = cfg.example.dt;

  if (doc.contains("montecarlo")) {
    const auto& mc = doc.at("montecarlo");
    if (mc.contains("trials")) cfg.mc_trials = mc.at("trials").get<int>();
    if (mc.contains("grid_per_dim"))
      cfg.map_config.grid_per_dim = mc.at("grid_per_dim").get<int>();
    if (cfg.mc_trials < 1) throw ConfigError("config: montecarlo.trials must be >= 1");
  }

  // Canonical digest: sorted-key serialization of the document plus the seed in
  // effect, so --seed overrides change the digest.
  json canonical = doc;
  canonical["seed"] = cfg.seed;
  cfg.digest_hex = hex64(fnv1a(canonical.dump()));
  return cfg;
}

}  // namespace qld::cli
