#include "experiment_config.hpp"

#include "qld/classical.hpp"
#include "qld/estimation.hpp"
#include "qld/io.hpp"
#include "qld/kalman.hpp"
#include "qld/model.hpp"
#include "qld/parallel.hpp"
#include "qld/rng.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace qld;
using cli::ExperimentConfig;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string out_path(const std::string& out_dir, const std::string& name) {
  fs::create_directories(out_dir);
  return (fs::path(out_dir) / name).string();
}

std::vector<std::string> stamp(const ExperimentConfig& cfg) {
  return {"config_digest=" + cfg.digest_hex + " seed=" + std::to_string(cfg.seed)};
}

InputSignal read_signal_csv(const std::string& path, const ExperimentConfig& cfg) {
  const CsvFile csv = read_csv(path);
  const int n_u = cfg.example.model.input_dim;
  if (static_cast<int>(csv.header.size()) != 1 + n_u)
    throw ConfigError(path + ": expected columns k,u[,...] for input_dim " +
                      std::to_string(n_u));
  VectorXd values(static_cast<Eigen::Index>(csv.rows.size()) * n_u);
  for (std::size_t r = 0; r < csv.rows.size(); ++r)
    for (int i = 0; i < n_u; ++i)
      values[static_cast<Eigen::Index>(r) * n_u + i] = csv.rows[r][1 + i];
  if (static_cast<int>(csv.rows.size()) != cfg.horizon)
    throw ConfigError(path + ": signal horizon " + std::to_string(csv.rows.size()) +
                      " does not match config horizon " + std::to_string(cfg.horizon));
  return InputSignal(cfg.horizon, n_u, values);
}

VectorXd read_observations_csv(const std::string& path, const ExperimentConfig& cfg) {
  const CsvFile csv = read_csv(path);
  const int ny = cfg.example.model.output_dim;
  if (static_cast<int>(csv.header.size()) != 1 + ny)
    throw ConfigError(path + ": expected columns k,y0..y" + std::to_string(ny - 1));
  if (static_cast<int>(csv.rows.size()) != cfg.horizon + 1)
    throw ConfigError(path + ": expected " + std::to_string(cfg.horizon + 1) +
                      " observation rows, got " + std::to_string(csv.rows.size()));
  VectorXd y(static_cast<Eigen::Index>(csv.rows.size()) * ny);
  for (std::size_t r = 0; r < csv.rows.size(); ++r)
    for (int i = 0; i < ny; ++i)
      y[static_cast<Eigen::Index>(r) * ny + i] = csv.rows[r][1 + i];
  return y;
}

void write_signal_csv(const std::string& path, const ExperimentConfig& cfg,
                      const InputSignal& u) {
  CsvTable table;
  table.comment_lines = stamp(cfg);
  table.header = {"k"};
  if (u.input_dim == 1) {
    table.header.push_back("u");
  } else {
    for (int i = 0; i < u.input_dim; ++i) table.header.push_back("u" + std::to_string(i));
  }
  for (int k = 0; k < u.horizon; ++k) {
    std::vector<std::string> row{std::to_string(k)};
    for (int i = 0; i < u.input_dim; ++i)
      row.push_back(format_g17(u.values[static_cast<Eigen::Index>(k) * u.input_dim + i]));
    table.rows.push_back(std::move(row));
  }
  table.write(path);
}

ordered_json bound_report_json(const BoundReport& rep) {
  ordered_json j;
  j["I_l_nats"] = rep.I_l;
  j["I_l_bits"] = rep.I_l / std::log(2.0);
  j["H_theta_nats"] = rep.H_theta;
  j["itb_floor"] = rep.itb_floor;
  j["n_theta"] = rep.n_theta;
  j["constraint_ok"] = rep.constraint_ok;
  std::vector<std::vector<double>> d(rep.pair_distances.rows());
  for (Eigen::Index i = 0; i < rep.pair_distances.rows(); ++i)
    for (Eigen::Index k = 0; k < rep.pair_distances.cols(); ++k)
      d[i].push_back(rep.pair_distances(i, k));
  j["pair_distances_nats"] = d;
  return j;
}

int cmd_design(const ExperimentConfig& cfg, const std::string& out_dir) {
  const MixtureDesignProblem problem = cfg.problem();

  std::optional<LtiSisoAdapter> adapter;
  if (cfg.design.objective == DesignObjective::AvgDOptimal) {
    SensitivityProvider provider = SensitivityProvider::FiniteDifference;
    if (cfg.example.name == "example1") provider = SensitivityProvider::AnalyticExample1;
    if (cfg.example.name == "dc_motor") provider = SensitivityProvider::AnalyticExample2;
    if (cfg.example.name == "atomic_oscillator")
      provider = SensitivityProvider::AnalyticExample3;
    adapter = make_lti_adapter(cfg.example.name, {}, provider);
  }

  const DesignResult result =
      optimize_signal(problem, cfg.design, adapter ? &*adapter : nullptr);
  if (!problem.constraint.contains(result.u_star.values, 1e-9))
    throw NumericalError("design: optimizer returned an infeasible signal");

  const BoundReport bound = kt_lower_bound(problem, result.u_star);
  if (!bound.constraint_ok)
    std::cerr << "warning: evaluated signal violates the constraint set\n";

  write_signal_csv(out_path(out_dir, "signal.csv"), cfg, result.u_star);

  CsvTable trace;
  trace.comment_lines = stamp(cfg);
  trace.header = {"iter", "objective", "grad_norm", "step"};
  for (const auto& t : result.trace)
    trace.add_row({std::to_string(t.iter), format_g17(t.value),
                   format_g17(t.grad_norm), format_g17(t.step)});
  trace.write(out_path(out_dir, "trace.csv"));

  ordered_json j;
  j["config_digest"] = cfg.digest_hex;
  j["seed"] = cfg.seed;
  j["bound"] = bound_report_json(bound);
  j["design"] = {{"objective_value", result.objective_value},
                 {"iterations", result.trace.empty() ? 0 : result.trace.back().iter},
                 {"best_start", result.best_start},
                 {"boundary_fraction", result.boundary_fraction},
                 {"radius_utilization", result.radius_utilization},
                 {"wall_time_s", result.wall_time_s}};
  write_text_file(out_path(out_dir, "bound.json"), j.dump(2) + "\n");
  std::cout << "design: objective " << format_g17(result.objective_value) << ", I_l "
            << format_g17(bound.I_l) << " nats (H_theta "
            << format_g17(bound.H_theta) << ")\n";
  return 0;
}

int cmd_simulate(const ExperimentConfig& cfg, const std::string& signal_path,
                 const std::string& out_dir) {
  const InputSignal u = read_signal_csv(signal_path, cfg);
  const VectorXd theta = sample_prior(cfg.prior, derive_seed(cfg.seed, 0));
  const Trajectory traj = simulate(cfg.example.model, theta, u, derive_seed(cfg.seed, 1));

  CsvTable table;
  table.comment_lines = stamp(cfg);
  table.header = {"k"};
  const int ny = cfg.example.model.output_dim;
  for (int i = 0; i < ny; ++i) table.header.push_back("y" + std::to_string(i));
  for (std::size_t k = 0; k < traj.outputs.size(); ++k) {
    std::vector<std::string> row{std::to_string(k)};
    for (int i = 0; i < ny; ++i) row.push_back(format_g17(traj.outputs[k][i]));
    table.rows.push_back(std::move(row));
  }
  table.write(out_path(out_dir, "observations.csv"));
  return 0;
}

int cmd_estimate(const ExperimentConfig& cfg, const std::string& signal_path,
                 const std::string& obs_path, const std::string& out_dir) {
  const InputSignal u = read_signal_csv(signal_path, cfg);
  const VectorXd y = read_observations_csv(obs_path, cfg);
  const VectorXd hat =
      map_estimate(cfg.example.model, cfg.prior, y, u, cfg.map_config);
  const double nlp = neg_log_posterior(cfg.example.model, cfg.prior, hat, y, u);

  ordered_json j;
  j["config_digest"] = cfg.digest_hex;
  j["seed"] = cfg.seed;
  j["theta_hat"] = std::vector<double>(hat.data(), hat.data() + hat.size());
  j["neg_log_posterior"] = nlp;
  const std::string text = j.dump(2) + "\n";
  write_text_file(out_path(out_dir, "estimate.json"), text);
  std::cout << text;
  return 0;
}

int cmd_montecarlo(const ExperimentConfig& cfg,
                   const std::vector<std::string>& signal_args,
                   const std::string& out_dir) {
  if (signal_args.empty()) throw ConfigError("montecarlo: need at least one signal");
  std::vector<NamedSignal> signals;
  for (const auto& arg : signal_args) {
    const auto eq = arg.find('=');
    std::string name = eq == std::string::npos ? fs::path(arg).stem().string()
                                               : arg.substr(0, eq);
    const std::string path = eq == std::string::npos ? arg : arg.substr(eq + 1);
    signals.push_back({std::move(name), read_signal_csv(path, cfg)});
  }

  const auto reports = compare_signals(cfg.example.model, cfg.prior, signals,
                                       cfg.mc_trials, cfg.seed, cfg.map_config);

  const MixtureDesignProblem problem = cfg.problem();
  std::vector<BoundReport> bounds;
  bounds.reserve(signals.size());
  for (const auto& s : signals) bounds.push_back(kt_lower_bound(problem, s.u));

  const int d = cfg.prior.dim();
  CsvTable table;
  table.comment_lines = stamp(cfg);
  table.header = {"signal", "trial"};
  for (int i = 0; i < d; ++i) table.header.push_back("theta_true" + std::to_string(i));
  for (int i = 0; i < d; ++i) table.header.push_back("theta_hat" + std::to_string(i));
  table.header.push_back("sq_error");
  for (std::size_t s = 0; s < signals.size(); ++s) {
    const auto& rep = reports[s];
    for (int t = 0; t < rep.trials; ++t) {
      std::vector<std::string> row{signals[s].name, std::to_string(t)};
      for (int i = 0; i < d; ++i) row.push_back(format_g17(rep.theta_true(t, i)));
      for (int i = 0; i < d; ++i) row.push_back(format_g17(rep.theta_hat(t, i)));
      row.push_back(format_g17(rep.sq_errors[t]));
      table.rows.push_back(std::move(row));
    }
  }
  table.write(out_path(out_dir, "compare.csv"));

  ordered_json summary = ordered_json::array();
  for (std::size_t s = 0; s < signals.size(); ++s) {
    ordered_json j;
    j["signal"] = signals[s].name;
    j["trials"] = reports[s].trials;
    j["mse"] = reports[s].mse;
    j["stderr"] = reports[s].stderr_;
    j["seed"] = reports[s].seed;
    j["theta_digest"] = hex64(reports[s].theta_digest);
    j["I_l_nats"] = bounds[s].I_l;
    j["itb_floor"] = bounds[s].itb_floor;
    summary.push_back(std::move(j));
  }
  ordered_json top;
  top["config_digest"] = cfg.digest_hex;
  top["seed"] = cfg.seed;
  top["signals"] = std::move(summary);
  write_text_file(out_path(out_dir, "summary.json"), top.dump(2) + "\n");

  for (std::size_t s = 0; s < signals.size(); ++s)
    std::cout << signals[s].name << ": mse " << format_g17(reports[s].mse)
              << " (stderr " << format_g17(reports[s].stderr_) << "), itb_floor "
              << format_g17(bounds[s].itb_floor) << "\n";
  return 0;
}

int cmd_demo_itb_gap(const std::vector<double>& alphas, int grid,
                     const std::string& out_dir) {
  if (alphas.empty()) throw ConfigError("demo-itb-gap: need at least one alpha");
  CsvTable table;
  table.header = {"alpha", "J_P", "J_D", "bcrb_floor", "itb_floor"};
  for (double alpha : alphas) {
    if (alpha <= 0) throw ConfigError("demo-itb-gap: alpha must be > 0");
    const GapReport rep = itb_bcrb_gap_demo(alpha, grid);
    if (!rep.jp_lower_bound_holds)
      std::cerr << "warning: J_P lower bound alpha/(2 sqrt(pi)) does not hold at alpha="
                << format_g17(alpha) << " (small-alpha regime)\n";
    table.add_row({format_g17(rep.param), format_g17(rep.j_p), format_g17(rep.j_d),
                   format_g17(rep.bcrb_floor), format_g17(rep.itb_floor)});
  }
  table.write(out_path(out_dir, "gap.csv"));
  std::cout << table.to_string();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Information-optimal input signal design for quasi-linear systems"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  int threads = 0;
  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--seed", seed_override, "override the config seed");
  app.add_option("--threads", threads, "worker thread cap (0 = auto)");
  app.add_option("--out", out_dir, "output directory");

  auto* design = app.add_subcommand("design", "optimize an input signal");
  auto* simulate_cmd = app.add_subcommand("simulate", "simulate observations");
  auto* estimate = app.add_subcommand("estimate", "MAP-estimate parameters");
  auto* montecarlo = app.add_subcommand("montecarlo", "Monte Carlo error comparison");
  auto* demo = app.add_subcommand("demo-itb-gap",
                                  "error-floor comparison for the scalar location model");
  for (auto* sub : {design, simulate_cmd, estimate, montecarlo, demo})
    sub->fallthrough();

  std::string signal_path, obs_path;
  simulate_cmd->add_option("--signal", signal_path, "input signal CSV")->required();
  estimate->add_option("--signal", signal_path, "input signal CSV")->required();
  estimate->add_option("--observations", obs_path, "observations CSV")->required();

  std::vector<std::string> mc_signals;
  montecarlo->add_option("signals", mc_signals, "signal CSVs (name=path or path)");

  std::string alpha_list = "1,10,100";
  int gap_grid = 3001;
  demo->add_option("--alpha", alpha_list, "comma-separated smoothing values");
  demo->add_option("--grid", gap_grid, "quadrature points per region");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (threads > 0) set_max_threads(threads);

    if (demo->parsed()) {
      std::vector<double> alphas;
      std::stringstream ss(alpha_list);
      std::string tok;
      while (std::getline(ss, tok, ',')) alphas.push_back(std::stod(tok));
      return cmd_demo_itb_gap(alphas, gap_grid, out_dir);
    }

    if (config_path.empty()) throw ConfigError("--config is required");
    const ExperimentConfig cfg = cli::parse_experiment_config(config_path, seed_override);

    if (design->parsed()) return cmd_design(cfg, out_dir);
    if (simulate_cmd->parsed()) return cmd_simulate(cfg, signal_path, out_dir);
    if (estimate->parsed()) return cmd_estimate(cfg, signal_path, obs_path, out_dir);
    if (montecarlo->parsed()) return cmd_montecarlo(cfg, mc_signals, out_dir);
    throw ConfigError("no subcommand");
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
