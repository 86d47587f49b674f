#include "sgain_cli/cli.hpp"

#include "sgain_cli/svg.hpp"
#include "sgain_cli/workers.hpp"

#include <sgain/certify.hpp>
#include <sgain/gain.hpp>
#include <sgain/model_io.hpp>
#include <sgain/philox.hpp>
#include <sgain/sde.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace sgain::cli {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

struct RunConfig {
  std::string command;
  std::string builtin;
  std::string model_path;
  std::uint64_t seed = 42;
  double dt = 1e-3;
  double window = 30.0;
  int ensemble = 64;
  double tol = 1e-6;
  std::string out_dir;
  std::string format;  // empty: csv for simulate, json otherwise
  std::string method;
  std::string lambda;
  std::string rho1;
  bool force = false;
  std::vector<std::string> params;
  std::string x0;
  double horizon = 0.0;  // 0: command default
  int threads = 0;
  int every = 1;
  int max_iter = 200;
  std::string scheme = "em";
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void validate(const RunConfig& c) {
  if (!(c.dt > 0.0)) throw UsageError("dt must be positive");
  if (!(c.window > 0.0)) throw UsageError("window must be positive");
  if (c.ensemble < 1) throw UsageError("ensemble size must be positive");
  if (!(c.tol > 0.0)) throw UsageError("tolerance must be positive");
  if (c.horizon < 0.0) throw UsageError("horizon must be positive");
  if (c.every < 1) throw UsageError("--every must be >= 1");
  if (c.builtin.empty() == c.model_path.empty()) throw UsageError("give exactly one of --builtin or --model");
  if (!c.format.empty() && c.format != "json" && c.format != "csv") throw UsageError("format must be json or csv");
}

ModelSpec load_model(const RunConfig& c) {
  std::map<std::string, std::string> overrides;
  for (const auto& p : c.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--param expects key=value, got '" + p + "'");
    overrides[p.substr(0, eq)] = p.substr(eq + 1);
  }
  if (!c.model_path.empty()) {
    if (!overrides.empty()) throw UsageError("--param only applies to --builtin models");
    return parse_model(c.model_path);
  }
  return builtin(c.builtin, overrides);
}

IntegratorOptions integrator(const RunConfig& c) {
  IntegratorOptions o;
  if (c.scheme == "em") {
    o.scheme = Scheme::euler_maruyama;
  } else if (c.scheme == "splitting") {
    o.scheme = Scheme::splitting;
  } else {
    throw UsageError("scheme must be em or splitting");
  }
  return o;
}

Eigen::VectorXd start_state(const RunConfig& c, int dim, double fallback) {
  if (c.x0.empty()) return Eigen::VectorXd::Constant(dim, fallback);
  const auto values = parse_rational_list(c.x0);
  if (values.size() != 1 && values.size() != static_cast<std::size_t>(dim)) {
    throw UsageError("--x0 needs 1 or " + std::to_string(dim) + " entries");
  }
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = to_double(values.size() == 1 ? values[0] : values[static_cast<std::size_t>(i)]);
  if ((x.array() < 0.0).any()) throw UsageError("--x0 must be nonnegative");
  return x;
}

std::optional<Rational> optional_rational(const std::string& text, const char* flag) {
  if (text.empty()) return std::nullopt;
  try {
    return parse_rational(text);
  } catch (const std::invalid_argument&) {
    throw UsageError(std::string(flag) + " is not a number: '" + text + "'");
  }
}

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
}

ordered_json vector_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::uint64_t path_seed(const RunConfig& c, int path) { return mix_seed(c.seed, static_cast<std::uint64_t>(path)); }

int cmd_check(const RunConfig& c, std::ostream& out) {
  const auto model = load_model(c);
  Type2Options type2;
  type2.contraction.seed = c.seed;
  const auto cert = certify_auto(model, c.method, optional_rational(c.lambda, "--lambda"),
                                 optional_rational(c.rho1, "--rho1"), type2);
  const std::string json = certificate_json(cert);
  out << json << '\n';
  if (!c.out_dir.empty()) write_file(fs::path(c.out_dir) / "certificate.json", json + "\n");
  return cert.certified() ? kOk : kNotCertified;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  const auto model = load_model(c);
  const double horizon = c.horizon > 0.0 ? c.horizon : 10.0;
  const Eigen::VectorXd x0 = start_state(c, model.dim(), 1.0);
  const auto options = integrator(c);
  std::vector<Trajectory> paths(static_cast<std::size_t>(c.ensemble));
  parallel_for(paths.size(), pool_size(c.threads), [&](std::size_t i) {
    const auto grid = WienerGrid::sample(model.noise_dims(), 0.0, horizon, c.dt, path_seed(c, static_cast<int>(i)));
    paths[i] = integrate_forward(model, grid, x0, 0.0, horizon, options, c.every);
  });
  const fs::path dir = c.out_dir.empty() ? fs::path("sgain-out") : fs::path(c.out_dir);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    std::ostringstream name;
    name << "path_" << std::setw(4) << std::setfill('0') << i << (c.format == "csv" ? ".csv" : ".json");
    std::string content;
    if (c.format == "csv") {
      std::string text = "t";
      for (int k = 1; k <= model.dim(); ++k) text += ",x_" + std::to_string(k);
      text += '\n';
      for (std::size_t r = 0; r < paths[i].times.size(); ++r) {
        text += shortest(paths[i].times[r]);
        for (Eigen::Index k = 0; k < paths[i].states[r].size(); ++k) text += "," + shortest(paths[i].states[r][k]);
        text += '\n';
      }
      content = std::move(text);
    } else {
      ordered_json j{{"model", model.name}, {"path", i}, {"seed", path_seed(c, static_cast<int>(i))}};
      j["times"] = paths[i].times;
      ordered_json states = ordered_json::array();
      for (const auto& s : paths[i].states) states.push_back(vector_json(s));
      j["states"] = std::move(states);
      j["clamped_entries"] = paths[i].stats.clamped;
      j["halved_steps"] = paths[i].stats.halvings;
      content = j.dump() + "\n";
    }
    write_file(dir / name.str(), content);
  }
  out << "wrote " << paths.size() << " trajectories to " << dir.string() << '\n';
  return kOk;
}

std::vector<double> convergence_windows(double T, double dt) {
  std::vector<double> w;
  for (int k = 1; k <= 6; ++k) {
    const double t = std::round(T * k / 6.0 / dt) * dt;
    if (t > 0.0 && (w.empty() || t > w.back())) w.push_back(t);
  }
  return w;
}

int cmd_equilibrium(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto model = load_model(c);
  Type2Options type2;
  type2.empirical = false;
  const auto cert = certify_auto(model, c.method, optional_rational(c.lambda, "--lambda"),
                                 optional_rational(c.rho1, "--rho1"), type2);
  if (!cert.certified() && !c.force) {
    err << "error: model '" << model.name << "' is not certified (" << to_string(cert.kind)
        << "); rerun with --force to iterate anyway\n";
    return kRefused;
  }
  const auto options = integrator(c);
  const double T = c.window;
  std::vector<Eigen::VectorXd> starts{Eigen::VectorXd::Zero(model.dim()), Eigen::VectorXd::Constant(model.dim(), 10.0)};
  if (!c.x0.empty()) starts.push_back(start_state(c, model.dim(), 0.0));
  const auto windows = convergence_windows(T, c.dt);

  struct PathResult {
    EquilibriumEstimate estimate;
    PullbackConvergence convergence;
    double cross_check = 0.0;
  };
  std::vector<PathResult> results(static_cast<std::size_t>(c.ensemble));
  parallel_for(results.size(), pool_size(c.threads), [&](std::size_t i) {
    const auto grid = WienerGrid::sample(model.noise_dims(), -T, 0.0, c.dt, path_seed(c, static_cast<int>(i)));
    auto& r = results[i];
    try {
      r.estimate = gain_fixed_point(model, grid, T, c.tol, c.max_iter, options);
    } catch (const ConvergenceError& e) {
      r.estimate = e.estimate();
    }
    r.convergence = pullback_convergence(model, grid, starts, windows, options);
    r.cross_check = (r.estimate.value_at_zero - r.convergence.states.back().front()).cwiseAbs().maxCoeff();
  });

  bool all_converged = true;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(model.dim());
  double worst_cross = 0.0;
  ordered_json per_path = ordered_json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    all_converged = all_converged && r.estimate.converged;
    mean += r.estimate.value_at_zero / static_cast<double>(results.size());
    worst_cross = std::max(worst_cross, r.cross_check);
    ordered_json distances = ordered_json::array();
    for (std::size_t w = 0; w < windows.size(); ++w) distances.push_back(r.convergence.max_distance(w));
    per_path.push_back({{"path", i},
                        {"seed", path_seed(c, static_cast<int>(i))},
                        {"value_at_zero", vector_json(r.estimate.value_at_zero)},
                        {"iterations", r.estimate.iterations},
                        {"converged", r.estimate.converged},
                        {"residual_history", r.estimate.residual_history},
                        {"pullback", {{"windows", windows}, {"max_pairwise_distance", distances},
                                      {"monotone_trend", r.convergence.monotone_trend}}},
                        {"pullback_vs_fixed_point", r.cross_check}});
  }
  const auto& first = results.front().estimate;
  ordered_json j{{"model", model.name},
                 {"certificate", {{"kind", to_string(cert.kind)}, {"verdict", to_string(cert.verdict)}}},
                 {"forced", c.force && !cert.certified()},
                 {"seed", c.seed},
                 {"dt", c.dt},
                 {"window", T},
                 {"tol", c.tol},
                 {"converged", all_converged},
                 {"value_at_zero", vector_json(first.value_at_zero)},
                 {"iterations", first.iterations},
                 {"residual_history", first.residual_history},
                 {"ensemble_mean", vector_json(mean)},
                 {"max_pullback_vs_fixed_point", worst_cross},
                 {"per_path", std::move(per_path)}};

  std::string text;
  if (c.format == "csv") {
    text = "path,converged,iterations,pullback_vs_fixed_point";
    for (int k = 1; k <= model.dim(); ++k) text += ",x_" + std::to_string(k);
    text += '\n';
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& e = results[i].estimate;
      text += std::to_string(i) + "," + (e.converged ? "true" : "false") + "," + std::to_string(e.iterations) + "," +
              shortest(results[i].cross_check);
      for (Eigen::Index k = 0; k < e.value_at_zero.size(); ++k) text += "," + shortest(e.value_at_zero[k]);
      text += '\n';
    }
  } else {
    text = j.dump(2) + "\n";
  }
  out << text;
  if (!c.out_dir.empty()) {
    const fs::path dir(c.out_dir);
    write_file(dir / (c.format == "csv" ? "equilibrium.csv" : "equilibrium.json"), text);
    std::vector<Series> residuals;
    for (std::size_t i = 0; i < std::min<std::size_t>(4, results.size()); ++i) {
      Series s{"path " + std::to_string(i), {}, results[i].estimate.residual_history};
      for (std::size_t k = 0; k < s.y.size(); ++k) s.x.push_back(static_cast<double>(k + 1));
      residuals.push_back(std::move(s));
    }
    write_file(dir / "residuals.svg", svg_log_chart("Picard residuals", "iteration", residuals));
    std::vector<Series> distances;
    for (std::size_t i = 0; i < std::min<std::size_t>(4, results.size()); ++i) {
      Series s{"path " + std::to_string(i), windows, {}};
      for (std::size_t w = 0; w < windows.size(); ++w) s.y.push_back(results[i].convergence.max_distance(w));
      distances.push_back(std::move(s));
    }
    write_file(dir / "pullback.svg", svg_log_chart("Pull-back distances", "T", distances));
  }
  if (!all_converged) {
    err << (c.force ? "warning" : "error") << ": Picard iteration did not converge on every path\n";
    return c.force ? kOk : kNotConverged;
  }
  return kOk;
}

int cmd_lyapunov(const RunConfig& c, std::ostream& out) {
  const auto model = load_model(c);
  const double horizon = c.horizon > 0.0 ? c.horizon : 50.0;
  const Eigen::VectorXd x0 = start_state(c, model.dim(), 1.0);
  if (x0.norm() == 0.0) throw UsageError("--x0 must be nonzero for Lyapunov estimates");
  std::vector<double> exponents(static_cast<std::size_t>(c.ensemble));
  parallel_for(exponents.size(), pool_size(c.threads), [&](std::size_t i) {
    const auto grid = WienerGrid::sample(model.noise_dims(), 0.0, horizon, c.dt, path_seed(c, static_cast<int>(i)));
    exponents[i] = lyapunov_empirical(model.linear, grid, x0, horizon);
  });
  const auto report = mao_bound(model.linear);
  double mean = 0.0;
  for (double e : exponents) mean += e / static_cast<double>(exponents.size());
  double var = 0.0;
  for (double e : exponents) var += (e - mean) * (e - mean);
  const double std_error =
      exponents.size() > 1 ? std::sqrt(var / static_cast<double>(exponents.size() - 1) / static_cast<double>(exponents.size())) : 0.0;
  const double bound = to_double(report.bound);

  std::string text;
  if (c.format == "csv") {
    text = "path,seed,exponent\n";
    for (std::size_t i = 0; i < exponents.size(); ++i) {
      text += std::to_string(i) + "," + std::to_string(path_seed(c, static_cast<int>(i))) + "," + shortest(exponents[i]) + "\n";
    }
  } else {
    ordered_json per_path = ordered_json::array();
    for (std::size_t i = 0; i < exponents.size(); ++i) {
      per_path.push_back({{"path", i}, {"seed", path_seed(c, static_cast<int>(i))}, {"empirical_exponent", exponents[i]}});
    }
    ordered_json j{
        {"model", model.name},
        {"horizon", horizon},
        {"dt", c.dt},
        {"seed", c.seed},
        {"mao_bound",
         {{"K1_squared", to_fraction_string(report.frobenius_square)},
          {"K1", to_fraction_string(report.k1_rounded)},
          {"K2", to_fraction_string(report.k2)},
          {"K3", to_fraction_string(report.k3)},
          {"bound", {{"decimal", to_decimal_string(report.bound)}, {"exact", to_fraction_string(report.bound)}}},
          {"sharp_bound", report.sharp_bound_decimal()},
          {"certifies_negative_exponent", report.certifies_negative_exponent()}}},
        {"summary",
         {{"empirical_mean", mean},
          {"std_error", std_error},
          {"paths", exponents.size()},
          {"mean_minus_bound", mean - bound},
          {"mean_below_bound", mean <= bound}}},
        {"per_path", std::move(per_path)}};
    text = j.dump(2) + "\n";
  }
  out << text;
  if (!c.out_dir.empty()) write_file(fs::path(c.out_dir) / (c.format == "csv" ? "lyapunov.csv" : "lyapunov.json"), text);
  return kOk;
}

void add_common(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--builtin", c.builtin, "built-in model (" + [] {
    std::string s;
    for (const auto& n : builtin_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
  }() + ")");
  cmd->add_option("--model", c.model_path, "TOML model file");
  cmd->add_option("--param", c.params, "builtin override key=value (repeatable)");
  cmd->add_option("--seed", c.seed, "run seed")->capture_default_str();
  cmd->add_option("--dt", c.dt, "time step")->capture_default_str();
  cmd->add_option("--window", c.window, "pull-back window T")->capture_default_str();
  cmd->add_option("--ensemble", c.ensemble, "number of paths N")->capture_default_str();
  cmd->add_option("--tol", c.tol, "fixed-point tolerance")->capture_default_str();
  cmd->add_option("--out", c.out_dir, "output directory");
  cmd->add_option("--format", c.format, "json or csv (simulate defaults to csv, others to json)");
  cmd->add_option("--method", c.method, "corollary, chain, diagonal or type2");
  cmd->add_option("--lambda", c.lambda, "chain decay rate (decimal or p/q)");
  cmd->add_option("--rho1", c.rho1, "chain reserve rho1 (decimal or p/q)");
  cmd->add_flag("--force", c.force, "run equilibrium on uncertified models and accept non-convergence");
  cmd->add_option("--x0", c.x0, "initial state, comma separated (one value is broadcast)");
  cmd->add_option("--horizon", c.horizon, "forward horizon (simulate: 10, lyapunov: 50)");
  cmd->add_option("--threads", c.threads, "worker threads (default: all cores, capped by SGAIN_THREADS)");
  cmd->add_option("--every", c.every, "record every k-th step (simulate)")->capture_default_str();
  cmd->add_option("--max-iter", c.max_iter, "Picard iteration limit")->capture_default_str();
  cmd->add_option("--scheme", c.scheme, "em or splitting")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Small-gain certificates and random equilibria of stochastic feedback systems", "sgain"};
  app.require_subcommand(1);
  RunConfig config;
  struct Command {
    const char* name;
    const char* help;
  };
  const Command commands[] = {{"check", "certify the small-gain condition"},
                              {"simulate", "integrate sample paths forward and write trajectories"},
                              {"equilibrium", "estimate the random equilibrium by Picard iteration"},
                              {"lyapunov", "Mao bound and empirical top Lyapunov exponents"}};
  for (const auto& cmd : commands) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    add_common(sub, config);
    sub->callback([&config, name = cmd.name] { config.command = name; });
  }

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kError;
  }

  try {
    validate(config);
    if (config.format.empty()) config.format = config.command == "simulate" ? "csv" : "json";
    if (config.command == "check") return cmd_check(config, out);
    if (config.command == "simulate") return cmd_simulate(config, out);
    if (config.command == "equilibrium") return cmd_equilibrium(config, out, err);
    if (config.command == "lyapunov") return cmd_lyapunov(config, out);
    err << "error: unknown command\n";
    return kError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kError;
  }
}

}  // namespace sgain::cli
