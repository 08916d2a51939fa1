// qprobe: tables of dephasing, QFI and optimal probing times, simulated
// estimation campaigns and a Monte Carlo check of the coherence decay.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "output.hpp"
#include "qprobe/experiment.hpp"
#include "qprobe/kernels.hpp"
#include "qprobe/metrology.hpp"
#include "qprobe/trajectories.hpp"

namespace qprobe::cli {
namespace {

constexpr int kExitInvalid = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct Globals {
  std::string out;
  std::string format = "csv";
  std::uint64_t seed = 42;
  std::string kernel = "ou";
  double alpha = NoiseKernel::kDefaultAlpha;
  unsigned threads = 0;

  NoiseKernel make_kernel() const {
    return kernel == "pl" ? NoiseKernel::power_law(alpha) : NoiseKernel::from_name(kernel);
  }
  Format output_format() const { return format == "json" ? Format::json : Format::csv; }
};

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + format_double(xs[i]);
  return s;
}

std::string join(const std::vector<std::uint64_t>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
  return s;
}

Meta base_meta(const std::string& command, const Globals& g) {
  Meta m;
  m.command = command;
  m.seed = g.seed;
  m.config.emplace_back("kernel", g.kernel);
  if (g.kernel == "pl") m.config.emplace_back("alpha", format_double(g.alpha));
  m.config.emplace_back("format", g.format);
  return m;
}

Cell alpha_cell(const NoiseKernel& k) {
  if (k.alpha()) return *k.alpha();
  return std::monostate{};
}

std::vector<double> log_grid(double lo, double hi, int n) {
  detail::require(lo > 0.0 && hi >= lo, "log grid needs 0 < min <= max");
  detail::require(n >= 1, "grid needs at least one point");
  std::vector<double> out;
  if (n == 1) return {lo};
  for (int i = 0; i < n; ++i) out.push_back(i == n - 1 ? hi : lo * std::pow(hi / lo, double(i) / (n - 1)));
  return out;
}

std::vector<double> lin_grid(double lo, double hi, int n) {
  detail::require(hi >= lo, "linear grid needs min <= max");
  detail::require(n >= 1, "grid needs at least one point");
  std::vector<double> out;
  if (n == 1) return {lo};
  for (int i = 0; i < n; ++i) out.push_back(i == n - 1 ? hi : lo + (hi - lo) * double(i) / (n - 1));
  return out;
}

void write_table(const Globals& g, const Meta& meta, const Table& table, nlohmann::ordered_json extra = {}) {
  const auto path = resolve_output(g.out, meta.command, g.output_format());
  emit(path, g.output_format() == Format::json ? render_json(meta, table, std::move(extra)) : render_csv(meta, table));
}

// beta-table ---------------------------------------------------------------

struct BetaTableArgs {
  std::vector<double> g{0.01, 0.1, 1.0, 10.0, 100.0};
  std::vector<double> tau{0.0, 0.1, 0.5, 1.0, 2.0, 5.0};
};

int run_beta_table(const Globals& gl, const BetaTableArgs& a) {
  const auto kernel = gl.make_kernel();
  Table t{{"kernel", "alpha", "g", "tau", "beta", "dbeta_dg"}, {}};
  for (double g : a.g)
    for (double tau : a.tau) {
      const AdimensionalPoint p(g, tau);
      t.add({std::string(kernel.name()), alpha_cell(kernel), g, tau, beta(kernel, p), dbeta_dg(kernel, p)});
    }
  Meta m = base_meta("beta-table", gl);
  m.config.emplace_back("g", join(a.g));
  m.config.emplace_back("tau", join(a.tau));
  write_table(gl, m, t);
  return 0;
}

// qsnr-surface -------------------------------------------------------------

struct SurfaceArgs {
  double g_min = 1e-4;
  double g_max = 1e4;
  int g_points = 41;
  double tau_min = 0.0;
  double tau_max = 10.0;
  int tau_points = 101;
  std::string tau_scale = "lin";
};

int run_surface(const Globals& gl, const SurfaceArgs& a) {
  const auto kernel = gl.make_kernel();
  const auto gs = log_grid(a.g_min, a.g_max, a.g_points);
  const auto taus = a.tau_scale == "log" ? log_grid(a.tau_min, a.tau_max, a.tau_points)
                                         : lin_grid(a.tau_min, a.tau_max, a.tau_points);
  Table t{{"kernel", "alpha", "g", "tau", "qfi", "qsnr"}, {}};
  for (double g : gs)
    for (double tau : taus) {
      const auto m = evaluate(kernel, AdimensionalPoint(g, tau));
      t.add({std::string(kernel.name()), alpha_cell(kernel), g, tau, m.qfi, m.qsnr});
    }
  Meta m = base_meta("qsnr-surface", gl);
  m.config.emplace_back("g-min", format_double(a.g_min));
  m.config.emplace_back("g-max", format_double(a.g_max));
  m.config.emplace_back("g-points", std::to_string(a.g_points));
  m.config.emplace_back("tau-min", format_double(a.tau_min));
  m.config.emplace_back("tau-max", format_double(a.tau_max));
  m.config.emplace_back("tau-points", std::to_string(a.tau_points));
  m.config.emplace_back("tau-scale", a.tau_scale);
  write_table(gl, m, t);
  return 0;
}

// optimal ------------------------------------------------------------------

struct OptimalArgs {
  std::vector<double> g;
  double g_min = 1e-4;
  double g_max = 1e4;
  int g_points = 33;
  double tol = 1e-8;
  bool all_kernels = false;
  bool fit = false;
};

std::string law_name(ScalingLaw law) { return law == ScalingLaw::power_law ? "power_law" : "sqrt_linear"; }

int run_optimal(const Globals& gl, const OptimalArgs& a) {
  const auto gs = a.g.empty() ? log_grid(a.g_min, a.g_max, a.g_points) : a.g;
  std::vector<NoiseKernel> kernels{gl.make_kernel()};
  if (a.all_kernels)
    kernels = {NoiseKernel::ornstein_uhlenbeck(), NoiseKernel::gaussian(), NoiseKernel::power_law(gl.alpha)};

  Meta m = base_meta("optimal", gl);
  if (a.all_kernels) {
    m.config.front().second = "all";
    if (gl.kernel != "pl") m.config.emplace(m.config.begin() + 1, "alpha", format_double(gl.alpha));
  }
  if (a.g.empty()) {
    m.config.emplace_back("g-min", format_double(a.g_min));
    m.config.emplace_back("g-max", format_double(a.g_max));
    m.config.emplace_back("g-points", std::to_string(a.g_points));
  } else {
    m.config.emplace_back("g", join(a.g));
  }
  m.config.emplace_back("tol", format_double(a.tol));
  m.config.emplace_back("fit", a.fit ? "true" : "false");

  Table t{{"kernel", "alpha", "g", "tau_m", "r_m"}, {}};
  nlohmann::ordered_json fits = nlohmann::ordered_json::array();
  for (const auto& kernel : kernels) {
    const auto points = optimal_times(kernel, gs, a.tol, gl.threads);
    for (const auto& p : points) t.add({std::string(kernel.name()), alpha_cell(kernel), p.g, p.tau_m, p.r_m});
    if (!a.fit) continue;
    for (const bool small : {true, false}) {
      std::vector<OptimalPoint> regime;
      for (const auto& p : points)
        if (small ? p.g <= kSmallGLimit : p.g >= kLargeGLimit) regime.push_back(p);
      for (const auto q : {OptimalQuantity::tau_m, OptimalQuantity::r_m}) {
        const std::string label = std::string(kernel.name()) + (small ? " small-g " : " large-g ") +
                                  (q == OptimalQuantity::tau_m ? "tau_m" : "r_m");
        try {
          const auto f = scaling_fit(std::span<const OptimalPoint>(regime), q);
          std::string line = "fit " + label + ": " + law_name(f.law);
          if (f.law == ScalingLaw::power_law)
            line += " exponent=" + format_double(f.exponent) + " prefactor=" + format_double(f.prefactor);
          else
            line += " intercept=" + format_double(f.intercept) + " slope=" + format_double(f.slope);
          line += " residual=" + format_double(f.residual) + " points=" + std::to_string(f.used);
          if (f.mixed_regime) line += " mixed-regime";
          m.notes.push_back(line);
          fits.push_back({{"kernel", kernel.name()},
                          {"regime", small ? "small_g" : "large_g"},
                          {"quantity", q == OptimalQuantity::tau_m ? "tau_m" : "r_m"},
                          {"law", law_name(f.law)},
                          {"exponent", f.exponent},
                          {"prefactor", f.prefactor},
                          {"intercept", f.intercept},
                          {"slope", f.slope},
                          {"residual", f.residual},
                          {"points", f.used},
                          {"mixed_regime", f.mixed_regime}});
        } catch (const invalid_parameter& e) {
          m.notes.push_back("fit " + label + ": skipped (" + e.what() + ")");
        }
      }
    }
  }
  nlohmann::ordered_json extra;
  if (a.fit) extra["fits"] = fits;
  write_table(gl, m, t, extra);
  return 0;
}

// campaign -----------------------------------------------------------------

struct CampaignArgs {
  std::vector<double> g_true{0.01, 0.1, 1.0, 100.0};
  std::vector<std::uint64_t> m{100, 1000, 10000, 100000};
  std::uint64_t replicas = 100;
  double tau = 0.0;  // 0 selects the optimal time
  std::string summary;
};

nlohmann::ordered_json cell_json(const CampaignCell& c) {
  return {{"M", c.m_total},
          {"replicas", c.replicas},
          {"in_range", c.in_range},
          {"exclusion_rate", c.exclusion_rate},
          {"mean_ratio", c.mean_ratio},
          {"sd_ratio", c.sd_ratio},
          {"se_ratio", c.se_ratio},
          {"empirical_variance", c.empirical_variance},
          {"mean_sigma2", c.mean_sigma2},
          {"qcr_bound", c.qcr_bound}};
}

int run_campaign_cmd(const Globals& gl, const CampaignArgs& a) {
  const auto kernel = gl.make_kernel();
  Meta m = base_meta("campaign", gl);
  m.config.emplace_back("g-true", join(a.g_true));
  m.config.emplace_back("m", join(a.m));
  m.config.emplace_back("replicas", std::to_string(a.replicas));
  m.config.emplace_back("tau", a.tau > 0.0 ? format_double(a.tau) : "optimal");

  Table t{{"kernel", "alpha", "g_true", "tau", "M", "replica", "seed", "N", "g_hat", "in_range", "sigma2",
           "qcr_bound"},
          {}};
  nlohmann::ordered_json campaigns = nlohmann::ordered_json::array();
  for (std::size_t gi = 0; gi < a.g_true.size(); ++gi) {
    CampaignConfig c;
    c.kernel = kernel;
    c.g_true = a.g_true[gi];
    c.tau_policy = a.tau > 0.0 ? TauPolicy::fixed : TauPolicy::optimal;
    c.tau = a.tau;
    c.m_schedule = a.m;
    c.replicas = a.replicas;
    c.base_seed = derive_seed(gl.seed, gi);
    const auto records = run_campaign(c, gl.threads);
    for (const auto& r : records) {
      Cell sigma2 = std::monostate{};
      if (r.sigma2) sigma2 = *r.sigma2;
      t.add({std::string(r.kernel.name()), alpha_cell(r.kernel), r.g_true, r.tau, r.m_total, r.replica, r.seed, r.n_plus, r.g_hat,
             r.in_range, sigma2, r.qcr_bound});
    }
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& cell : summarize(records)) {
      cells.push_back(cell_json(cell));
      std::cerr << "g_true=" << format_double(c.g_true) << " M=" << cell.m_total
                << " mean_ratio=" << format_double(cell.mean_ratio) << " se=" << format_double(cell.se_ratio)
                << " var/qcr=" << format_double(cell.empirical_variance / cell.qcr_bound)
                << " excluded=" << format_double(cell.exclusion_rate) << '\n';
    }
    campaigns.push_back({{"kernel", kernel.name()},
                         {"alpha", kernel.alpha() ? nlohmann::ordered_json(*kernel.alpha()) : nlohmann::ordered_json(nullptr)},
                         {"g_true", c.g_true},
                         {"tau", records.front().tau},
                         {"tau_policy", a.tau > 0.0 ? "fixed" : "optimal"},
                         {"base_seed", c.base_seed},
                         {"cells", cells}});
  }
  const auto path = resolve_output(gl.out, "campaign", gl.output_format());
  emit(path, gl.output_format() == Format::json ? render_json(m, t) : render_csv(m, t));

  std::filesystem::path summary = a.summary;
  if (summary.empty() && !path.empty()) summary = path.string() + ".summary.json";
  if (!summary.empty()) {
    const nlohmann::ordered_json doc = {{"meta", meta_json(m)}, {"campaigns", campaigns}};
    emit(summary, doc.dump(2) + "\n");
  }
  return 0;
}

// validate -----------------------------------------------------------------

struct ValidateArgs {
  double g = 1.0;
  double tau = 1.0;
  std::uint64_t n_traj = 10000;
  double dt = 0.0;
  std::string dump;
};

int run_validate(const Globals& gl, const ValidateArgs& a) {
  const auto kernel = gl.make_kernel();
  const AdimensionalPoint point(a.g, a.tau);
  MonteCarloOptions opt;
  opt.n_traj = a.n_traj;
  opt.dt = a.dt;
  opt.seed = gl.seed;
  opt.threads = gl.threads;
  const auto est = coherence_monte_carlo(kernel, a.g, a.tau, opt);
  const double exact = std::exp(-2.0 * beta(kernel, point));
  double z = 0.0;
  if (est.standard_error > 0.0) z = (est.value - exact) / est.standard_error;
  else if (est.value != exact) z = INFINITY;

  Meta m = base_meta("validate", gl);
  m.config.emplace_back("g", format_double(a.g));
  m.config.emplace_back("tau", format_double(a.tau));
  m.config.emplace_back("n-traj", std::to_string(a.n_traj));
  m.config.emplace_back("dt", a.dt > 0.0 ? format_double(a.dt) : "auto");
  Table t{{"kernel", "alpha", "g", "tau", "n_traj", "dt", "mc_coherence", "standard_error", "closed_form", "z"}, {}};
  t.add({std::string(kernel.name()), alpha_cell(kernel), a.g, a.tau, a.n_traj, est.dt, est.value, est.standard_error, exact, z});
  write_table(gl, m, t);

  if (!a.dump.empty()) {
    const double dt = est.dt > 0.0 ? est.dt : monte_carlo_time_step(kernel, a.g, a.tau, opt);
    const auto steps = static_cast<std::size_t>(std::lround(a.tau / dt)) + 1;
    detail::require(steps * a.n_traj <= 50'000'000, "trajectory dump larger than 5e7 samples; lower --n-traj");
    const auto ens = sample_trajectories(kernel, a.g, steps, dt, a.n_traj, gl.seed, gl.threads);
    std::ostringstream buf;
    write_csv(buf, ens);
    emit(a.dump, buf.str());
  }
  if (std::abs(z) >= 3.0) {
    std::cerr << "validate: Monte Carlo coherence is " << format_double(z) << " standard errors from e^{-2 beta}\n";
    return kExitValidation;
  }
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Single-qubit probing of classical Gaussian noise", "qprobe"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "Read settings from an INI file (flags take precedence)");
  app.require_subcommand(1);
  app.fallthrough();

  Globals gl;
  app.add_option("--out", gl.out, "Output file (default: $QPROBE_OUTPUT_DIR/<command>.<ext> or stdout)");
  app.add_option("--format", gl.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app.add_option("--seed", gl.seed, "Base random seed")->capture_default_str();
  app.add_option("--kernel", gl.kernel, "Noise kernel")
      ->check(CLI::IsMember({"ou", "gauss", "pl"}))
      ->capture_default_str();
  app.add_option("--alpha", gl.alpha, "Power-law exponent (> 2)")->capture_default_str();
  app.add_option("--threads", gl.threads, "Worker threads, 0 for all cores; never changes results")
      ->capture_default_str();

  BetaTableArgs bt;
  auto* beta_cmd = app.add_subcommand("beta-table", "Dephasing factor and its g-derivative on a (g, tau) grid");
  beta_cmd->add_option("--g", bt.g, "g values")->delimiter(',')->capture_default_str();
  beta_cmd->add_option("--tau", bt.tau, "tau values")->delimiter(',')->capture_default_str();

  SurfaceArgs sf;
  auto* surface_cmd = app.add_subcommand("qsnr-surface", "QSNR over a log-g by tau grid, long format");
  surface_cmd->add_option("--g-min", sf.g_min)->capture_default_str();
  surface_cmd->add_option("--g-max", sf.g_max)->capture_default_str();
  surface_cmd->add_option("--g-points", sf.g_points)->capture_default_str();
  surface_cmd->add_option("--tau-min", sf.tau_min)->capture_default_str();
  surface_cmd->add_option("--tau-max", sf.tau_max)->capture_default_str();
  surface_cmd->add_option("--tau-points", sf.tau_points)->capture_default_str();
  surface_cmd->add_option("--tau-scale", sf.tau_scale)->check(CLI::IsMember({"lin", "log"}))->capture_default_str();

  OptimalArgs op;
  auto* optimal_cmd = app.add_subcommand("optimal", "Optimal interaction time and maximal QSNR versus g");
  optimal_cmd->add_option("--g", op.g, "Explicit g values (overrides the log grid)")->delimiter(',');
  optimal_cmd->add_option("--g-min", op.g_min)->capture_default_str();
  optimal_cmd->add_option("--g-max", op.g_max)->capture_default_str();
  optimal_cmd->add_option("--g-points", op.g_points)->capture_default_str();
  optimal_cmd->add_option("--tol", op.tol, "Relative width of the final tau interval")->capture_default_str();
  optimal_cmd->add_flag("--all-kernels", op.all_kernels, "Tabulate OU, Gaussian and power-law together");
  optimal_cmd->add_flag("--fit", op.fit, "Fit the small-g and large-g asymptotic laws");

  CampaignArgs cp;
  auto* campaign_cmd = app.add_subcommand("campaign", "Simulated estimation campaigns against the QCR bound");
  campaign_cmd->add_option("--g-true", cp.g_true, "True g values")->delimiter(',')->capture_default_str();
  campaign_cmd->add_option("--m", cp.m, "Increasing measurement counts")->delimiter(',')->capture_default_str();
  campaign_cmd->add_option("--replicas", cp.replicas)->capture_default_str();
  campaign_cmd->add_option("--tau", cp.tau, "Fixed interaction time (default: optimal per g)");
  campaign_cmd->add_option("--summary", cp.summary, "Summary JSON path (default: <out>.summary.json)");

  ValidateArgs va;
  auto* validate_cmd = app.add_subcommand("validate", "Monte Carlo coherence against e^{-2 beta}");
  validate_cmd->add_option("--g", va.g)->capture_default_str();
  validate_cmd->add_option("--tau", va.tau)->capture_default_str();
  validate_cmd->add_option("--n-traj", va.n_traj)->capture_default_str();
  validate_cmd->add_option("--dt", va.dt, "Time step (default: automatic)");
  validate_cmd->add_option("--dump-trajectories", va.dump, "Also write the sampled noise paths as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*beta_cmd) return run_beta_table(gl, bt);
    if (*surface_cmd) return run_surface(gl, sf);
    if (*optimal_cmd) return run_optimal(gl, op);
    if (*campaign_cmd) return run_campaign_cmd(gl, cp);
    if (*validate_cmd) return run_validate(gl, va);
  } catch (const invalid_parameter& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const numerical_failure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return 0;
}

}  // namespace qprobe::cli

int main(int argc, char** argv) { return qprobe::cli::run(argc, argv); }
