#include "commands.hpp"

#include "grid.hpp"

#include "memcost/cost_engine.hpp"
#include "memcost/errors.hpp"
#include "memcost/finite_n_lab.hpp"
#include "memcost/spectra.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

namespace memcost::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Validation helpers

double require_gamma(const RunConfig& cfg) {
  if (!cfg.gamma) throw UsageError(cfg.command + ": --gamma is required");
  if (!std::isfinite(*cfg.gamma) || !(*cfg.gamma > 1.0)) {
    throw UsageError("--gamma must be a finite number > 1");
  }
  return *cfg.gamma;
}

double require_sigma2(const RunConfig& cfg) {
  if (!cfg.sigma2) throw UsageError(cfg.command + ": --sigma2 is required");
  if (!std::isfinite(*cfg.sigma2) || !(*cfg.sigma2 > 0.0)) {
    throw UsageError("--sigma2 must be a finite number > 0");
  }
  return *cfg.sigma2;
}

// eps2 from --eps2 or --eps; nullopt if neither was given.
std::optional<double> level_eps2(const RunConfig& cfg) {
  if (cfg.eps2 && cfg.eps) throw UsageError("give only one of --eps2 and --eps");
  if (cfg.eps2) {
    if (!std::isfinite(*cfg.eps2) || *cfg.eps2 < 0.0) throw UsageError("--eps2 must be >= 0");
    return *cfg.eps2;
  }
  if (cfg.eps) {
    if (!std::isfinite(*cfg.eps) || *cfg.eps < 0.0) throw UsageError("--eps must be >= 0");
    return *cfg.eps * *cfg.eps;
  }
  return std::nullopt;
}

std::vector<double> grid_eps2(const RunConfig& cfg) {
  std::vector<double> g;
  try {
    g = parse_grid(cfg.grid);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  for (double& v : g) {
    if (v < 0.0) throw UsageError("grid values must be >= 0");
    if (cfg.grid_units == "eps") v = v * v;
  }
  return g;
}

std::unique_ptr<PopulationSpectrum> load_population(const RunConfig& cfg, std::ostream& err) {
  if (cfg.pop.empty()) return nullptr;
  auto pop = std::make_unique<PopulationSpectrum>(PopulationSpectrum::from_file(cfg.pop));
  for (const auto& w : pop->warnings()) err << "warning: " << cfg.pop << ": " << w << '\n';
  return pop;
}

std::string num(double x) {
  return format_number(x);
}

void echo_config(OutputTable& t, const RunConfig& cfg) {
  t.add_config("command", cfg.command);
  if (cfg.gamma) t.add_config("gamma", num(*cfg.gamma));
  if (cfg.sigma2) t.add_config("sigma2", num(*cfg.sigma2));
  if (cfg.eps2) t.add_config("eps2", num(*cfg.eps2));
  if (cfg.eps) t.add_config("eps", num(*cfg.eps));
  if (cfg.rho) t.add_config("rho", num(*cfg.rho));
  if (cfg.n) t.add_config("n", std::to_string(*cfg.n));
  if (cfg.d) t.add_config("d", std::to_string(*cfg.d));
  if (!cfg.grid.empty()) {
    t.add_config("grid", cfg.grid);
    t.add_config("grid_units", cfg.grid_units);
  }
  if (!cfg.pop.empty()) t.add_config("pop", cfg.pop);
  if (cfg.command == "simulate" || cfg.command == "spectrum") {
    t.add_config("trials", std::to_string(cfg.trials));
    t.add_config("entries", cfg.entries);
    if (cfg.full) t.add_config("full", "true");
  }
  t.add_config("seed", std::to_string(cfg.seed));
}

void stamp(OutputTable& t, const RunConfig& cfg, const std::string& anchors) {
  echo_config(t, cfg);
  t.add_metadata("tool", "memcost");
  t.add_metadata("version", kVersion);
  t.add_metadata("seed", std::to_string(cfg.seed));
  t.add_metadata("anchors", anchors);
}

void add_population_metadata(OutputTable& t, const PopulationSpectrum& pop) {
  std::ostringstream atoms;
  for (std::size_t i = 0; i < pop.atoms().size(); ++i) {
    atoms << (i ? " " : "") << num(pop.atoms()[i].value) << '@' << num(pop.atoms()[i].weight);
  }
  t.add_metadata("population_atoms", atoms.str());
  t.add_metadata("kappa", num(pop.kappa()));
  for (std::size_t i = 0; i < pop.warnings().size(); ++i) {
    t.add_metadata("population_warning_" + std::to_string(i + 1), pop.warnings()[i]);
  }
}

EntryDist parse_entries(const std::string& s) {
  if (s == "gaussian") return EntryDist::gaussian;
  if (s == "rademacher") return EntryDist::rademacher;
  throw UsageError("--entries must be gaussian or rademacher");
}

}  // namespace

// ---------------------------------------------------------------------------
// threshold

OutputTable cmd_threshold(const RunConfig& cfg, std::ostream& err) {
  const double gamma = require_gamma(cfg);
  const NoiseLevel noise(require_sigma2(cfg));
  const auto pop = load_population(cfg, err);

  std::vector<std::string> header{"gamma",    "sigma2",  "eps_sigma2", "eps_sigma2_approx",
                                  "eps_ols2", "rho_ols"};
  if (pop) {
    header.insert(header.end(), {"eps_def2", "eps_def2_upper", "kappa"});
  }
  OutputTable t(header);
  stamp(t, cfg,
        "isotropic memorization threshold and its small-noise form; interpolation threshold; "
        "deformed threshold with its condition-number bound");
  const ThresholdReport r = threshold_report(gamma, noise, pop.get());
  std::vector<double> row{gamma, noise.sigma2(), r.eps_sigma2, r.eps_sigma2_approx, r.eps_ols2,
                          r.rho_ols};
  if (pop) {
    row.insert(row.end(), {*r.eps_def2, *r.eps_def2_upper, pop->kappa()});
    add_population_metadata(t, *pop);
  }
  t.add_row(row);
  return t;
}

// ---------------------------------------------------------------------------
// rho

OutputTable cmd_rho(const RunConfig& cfg, std::ostream& err) {
  const double gamma = require_gamma(cfg);
  const NoiseLevel noise(require_sigma2(cfg));
  const auto pop = load_population(cfg, err);
  std::vector<double> levels;
  const auto single = level_eps2(cfg);
  if (single && !cfg.grid.empty()) throw UsageError("rho: give either a level or --grid");
  if (single) {
    levels.push_back(*single);
  } else if (!cfg.grid.empty()) {
    levels = grid_eps2(cfg);
  } else {
    throw UsageError("rho: one of --eps2, --eps or --grid is required");
  }

  std::vector<std::string> header{"eps2", "rho", "regime", "residual", "status"};
  if (pop) header.insert(header.end(), {"rho_def", "residual_def", "status_def"});
  OutputTable t(header);
  stamp(t, cfg,
        "multiplier solving the asymptotic training-error equation; status 0 ok, 1 beyond the "
        "solver cap near 1/lambda_+, 2 below the deformed threshold");
  if (pop) add_population_metadata(t, *pop);
  for (double e2 : levels) {
    std::vector<double> row{e2, kNaN, kNaN, kNaN, 0.0};
    try {
      const RhoSolution s = solve_rho(gamma, noise, e2);
      row[1] = s.rho;
      row[2] = s.regime == Regime::above_threshold ? 1.0 : 0.0;
      row[3] = s.residual;
    } catch (const NearDivergenceError&) {
      row[2] = 1.0;
      row[4] = 1.0;
    }
    if (pop) {
      double status = 0.0;
      double rho = kNaN;
      double res = kNaN;
      try {
        const RhoSolution s = solve_rho_def(gamma, *pop, noise, e2);
        rho = s.rho;
        res = s.residual;
      } catch (const NearDivergenceError&) {
        status = 1.0;
      } catch (const RegimeError&) {
        status = 2.0;
      }
      row.insert(row.end(), {rho, res, status});
    }
    t.add_row(row);
  }
  return t;
}

// ---------------------------------------------------------------------------
// cost-curve

OutputTable cmd_cost_curve(const RunConfig& cfg, std::ostream& err) {
  const double gamma = require_gamma(cfg);
  const NoiseLevel noise(require_sigma2(cfg));
  if (cfg.grid.empty()) throw UsageError("cost-curve: --grid start:step:stop is required");
  const std::vector<double> levels = grid_eps2(cfg);
  const auto pop = load_population(cfg, err);

  std::vector<std::string> header{"eps2", "rho", "cost", "costbar", "regime", "status"};
  if (pop) header.push_back("aniso_lower_bound");
  OutputTable t(header);
  stamp(t, cfg,
        "asymptotic cost of not fitting against ridge (cost) and against the minimum-norm "
        "interpolant (costbar); regime 0 below / 1 above the memorization threshold; status 1 "
        "marks levels beyond the solver cap");
  const double gap = ols_gap(gamma, noise);
  const double threshold = memorization_threshold(gamma, noise);
  t.add_metadata("eps_sigma2", num(threshold));
  t.add_metadata("ols_gap", num(gap));
  std::optional<double> def_threshold;
  if (pop) {
    add_population_metadata(t, *pop);
    def_threshold = deformed_threshold(DeformedLaw(gamma, *pop), noise.sigma2());
    t.add_metadata("eps_def2", num(*def_threshold));
  }
  for (double e2 : levels) {
    std::vector<double> row{e2, kNaN, kNaN, kNaN, 1.0, 1.0};
    try {
      const CostPoint p = asymptotic_cost(gamma, noise, e2);
      row = {e2, p.rho, p.cost, p.costbar, p.regime == Regime::above_threshold ? 1.0 : 0.0, 0.0};
    } catch (const NearDivergenceError&) {
    } catch (const ConvergenceError&) {
    }
    if (pop) {
      double bound = kNaN;
      if (e2 < *def_threshold) {
        bound = 0.0;
      } else {
        try {
          bound = anisotropic_cost_lower_bound(gamma, *pop, noise, e2);
        } catch (const NearDivergenceError&) {
        } catch (const ConvergenceError&) {
        }
      }
      row.push_back(bound);
    }
    t.add_row(row);
  }
  return t;
}

// ---------------------------------------------------------------------------
// ols

OutputTable cmd_ols(const RunConfig& cfg, std::ostream&) {
  const double gamma = require_gamma(cfg);
  const NoiseLevel noise(require_sigma2(cfg));
  OutputTable t({"gamma", "sigma2", "ols_gap", "ols_gap_quadrature", "gap_over_sigma4",
                 "small_noise_limit", "rho_ols", "rho_ols_lower_bound", "eps_sigma2", "eps_ols2",
                 "eps_ols2_upper_bound"});
  stamp(t, cfg,
        "excess risk of the minimum-norm interpolant over ridge (two evaluation routes) and its "
        "small-noise constant; interpolation threshold with its bounds");
  const MPLaw law(gamma);
  const double q = 1.0 - 1.0 / gamma;
  const double gap = ols_gap(gamma, noise);
  const RhoSolution r = solve_rho_ols(gamma, noise);
  const double eps_s2 = memorization_threshold(gamma, noise);
  const double ratio = 2.0 * law.lambda_plus() / law.lambda_minus();
  t.add_row({gamma, noise.sigma2(), gap, ols_gap_quadrature(gamma, noise), gap / noise.sigma4(),
             1.0 / (gamma * q * q * q), r.rho, 1.0 / (2.0 * law.lambda_plus()), eps_s2,
             r.target_eps2, ratio * ratio * eps_s2});
  return t;
}

// ---------------------------------------------------------------------------
// spectrum

OutputTable cmd_spectrum(const RunConfig& cfg, std::ostream&) {
  if (!cfg.n) throw UsageError("spectrum: --n is required");
  if (*cfg.n < 1) throw UsageError("--n must be positive");
  int d = 0;
  if (cfg.d) {
    d = *cfg.d;
  } else if (cfg.gamma) {
    d = static_cast<int>(std::lround(*cfg.gamma * *cfg.n));
  } else {
    throw UsageError("spectrum: one of --d or --gamma is required");
  }
  if (d <= *cfg.n) {
    throw UsageError("spectrum: need d > n (aspect ratio d/n above 1), got n = " +
                     std::to_string(*cfg.n) + ", d = " + std::to_string(d));
  }
  if (cfg.trials < 1) throw UsageError("--trials must be >= 1");

  ExperimentConfig ec;
  ec.n = *cfg.n;
  ec.d = d;
  ec.entries = parse_entries(cfg.entries);
  ec.seed = cfg.seed;
  ec.trials = cfg.trials;
  const MPLaw law(ec.gamma());

  OutputTable t({"x", "empirical_cdf", "limit_cdf"});
  stamp(t, cfg,
        "empirical spectrum of (1/d) X X^T against the Marchenko-Pastur law; extreme "
        "eigenvalues against the support edges");
  double max_dev = 0.0;
  double min_dev = 0.0;
  std::vector<CdfPoint> table;
  double ks = 0.0;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const EmpiricalSpectrum spec = esd_from_design(sample_design(ec, trial).X);
    const BaiYinDeviation by = bai_yin_check(spec, law);
    max_dev += by.max_rel_dev / cfg.trials;
    min_dev += by.min_rel_dev / cfg.trials;
    if (trial == 0) {
      table = cdf_table(spec, law, 100);
      ks = kolmogorov_distance(spec, law, 100);
    }
  }
  t.add_metadata("lambda_minus", num(law.lambda_minus()));
  t.add_metadata("lambda_plus", num(law.lambda_plus()));
  t.add_metadata("mean_max_rel_dev", num(max_dev));
  t.add_metadata("mean_min_rel_dev", num(min_dev));
  t.add_metadata("kolmogorov_distance_trial0", num(ks));
  for (const CdfPoint& p : table) t.add_row({p.x, p.empirical, p.limit});
  return t;
}

// ---------------------------------------------------------------------------
// simulate

SimulateOutput cmd_simulate(const RunConfig& cfg, std::ostream& err) {
  if (!cfg.n || !cfg.d) throw UsageError("simulate: --n and --d are required");
  const double sigma2 = require_sigma2(cfg);
  if (cfg.trials < 1) throw UsageError("--trials must be >= 1");
  if (*cfg.n < 1) throw UsageError("--n must be positive");
  if (*cfg.d <= *cfg.n) {
    throw RegimeError("simulate: d = " + std::to_string(*cfg.d) + " must exceed n = " +
                      std::to_string(*cfg.n) +
                      "; the proportional regime requires d/n > 1 (overparameterized designs)");
  }
  const auto level = level_eps2(cfg);
  if (level && cfg.rho) throw UsageError("simulate: give either --rho or --eps2/--eps");
  if (!level && !cfg.rho) throw UsageError("simulate: one of --rho, --eps2, --eps is required");
  if (cfg.rho && (!std::isfinite(*cfg.rho) || *cfg.rho < 0.0)) {
    throw UsageError("--rho must be >= 0");
  }

  ExperimentConfig ec;
  ec.n = *cfg.n;
  ec.d = *cfg.d;
  ec.sigma2 = sigma2;
  ec.entries = parse_entries(cfg.entries);
  ec.seed = cfg.seed;
  ec.trials = cfg.trials;
  ec.target = level ? RhoOrEps::eps2(*level) : RhoOrEps::rho(*cfg.rho);
  if (const auto pop = load_population(cfg, err)) ec.population = *pop;

  const TrialMode mode = cfg.full ? TrialMode::full : TrialMode::spectral;
  const std::vector<TrialMetrics> trials = run_trials(ec, mode);

  std::vector<std::string> header{"trial", "rho", "train0", "train", "cost", "ols_gap"};
  if (cfg.full) {
    header.insert(header.end(), {"pred_direct", "train_direct", "identity_dev", "stationarity"});
  }
  SimulateOutput out{OutputTable(header), OutputTable()};
  const std::string anchors =
      "finite-n training error of ridge (train0), of the constrained estimator (train), its "
      "prediction-error growth (cost) and the interpolant gap, against asymptotic limits";
  stamp(out.trials, cfg, anchors);
  if (!ec.population.is_identity()) add_population_metadata(out.trials, ec.population);
  for (const TrialMetrics& m : trials) {
    std::vector<double> row{static_cast<double>(m.trial), m.rho, m.train0, m.train, m.cost,
                            m.ols_gap};
    if (cfg.full) {
      row.insert(row.end(), {m.pred_direct, m.train_direct, m.identity_dev, m.stationarity});
    }
    out.trials.add_row(row);
  }

  const AsymptoticTargets target = asymptotic_targets(ec);
  std::vector<std::string> sh{"n", "d", "gamma", "trials", "rho_mean"};
  std::vector<double> srow{static_cast<double>(ec.n), static_cast<double>(ec.d), ec.gamma(),
                           static_cast<double>(ec.trials)};
  std::vector<double> rhos;
  for (const auto& m : trials) rhos.push_back(m.rho);
  srow.push_back(mean_se(rhos).mean);
  auto add_metric = [&](const std::string& name, double TrialMetrics::*field, double tgt) {
    std::vector<double> xs;
    for (const auto& m : trials) xs.push_back(m.*field);
    const MeanSe ms = mean_se(xs);
    double dev = kNaN;
    if (std::isfinite(tgt)) dev = tgt != 0.0 ? std::fabs(ms.mean - tgt) / std::fabs(tgt)
                                             : std::fabs(ms.mean - tgt);
    sh.insert(sh.end(), {name + "_mean", name + "_se", name + "_target", name + "_rel_dev"});
    srow.insert(srow.end(), {ms.mean, ms.se, tgt, dev});
  };
  add_metric("train0", &TrialMetrics::train0, target.train0);
  add_metric("train", &TrialMetrics::train, target.train);
  add_metric("cost", &TrialMetrics::cost, target.cost);
  add_metric("ols_gap", &TrialMetrics::ols_gap, target.ols_gap);
  out.summary = OutputTable(sh);
  stamp(out.summary, cfg, anchors);
  out.summary.add_metadata("cost_target_kind",
                           target.cost_is_lower_bound ? "lower_bound" : "limit");
  out.summary.add_metadata("train0_target_kind", ec.population.is_identity()
                                                     ? "memorization_threshold"
                                                     : "deformed_threshold");
  if (!ec.population.is_identity()) add_population_metadata(out.summary, ec.population);
  out.summary.add_row(srow);
  return out;
}

// ---------------------------------------------------------------------------
// verify

namespace {

struct CheckLine {
  std::string name;
  double value;
  double tol;
  bool upper;  // value <= tol when true, value >= tol otherwise
  bool pass() const { return upper ? value <= tol : value >= tol; }
  double margin() const { return upper ? tol - value : value - tol; }
};

double rel(double a, double b) {
  const double s = std::max(std::fabs(a), std::fabs(b));
  return s > 0 ? std::fabs(a - b) / s : 0.0;
}

}  // namespace

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  int n = cfg.quick ? 50 : 200;
  if (cfg.n) n = *cfg.n;
  if (n < 2) throw UsageError("verify: --n must be >= 2");
  const int d = 2 * n;
  std::vector<CheckLine> checks;

  // Spectral quadrature.
  double moment = 0.0;
  double stieltjes = 0.0;
  for (double g : {1.5, 2.0, 4.0, 10.0}) {
    const MPLaw law(g);
    moment = std::max(moment, std::fabs(mp_integrate(law, [](double) { return 1.0; }) - 1.0));
    moment = std::max(moment, std::fabs(mp_integrate(law, [](double s) { return s; }) - 1.0));
    for (double s2 : {1e-3, 1e-2, 1e-1, 1.0}) {
      const double q = mp_integrate(law, [&](double s) { return 1.0 / (s + s2); });
      stieltjes = std::max(stieltjes, rel(q, mp_stieltjes_neg(law, s2)));
    }
  }
  checks.push_back({"quadrature: mass and first moment of the MP law", moment, 1e-10, true});
  checks.push_back({"quadrature vs closed-form Stieltjes value", stieltjes, 1e-9, true});

  // Thresholds.
  double order_margin = std::numeric_limits<double>::infinity();
  for (double g : {1.5, 2.0, 4.0}) {
    for (double s2 : {1e-2, 1e-1}) {
      const NoiseLevel nz(s2);
      const MPLaw law(g);
      const double es = memorization_threshold(g, nz);
      const double eo = ols_threshold(g, nz);
      const double ratio = 2.0 * law.lambda_plus() / law.lambda_minus();
      order_margin = std::min({order_margin, (eo - es) / es, (ratio * ratio * es - eo) / es});
    }
  }
  checks.push_back({"threshold ordering: memorization < interpolation <= edge-ratio bound",
                    order_margin, 0.0, false});

  const NoiseLevel nz(0.1);
  const double es = memorization_threshold(2.0, nz);
  const RhoSolution rs = solve_rho(2.0, nz, 2.0 * es);
  checks.push_back({"training-error fixed point residual (plug-back)",
                    std::fabs(rho_equation_residual(2.0, nz, 2.0 * es, rs.rho)), 1e-10, true});
  const RhoSolution ro = solve_rho_ols(2.0, nz);
  checks.push_back({"interpolation fixed point residual (plug-back)",
                    std::fabs(rho_ols_equation_residual(2.0, nz, ro.rho)), 1e-10, true});
  const double red = std::fabs(
      deformed_threshold(DeformedLaw(2.0, PopulationSpectrum::identity()), 0.1) - es);
  checks.push_back({"deformed threshold reduces to isotropic at Sigma = I", red, 1e-10, true});

  // Finite-n identities on two designs.
  struct Design {
    EntryDist entries;
    PopulationSpectrum pop;
  };
  const std::vector<Design> designs{
      {EntryDist::gaussian, PopulationSpectrum::identity()},
      {EntryDist::rademacher, PopulationSpectrum({{1.0, 0.5}, {0.5, 0.5}})}};
  double train_id = 0, growth_id = 0, forms = 0, ax = 0, xa = 0, stat = 0, interp = 0;
  double gc_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < designs.size(); ++k) {
    ExperimentConfig ec;
    ec.n = n;
    ec.d = d;
    ec.sigma2 = 0.1;
    ec.entries = designs[k].entries;
    ec.population = designs[k].pop;
    ec.seed = cfg.seed + k;
    const DesignSample s = sample_design(ec, 0);
    const EmpiricalSpectrum zs = esd_from_design(s.Z);
    const double rho = 0.5 / zs.values(0);
    const ErrorReport r = error_report(s.X, s.sigma_sqrt, 0.1, rho);
    train_id = std::max(train_id, rel(r.train_trace, r.train_direct));
    growth_id = std::max(growth_id, rel(r.pred_growth_trace, r.pred_growth_direct));
    const IdentityReport ids = matrix_identity_checks(s.X, s.sigma_sqrt, 0.1, rho);
    forms = std::max(forms, ids.form_deviation);
    ax = std::max(ax, ids.ax_minus_i);
    xa = std::max(xa, ids.xa_minus_i);
    Eigen::MatrixXd A = build_estimator(s.X, s.sigma_sqrt, 0.1, rho).A;
    if (cfg.inject_perturbation) {
      std::mt19937_64 rng(cfg.seed ^ 0x5eedULL);
      std::normal_distribution<double> normal;
      Eigen::MatrixXd P(A.rows(), A.cols());
      for (Eigen::Index i = 0; i < P.rows(); ++i)
        for (Eigen::Index j = 0; j < P.cols(); ++j) P(i, j) = normal(rng);
      A += 1e-2 * P / P.norm();
    }
    stat = std::max(stat, lagrangian_gradient_residual(A, s.X, s.sigma_sqrt, 0.1, rho));
    const GrowthControlReport gc = growth_control_bounds_check(s.Z, ec.population, 0.1, rho);
    gc_margin = std::min({gc_margin, gc.pred_margin(), gc.train_margin()});
    interp = std::max(interp, min_norm_interpolant_report(s.X, s.sigma_sqrt, 0.1).train_ols);
  }
  checks.push_back({"trace identity: training error of A(rho)", train_id, 1e-9, true});
  checks.push_back({"trace identity: prediction-error growth of A(rho)", growth_id, 1e-9, true});
  checks.push_back({"two closed forms of A(rho) agree", forms, 1e-10, true});
  checks.push_back({"identity for A(rho) X - I", ax, 1e-9, true});
  checks.push_back({"identity for X A(rho) - I", xa, 1e-9, true});
  checks.push_back({"Lagrangian stationarity at A(rho)", stat, 1e-8, true});
  checks.push_back({"growth control via the isotropic spectrum (margins)", gc_margin, -1e-10,
                    false});
  checks.push_back({"minimum-norm interpolant has zero training error", interp, 1e-10, true});

  int passed = 0;
  for (const CheckLine& c : checks) {
    out << (c.pass() ? "PASS" : "FAIL") << "  " << c.name << "  value=" << num(c.value)
        << "  tol=" << num(c.tol) << "  margin=" << num(c.margin()) << '\n';
    if (c.pass()) ++passed;
  }
  for (const CheckLine& c : checks) {
    if (!c.pass()) out << "failed check: " << c.name << '\n';
  }
  out << "verify: " << passed << "/" << checks.size() << " checks passed (n = " << n
      << ", d = " << d << ", seed = " << cfg.seed << ")\n";
  return passed == static_cast<int>(checks.size()) ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// entry point

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw UsageError("failed writing '" + path + "'");
}

std::string gnuplot_script(const std::string& data, bool aniso) {
  std::ostringstream s;
  s << "# gnuplot script for a memcost cost-curve table\n"
    << "set datafile separator ','\n"
    << "set key autotitle columnhead\n"
    << "set xlabel 'eps^2 (training-error floor)'\n"
    << "set ylabel 'excess prediction risk'\n"
    << "set grid\n"
    << "plot '" << data << "' using 1:3 with lines title 'cost vs ridge', \\\n"
    << "     '' using 1:4 with lines title 'cost vs min-norm interpolant'";
  if (aniso) s << ", \\\n     '' using 1:7 with lines title 'anisotropic lower bound'";
  s << '\n';
  return s.str();
}

Format parse_format(const std::string& f) {
  if (f == "csv") return Format::csv;
  if (f == "json") return Format::json;
  throw UsageError("--format must be csv or json");
}

void emit(const OutputTable& t, const RunConfig& cfg, std::ostream& out) {
  const std::string text = render(t, parse_format(cfg.format));
  if (cfg.out.empty()) {
    out << text;
  } else {
    write_text(cfg.out, text);
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"memcost: cost of not fitting in overparameterized linear regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--gamma", cfg.gamma, "aspect ratio d/n (> 1)");
    sub->add_option("--sigma2", cfg.sigma2, "noise variance (> 0)");
  };
  auto add_level = [&](CLI::App* sub) {
    sub->add_option("--eps2", cfg.eps2, "training-error floor eps^2");
    sub->add_option("--eps", cfg.eps, "training-error floor eps (squared internally)");
  };
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out, "output path (stdout if omitted)");
    sub->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };
  auto add_grid = [&](CLI::App* sub) {
    sub->add_option("--grid", cfg.grid, "start:step:stop (stop included within half a step)");
    sub->add_option("--grid-units", cfg.grid_units, "grid values are eps2 or eps")
        ->check(CLI::IsMember({"eps2", "eps"}));
  };
  auto add_pop = [&](CLI::App* sub) {
    sub->add_option("--pop", cfg.pop, "population spectrum file (`value weight` lines)");
  };
  auto add_design = [&](CLI::App* sub) {
    sub->add_option("--n", cfg.n, "sample size");
    sub->add_option("--d", cfg.d, "dimension");
    sub->add_option("--trials", cfg.trials, "number of independent designs");
    sub->add_option("--seed", cfg.seed, "64-bit seed");
    sub->add_option("--entries", cfg.entries, "gaussian or rademacher")
        ->check(CLI::IsMember({"gaussian", "rademacher"}));
  };

  CLI::App* threshold = app.add_subcommand("threshold", "memorization and interpolation thresholds");
  add_model(threshold);
  add_pop(threshold);
  add_output(threshold);

  CLI::App* rho = app.add_subcommand("rho", "Lagrange multiplier for a training-error floor");
  add_model(rho);
  add_level(rho);
  add_grid(rho);
  add_pop(rho);
  add_output(rho);

  CLI::App* curve = app.add_subcommand("cost-curve", "asymptotic cost over an eps^2 grid");
  add_model(curve);
  add_grid(curve);
  add_pop(curve);
  add_output(curve);
  curve->add_option("--gnuplot", cfg.gnuplot, "also write a gnuplot script to this path");

  CLI::App* ols = app.add_subcommand("ols", "minimum-norm interpolant gap and threshold");
  add_model(ols);
  add_output(ols);

  CLI::App* simulate = app.add_subcommand("simulate", "finite-n Monte Carlo experiment");
  add_design(simulate);
  simulate->add_option("--sigma2", cfg.sigma2, "noise variance (> 0)");
  simulate->add_option("--rho", cfg.rho, "fixed multiplier");
  add_level(simulate);
  add_pop(simulate);
  add_output(simulate);
  simulate->add_flag("--full", cfg.full, "also evaluate direct errors, identities, stationarity");

  CLI::App* verify = app.add_subcommand("verify", "run the identity and invariant suite");
  verify->add_flag("--quick", cfg.quick, "reduced sizes");
  verify->add_option("--n", cfg.n, "sample size for the finite-n checks (d = 2n)");
  verify->add_option("--seed", cfg.seed, "64-bit seed");
  verify->add_flag("--inject-perturbation", cfg.inject_perturbation,
                   "perturb the estimator before the stationarity check (negative control)");

  CLI::App* spectrum = app.add_subcommand("spectrum", "empirical spectrum vs Marchenko-Pastur");
  add_design(spectrum);
  spectrum->add_option("--gamma", cfg.gamma, "aspect ratio (used when --d is omitted)");
  add_output(spectrum);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (CLI::App* sub : app.get_subcommands()) cfg.command = sub->get_name();

  try {
    if (cfg.command == "verify") return cmd_verify(cfg, out);
    if (cfg.command == "simulate") {
      const SimulateOutput s = cmd_simulate(cfg, err);
      const Format f = parse_format(cfg.format);
      if (cfg.out.empty()) {
        out << render(s.trials, f) << '\n' << render(s.summary, f);
      } else {
        write_text(cfg.out + "_trials." + (f == Format::csv ? "csv" : "json"), render(s.trials, f));
        write_text(cfg.out + "_summary.json", to_json(s.summary));
        out << to_csv(s.summary);
      }
      return kExitOk;
    }
    OutputTable t;
    if (cfg.command == "threshold") t = cmd_threshold(cfg, err);
    else if (cfg.command == "rho") t = cmd_rho(cfg, err);
    else if (cfg.command == "cost-curve") t = cmd_cost_curve(cfg, err);
    else if (cfg.command == "ols") t = cmd_ols(cfg, err);
    else if (cfg.command == "spectrum") t = cmd_spectrum(cfg, err);
    emit(t, cfg, out);
    if (cfg.command == "cost-curve" && !cfg.gnuplot.empty()) {
      write_text(cfg.gnuplot,
                 gnuplot_script(cfg.out.empty() ? "memcost_curve.csv" : cfg.out, !cfg.pop.empty()));
    }
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << cfg.pop << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const RegimeError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
}

}  // namespace memcost::cli
