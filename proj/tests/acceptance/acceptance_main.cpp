// One PASS/FAIL line per acceptance criterion, each with its runtime bound.

#include "memcost/cost_engine.hpp"
#include "memcost/deformed.hpp"
#include "memcost/errors.hpp"
#include "memcost/finite_n_lab.hpp"
#include "memcost/spectra.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace memcost;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

class Detail {
public:
  template <class T>
  Detail& operator()(const std::string& key, T value) {
    out_ << (first_ ? "" : ", ") << key << "=" << value;
    first_ = false;
    return *this;
  }
  std::string str() const { return out_.str(); }

private:
  std::ostringstream out_;
  bool first_ = true;
};

int g_failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < budget_s;
  const bool pass = o.ok && in_time;
  if (!pass) ++g_failures;
  std::printf("%s criterion %2d: %s (%s; time %.2fs < %.0fs%s)\n", pass ? "PASS" : "FAIL", id,
              title, o.detail.c_str(), secs, budget_s, in_time ? "" : " EXCEEDED");
  std::fflush(stdout);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome moments() {
  double mass = 0.0;
  double stieltjes = 0.0;
  for (double g : {1.5, 2.0, 4.0, 10.0}) {
    const MPLaw law(g);
    mass = std::max(mass, std::fabs(mp_integrate(law, [](double) { return 1.0; }) - 1.0));
    mass = std::max(mass, std::fabs(mp_integrate(law, [](double s) { return s; }) - 1.0));
    for (double s2 : {1e-3, 1e-2, 0.1, 1.0}) {
      const double q = mp_integrate(law, [s2](double s) { return 1.0 / (s + s2); });
      stieltjes = std::max(stieltjes, oracle::rel_dev(q, mp_stieltjes_neg(law, s2)));
    }
  }
  return {mass <= 1e-10 && stieltjes <= 1e-9,
          Detail()("max moment error", fmt(mass))("max Stieltjes rel dev", fmt(stieltjes)).str()};
}

Outcome threshold_expansion() {
  std::vector<double> ratios;
  for (double s2 : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const NoiseLevel nz(s2);
    ratios.push_back(memorization_threshold(2.0, nz) / threshold_approx(2.0, nz));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < ratios.size(); ++i) {
    monotone = monotone && std::fabs(ratios[i] - 1.0) < std::fabs(ratios[i - 1] - 1.0);
  }
  const double final_dev = std::fabs(ratios.back() - 1.0);
  return {monotone && final_dev <= 0.05,
          Detail()("ratios", fmt(ratios[0]) + "," + fmt(ratios[1]) + "," + fmt(ratios[2]) + "," +
                                 fmt(ratios[3]))("final deviation", fmt(final_dev)).str()};
}

Outcome rho_solver() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> ug(1.2, 10.0), us(-3.0, 0.0), uf(1.01, 10.0);
  double worst = 0.0;
  bool monotone = true;
  for (int k = 0; k < 50; ++k) {
    const double g = ug(rng);
    const NoiseLevel nz(std::pow(10.0, us(rng)));
    const double e2 = uf(rng) * memorization_threshold(g, nz);
    const RhoSolution r = solve_rho(g, nz, e2);
    worst = std::max(worst, std::fabs(rho_equation_residual(g, nz, e2, r.rho)));
    if (r.regime != Regime::above_threshold) monotone = false;
  }
  // Monotonicity along increasing grids for a few of the same draws.
  for (int k = 0; k < 5; ++k) {
    const double g = ug(rng);
    const NoiseLevel nz(std::pow(10.0, us(rng)));
    const double t = memorization_threshold(g, nz);
    double prev = -1.0;
    for (int i = 0; i <= 40; ++i) {
      const double rho = solve_rho(g, nz, t * (1.0 + 9.0 * i / 40.0)).rho;
      if (!(rho > prev) && i > 0) monotone = false;
      prev = rho;
    }
  }
  return {worst <= 1e-10 && monotone,
          Detail()("max plug-back residual", fmt(worst))("monotone", monotone ? "yes" : "no").str()};
}

Outcome linear_growth() {
  double worst_ratio = std::numeric_limits<double>::infinity();
  int points = 0;
  for (double g : {1.5, 2.0, 4.0}) {
    for (double s2 : {0.01, 0.1}) {
      const NoiseLevel nz(s2);
      const BoundConstants b = isotropic_linear_bound(g, nz);
      for (int i = 0; i <= 38; ++i) {
        const double e2 = b.c_small * nz.sigma4() * (1.0 + 19.0 * i / 38.0);
        const double cost = asymptotic_cost(g, nz, e2).cost;
        worst_ratio = std::min(worst_ratio, cost / (b.C_growth * e2));
        ++points;
      }
    }
  }
  return {worst_ratio >= 1.0,
          Detail()("points", points)("min cost/(C eps2)", fmt(worst_ratio)).str()};
}

Outcome ols_thresholds() {
  bool ordering = true;
  bool rho_bound = true;
  bool signs = true;
  double worst_zero = 0.0;
  for (double g : {1.5, 2.0, 4.0}) {
    for (double s2 : {0.01, 0.1}) {
      const NoiseLevel nz(s2);
      const MPLaw law(g);
      const double es = std::sqrt(memorization_threshold(g, nz));
      const RhoSolution r = solve_rho_ols(g, nz);
      const double eo = std::sqrt(r.target_eps2);
      ordering = ordering && es < eo && eo <= 2.0 * law.lambda_plus() / law.lambda_minus() * es;
      rho_bound = rho_bound && r.rho >= 1.0 / (2.0 * law.lambda_plus());
      worst_zero = std::max(worst_zero, std::fabs(asymptotic_cost(g, nz, eo * eo).costbar));
      signs = signs && asymptotic_cost(g, nz, 0.99 * eo * eo).costbar < 0.0 &&
              asymptotic_cost(g, nz, 1.01 * eo * eo).costbar > 0.0;
    }
  }
  return {ordering && rho_bound && signs && worst_zero <= 1e-8,
          Detail()("ordering", ordering ? "ok" : "violated")("rho_ols bound",
                                                                rho_bound ? "ok" : "violated")(
              "max |costbar| at threshold", fmt(worst_zero))("sign flip", signs ? "ok" : "missing")
              .str()};
}

Outcome ols_small_noise() {
  const double limit = 1.0 / (2.0 * std::pow(0.5, 3));
  std::vector<double> devs;
  for (double s2 : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const NoiseLevel nz(s2);
    devs.push_back(std::fabs(ols_gap(2.0, nz) / nz.sigma4() / limit - 1.0));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < devs.size(); ++i) monotone = monotone && devs[i] < devs[i - 1];
  return {limit == 4.0 && monotone && devs.back() <= 0.05,
          Detail()("limit", limit)("final deviation", fmt(devs.back()))(
              "monotone", monotone ? "yes" : "no").str()};
}

Outcome finite_identities() {
  double worst_identity = 0.0;
  double worst_stationarity = 0.0;
  int cases = 0;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> frac(0.02, 0.98);
  for (EntryDist e : {EntryDist::gaussian, EntryDist::rademacher}) {
    for (bool aniso : {false, true}) {
      ExperimentConfig c;
      c.n = 200;
      c.d = 400;
      c.sigma2 = 0.1;
      c.entries = e;
      c.population = aniso ? PopulationSpectrum({{1.0, 0.5}, {0.5, 0.5}})
                           : PopulationSpectrum::identity();
      c.seed = 1000 + cases;
      const DesignSample s = sample_design(c, 0);
      // Sigma - (rho/d) X^T X is positive definite iff rho lambda_max(Z Z^T / d) < 1.
      const double top = esd_from_design(s.Z).values(0);
      for (int k = 0; k < 10; ++k) {
        const double rho = frac(rng) / top;
        const ErrorReport r = error_report(s.X, s.sigma_sqrt, c.sigma2, rho);
        const IdentityReport ids = matrix_identity_checks(s.X, s.sigma_sqrt, c.sigma2, rho);
        const Eigen::MatrixXd A = build_estimator(s.X, s.sigma_sqrt, c.sigma2, rho).A;
        worst_identity = std::max({worst_identity, ids.max_deviation(),
                                   oracle::rel_dev(r.train_trace, r.train_direct),
                                   oracle::rel_dev(r.pred_growth_trace, r.pred_growth_direct)});
        worst_stationarity = std::max(
            worst_stationarity, lagrangian_gradient_residual(A, s.X, s.sigma_sqrt, c.sigma2, rho));
      }
      ++cases;
    }
  }
  return {worst_identity <= 1e-9 && worst_stationarity <= 1e-8,
          Detail()("designs x rho", std::to_string(cases) + "x10")(
              "max identity rel dev", fmt(worst_identity))("max stationarity",
                                                           fmt(worst_stationarity))
              .str()};
}

Outcome finite_convergence() {
  const NoiseLevel nz(0.1);
  const double eps2 = 2.0 * memorization_threshold(2.0, nz);
  std::vector<ExperimentConfig> configs;
  for (int n : {200, 800}) {
    ExperimentConfig c;
    c.n = n;
    c.d = 2 * n;
    c.sigma2 = 0.1;
    c.target = RhoOrEps::eps2(eps2);
    c.seed = 8128;
    c.trials = 20;
    configs.push_back(c);
  }
  const auto rows = convergence_report(configs);
  const auto& lo = rows.front();
  const auto& hi = rows.back();
  const bool within = hi.train0_dev <= 0.05 && hi.cost_dev <= 0.10 && hi.ols_gap_dev <= 0.10;
  const bool decreasing = hi.train0_dev < lo.train0_dev && hi.cost_dev < lo.cost_dev &&
                          hi.ols_gap_dev < lo.ols_gap_dev;
  return {within && decreasing,
          Detail()("n=800 devs train0/cost/gap",
                   fmt(hi.train0_dev) + "/" + fmt(hi.cost_dev) + "/" + fmt(hi.ols_gap_dev))(
              "n=200 devs", fmt(lo.train0_dev) + "/" + fmt(lo.cost_dev) + "/" + fmt(lo.ols_gap_dev))
              .str()};
}

Outcome bai_yin() {
  const MPLaw law(2.0);
  double max_dev = 0.0;
  double min_dev = 0.0;
  for (int seed = 0; seed < 10; ++seed) {
    ExperimentConfig c;
    c.n = 1000;
    c.d = 2000;
    c.seed = 31337 + seed;
    const auto by = bai_yin_check(esd_from_design(sample_design(c, 0).X), law);
    max_dev += by.max_rel_dev / 10.0;
    min_dev += by.min_rel_dev / 10.0;
  }
  return {max_dev <= 0.03 && min_dev <= 0.03,
          Detail()("mean top rel dev", fmt(max_dev))("mean bottom rel dev", fmt(min_dev)).str()};
}

Outcome deformed_law() {
  // Degenerate population reduces to the isotropic law.
  double reduction = 0.0;
  for (double g : {1.5, 2.0, 4.0}) {
    for (double s2 : {1e-3, 0.1, 1.0}) {
      reduction = std::max(reduction, std::fabs(deformed_threshold(
                                                    DeformedLaw(g, PopulationSpectrum::identity()), s2) -
                                                memorization_threshold(g, NoiseLevel(s2))));
    }
  }

  // Two-atom fixed point against one large simulated spectrum.
  const PopulationSpectrum two({{1.0, 0.5}, {0.25, 0.5}});
  const double s2 = 0.1;
  const double m = silverstein_solve(DeformedLaw(2.0, two), s2);
  ExperimentConfig c;
  c.n = 2000;
  c.d = 4000;
  c.population = two;
  c.seed = 4242;
  const EmpiricalSpectrum spec = esd_from_design(sample_design(c, 0).X);
  const double simulated = (1.0 / (spec.values.array() + s2)).mean();
  const double sim_dev = std::fabs(simulated - m) / m;

  // Condition-number bound on several spectra.
  const std::vector<PopulationSpectrum> pops{
      two, PopulationSpectrum({{1.0, 0.5}, {0.5, 0.5}}), PopulationSpectrum({{1.0, 0.1}, {0.1, 0.9}}),
      PopulationSpectrum({{1.0, 0.2}, {0.7, 0.3}, {0.3, 0.5}})};
  bool bound = true;
  for (const auto& p : pops) {
    for (double g : {1.5, 2.0, 4.0}) {
      for (double t : {0.01, 0.1, 1.0}) {
        const double def = deformed_threshold(DeformedLaw(g, p), t);
        const double rhs = memorization_threshold(g, NoiseLevel(p.kappa() * t)) / p.kappa();
        bound = bound && def <= rhs * (1.0 + 1e-12);
      }
    }
  }

  // Growth-control margins at n = 200.
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < pops.size(); ++k) {
    ExperimentConfig gc;
    gc.n = 200;
    gc.d = 400;
    gc.population = pops[k];
    gc.seed = 90 + k;
    const DesignSample s = sample_design(gc, 0);
    const double top = esd_from_design(s.Z).values(0);
    for (double f : {0.1, 0.5, 0.9}) {
      const auto r = growth_control_bounds_check(s.Z, pops[k], 0.1, f / top);
      margin = std::min({margin, r.pred_margin(), r.train_margin()});
    }
  }
  return {reduction <= 1e-10 && sim_dev <= 0.02 && bound && margin >= -1e-10,
          Detail()("reduction", fmt(reduction))("two-atom sim rel dev", fmt(sim_dev))(
              "kappa bound", bound ? "holds" : "violated")("min growth margin", fmt(margin))
              .str()};
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

Outcome reproducibility() {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "memcost_acceptance";
  std::filesystem::create_directories(dir);
  const std::string args =
      " simulate --n 100 --d 200 --sigma2 0.1 --eps2 0.03 --trials 8 --seed 7"
      " --entries rademacher --pop ";
  const std::string pop = (dir / "two_atom.spec").string();
  std::ofstream(pop) << "1 0.5\n0.5 0.5\n";
  std::vector<std::string> prefixes{(dir / "run_a").string(), (dir / "run_b").string()};
  for (const auto& p : prefixes) {
    const std::string cmd = std::string(MEMCOST_BINARY) + args + pop + " --full --out " + p +
                            " > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "memcost simulate failed: " + cmd};
  }
  bool same = true;
  std::size_t bytes = 0;
  for (const char* suffix : {"_trials.csv", "_summary.json"}) {
    const std::string a = slurp(prefixes[0] + suffix);
    const std::string b = slurp(prefixes[1] + suffix);
    same = same && !a.empty() && a == b;
    bytes += a.size();
  }
  return {same, Detail()("files", 2)("bytes compared", bytes)(
                    "identical", same ? "yes" : "no").str()};
}

}  // namespace

int main() {
  criterion(1, "MP moments and closed-form Stieltjes value", 1.0, moments);
  criterion(2, "small-noise threshold expansion", 1.0, threshold_expansion);
  criterion(3, "multiplier solver residual and monotonicity", 5.0, rho_solver);
  criterion(4, "linear growth of the cost above c sigma^4", 5.0, linear_growth);
  criterion(5, "interpolation threshold bounds and costbar sign", 5.0, ols_thresholds);
  criterion(6, "small-noise interpolation gap constant", 1.0, ols_small_noise);
  criterion(7, "exact finite-n identities and stationarity", 30.0, finite_identities);
  criterion(8, "finite-n convergence to the asymptotic limits", 180.0, finite_convergence);
  criterion(9, "extreme eigenvalues approach the support edges", 60.0, bai_yin);
  criterion(10, "deformed law, condition-number bound, growth margins", 120.0, deformed_law);
  criterion(11, "byte-identical simulate output across runs", 60.0, reproducibility);
  std::printf("%d of 11 criteria passed\n", 11 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
