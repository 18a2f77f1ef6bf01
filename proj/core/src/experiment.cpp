#include "memcost/cost_engine.hpp"
#include "memcost/errors.hpp"
#include "memcost/finite_n_lab.hpp"
#include "memcost/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

namespace memcost {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MatrixXd row_gram_over_d(const MatrixXd& X) {
  MatrixXd G = MatrixXd::Zero(X.rows(), X.rows());
  G.selfadjointView<Eigen::Lower>().rankUpdate(X, 1.0 / static_cast<double>(X.cols()));
  return G.selfadjointView<Eigen::Lower>();
}

double solve_level(const std::function<double(double)>& train_fn, double train0, double eps2,
                   double rho_top, const ToleranceSpec& tol) {
  if (eps2 <= train0) return 0.0;
  const double top = train_fn(rho_top);
  if (top < eps2) {
    std::ostringstream msg;
    msg << "finite-n multiplier for eps2 = " << eps2 << " lies beyond the feasible range";
    throw NearDivergenceError(msg.str(), top);
  }
  return bisect([&](double r) { return train_fn(r) - eps2; }, Interval(0.0, rho_top), tol);
}

// Sigma = I: everything follows from the eigenvalues mu of X X^T / d.
void spectral_isotropic(const ExperimentConfig& cfg, const DesignSample& s, TrialMetrics& m) {
  const double n = cfg.n;
  const double d = cfg.d;
  const double s2 = cfg.sigma2;
  const double s4 = s2 * s2;
  const VectorXd mu = sym_eigenvalues(row_gram_over_d(s.X));
  const double mu_min = mu(0);
  const double mu_max = mu(mu.size() - 1);
  if (!(std::sqrt(std::max(0.0, mu_min * d)) > 1e-8 * std::sqrt(d))) {
    throw RankError("trial design: X X^T is numerically singular", std::sqrt(std::max(0.0, mu_min * d)));
  }
  auto train_fn = [&](double rho) {
    double t = 0.0;
    for (Index i = 0; i < mu.size(); ++i) {
      const double u = 1.0 - rho * mu(i);
      t += 1.0 / (u * u * (mu(i) + s2));
    }
    return s4 * t / n;
  };
  m.train0 = train_fn(0.0);
  if (cfg.target.kind == RhoOrEps::Kind::by_rho) {
    m.rho = cfg.target.value;
    if (!(m.rho * mu_max < 1.0)) {
      throw FeasibilityError("trial design: rho outside the feasible range", 1.0 - m.rho * mu_max);
    }
  } else {
    m.rho = solve_level(train_fn, m.train0, cfg.target.value, (1.0 - 1e-12) / mu_max,
                        {1e-16, 1e-15, 400});
  }
  m.train = train_fn(m.rho);
  double cost = 0.0;
  double inv = 0.0;
  double shrink = 0.0;
  for (Index i = 0; i < mu.size(); ++i) {
    const double u = 1.0 - m.rho * mu(i);
    cost += mu(i) / (u * u * (mu(i) + s2));
    inv += 1.0 / mu(i);
    shrink += mu(i) / (mu(i) + s2);
  }
  m.cost = m.rho * m.rho * s4 / d * cost;
  m.ols_gap = -n / d + s2 / d * inv + shrink / d;
}

void dense_metrics(const ExperimentConfig& cfg, const DesignSample& s, TrialMetrics& m) {
  const double s2 = cfg.sigma2;
  auto train_fn = [&](double rho) { return error_growth_trace(s.X, s.sigma_sqrt, s2, rho).train; };
  m.train0 = train_fn(0.0);
  if (cfg.target.kind == RhoOrEps::Kind::by_rho) {
    m.rho = cfg.target.value;
  } else {
    const VectorXd mu = sym_eigenvalues(row_gram_over_d(s.Z));
    const double rho_top = (1.0 - 1e-6) / mu(mu.size() - 1);
    m.rho = solve_level(train_fn, m.train0, cfg.target.value, rho_top, {1e-15, 1e-12, 200});
  }
  const GrowthTrace tr = error_growth_trace(s.X, s.sigma_sqrt, s2, m.rho);
  m.train = tr.train;
  m.cost = tr.delta_pred;
  m.ols_gap = min_norm_interpolant_report(s.X, s.sigma_sqrt, s2).gap_vs_ridge;
}

double relative(double a, double b) {
  const double scale = std::max(std::fabs(a), std::fabs(b));
  return scale > 0.0 ? std::fabs(a - b) / scale : 0.0;
}

}  // namespace

TrialMetrics run_trial(const ExperimentConfig& config, int trial, TrialMode mode) {
  const DesignSample s = sample_design(config, trial);
  TrialMetrics m;
  m.trial = trial;
  m.pred_direct = kNaN;
  m.train_direct = kNaN;
  m.identity_dev = kNaN;
  m.stationarity = kNaN;
  if (config.population.is_identity()) {
    spectral_isotropic(config, s, m);
  } else {
    dense_metrics(config, s, m);
  }
  if (mode == TrialMode::full) {
    const ErrorReport r = error_report(s.X, s.sigma_sqrt, config.sigma2, m.rho);
    const IdentityReport ids = matrix_identity_checks(s.X, s.sigma_sqrt, config.sigma2, m.rho);
    m.pred_direct = r.pred_direct;
    m.train_direct = r.train_direct;
    m.stationarity = r.duality_residual;
    double dev = ids.max_deviation();
    dev = std::max(dev, relative(r.train_trace, r.train_direct));
    if (m.rho > 0.0) dev = std::max(dev, relative(r.pred_growth_trace, r.pred_growth_direct));
    m.identity_dev = dev;
  }
  return m;
}

int default_thread_count() {
  if (const char* env = std::getenv("MEMCOST_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(std::min(v, 1024L));
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<TrialMetrics> run_trials(const ExperimentConfig& config, TrialMode mode,
                                     int threads) {
  config.validate();
  const int workers = std::clamp(threads > 0 ? threads : default_thread_count(), 1, config.trials);
  std::vector<TrialMetrics> out(static_cast<std::size_t>(config.trials));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(config.trials));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int t = next.fetch_add(1); t < config.trials; t = next.fetch_add(1)) {
      try {
        out[static_cast<std::size_t>(t)] = run_trial(config, t, mode);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

AsymptoticTargets asymptotic_targets(const ExperimentConfig& config) {
  config.validate();
  const double gamma = config.gamma();
  const NoiseLevel noise(config.sigma2);
  AsymptoticTargets t;
  t.train = kNaN;
  t.cost = kNaN;
  t.ols_gap = kNaN;
  const double value = config.target.value;
  const bool by_eps2 = config.target.kind == RhoOrEps::Kind::by_eps2;
  try {
    if (config.population.is_identity()) {
      t.train0 = memorization_threshold(gamma, noise);
      t.ols_gap = ols_gap(gamma, noise);
      if (by_eps2) {
        const CostPoint p = asymptotic_cost(gamma, noise, value);
        t.cost = p.cost;
        t.train = std::max(value, t.train0);
      } else if (value < rho_cap(MPLaw(gamma))) {
        t.train = asymptotic_train(gamma, noise, value);
        t.cost = cost_at_rho(gamma, noise, value);
      }
    } else {
      t.train0 = deformed_threshold(DeformedLaw(gamma, config.population), config.sigma2);
      if (by_eps2) {
        t.train = std::max(value, t.train0);
        t.cost = anisotropic_cost_lower_bound(gamma, config.population, noise,
                                              std::max(value, t.train0));
        t.cost_is_lower_bound = true;
      }
    }
  } catch (const NearDivergenceError&) {
    // Leave the unavailable targets as NaN.
  }
  return t;
}

namespace {

double deviation(double mean, double target) {
  if (!std::isfinite(target)) return kNaN;
  const double diff = std::fabs(mean - target);
  return target != 0.0 ? diff / std::fabs(target) : diff;
}

}  // namespace

std::vector<ConvergenceRow> convergence_report(const std::vector<ExperimentConfig>& configs,
                                               const std::vector<AsymptoticTargets>& targets,
                                               int threads) {
  if (!targets.empty() && targets.size() != configs.size()) {
    throw ContractError("convergence_report: one target per configuration expected");
  }
  std::vector<ConvergenceRow> rows;
  rows.reserve(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const ExperimentConfig& cfg = configs[i];
    const std::vector<TrialMetrics> trials = run_trials(cfg, TrialMode::spectral, threads);
    std::vector<double> t0, cost, gap;
    for (const TrialMetrics& m : trials) {
      t0.push_back(m.train0);
      cost.push_back(m.cost);
      gap.push_back(m.ols_gap);
    }
    ConvergenceRow row;
    row.n = cfg.n;
    row.d = cfg.d;
    row.trials = cfg.trials;
    row.train0 = mean_se(t0);
    row.cost = mean_se(cost);
    row.ols_gap = mean_se(gap);
    row.target = targets.empty() ? asymptotic_targets(cfg) : targets[i];
    row.train0_dev = deviation(row.train0.mean, row.target.train0);
    row.cost_dev = deviation(row.cost.mean, row.target.cost);
    row.ols_gap_dev = deviation(row.ols_gap.mean, row.target.ols_gap);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace memcost
