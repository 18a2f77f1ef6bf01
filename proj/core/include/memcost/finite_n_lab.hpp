#pragma once

#include "memcost/deformed.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace memcost {

enum class EntryDist { gaussian, rademacher };

const char* to_string(EntryDist e) noexcept;

/// Either a fixed multiplier or a training-error level to hit.
struct RhoOrEps {
  enum class Kind { by_rho, by_eps2 };
  Kind kind = Kind::by_rho;
  double value = 0.0;

  static RhoOrEps rho(double v) { return {Kind::by_rho, v}; }
  static RhoOrEps eps2(double v) { return {Kind::by_eps2, v}; }
};

struct ExperimentConfig {
  int n = 0;
  int d = 0;
  double sigma2 = 0.1;
  EntryDist entries = EntryDist::gaussian;
  PopulationSpectrum population = PopulationSpectrum::identity();
  RhoOrEps target = RhoOrEps::rho(0.0);
  std::uint64_t seed = 0;
  int trials = 1;

  /// Throws RegimeError unless d > n, ContractError/DomainError for the rest.
  void validate() const;
  double gamma() const noexcept { return static_cast<double>(d) / static_cast<double>(n); }
};

struct DesignSample {
  Eigen::MatrixXd Z;           // n x d, standardized entries
  Eigen::VectorXd sigma_sqrt;  // diagonal of Sigma^{1/2}, length d
  Eigen::MatrixXd X;           // Z Sigma^{1/2}
};

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Per-trial generator seed: seed XOR splitmix64(trial).
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) noexcept;

/// Diagonal of Sigma^{1/2}: atom multiplicities over d slots by largest
/// remainder, values in descending order.
Eigen::VectorXd realize_sigma_sqrt(const PopulationSpectrum& pop, int d);

/// Deterministic in (config.seed, trial). Entries are drawn row by row.
DesignSample sample_design(const ExperimentConfig& config, int trial);

struct EstimatorMatrix {
  Eigen::MatrixXd A;      // d x n
  Eigen::MatrixXd shift;  // A - A(0) = -rho sigma2 M^{-1} A(0), formed without subtraction
  double rho = 0.0;
  bool feasible = false;
  double min_eigenvalue = 0.0;  // of Sigma - (rho/d) X^T X
  double form_deviation = 0.0;  // relative Frobenius gap between the two closed forms
};

/// A(rho, Sigma) = (I - rho sigma2 M^{-1}) (X^T X + d sigma2 I)^{-1} X^T with
/// M = Sigma - (rho/d) X^T X. The equivalent form
/// (I - rho sigma2 M^{-1}) X^T (X X^T + d sigma2 I)^{-1} is also evaluated and
/// the difference recorded in form_deviation.
/// Throws FeasibilityError if lambda_min(M) <= 1e-10.
EstimatorMatrix build_estimator(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& sigma_sqrt, double sigma2,
                                double rho);

/// (1/d) ||Sigma^{1/2}(A X - I)||_F^2 + sigma2 ||Sigma^{1/2} A||_F^2.
double pred_error_direct(const Eigen::Ref<const Eigen::MatrixXd>& A,
                         const Eigen::Ref<const Eigen::MatrixXd>& X,
                         const Eigen::Ref<const Eigen::VectorXd>& sigma_sqrt, double sigma2);

/// (1/(n d)) ||X A X - X||_F^2 + (sigma2/n) ||X A - I||_F^2.
double train_error_direct(const Eigen::Ref<const Eigen::MatrixXd>& A,
                          const Eigen::Ref<const Eigen::MatrixXd>& X, double sigma2);

struct GrowthTrace {
  double delta_pred = 0.0;  // P(A(rho)) - P(A(0))
  double train = 0.0;       // T(A(rho))
};

/// Trace expressions for the prediction-error growth and the training error,
/// evaluated through the thin SVD of X. Throws RankError if the smallest
/// singular value is <= 1e-8 sqrt(d).
GrowthTrace error_growth_trace(const Eigen::Ref<const Eigen::MatrixXd>& X,
                               const Eigen::Ref<const Eigen::VectorXd>& sigma_sqrt, double sigma2,
                               double rho);

/// ||dL/dA||_F / (||X||_F / (d sqrt(n))) for the Lagrangian with multiplier
/// lambda = rho n / d on the training-error constraint.
double lagrangian_gradient_residual(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                    const Eigen::Ref<const Eigen::MatrixXd>& X,
                                    const Eigen::Ref<const Eigen::VectorXd>& sigma_sqrt,
                                    double sigma2, double rho);

struct IdentityReport {
  double ax_minus_i = 0.0;  // relative deviation of A X - I from -d sigma2 M^{-1} Sigma (X^T X + d sigma2 I)^{-1}
  double xa_minus_i = 0.0;  // relative deviation of X A - I from its closed form
  double form_deviation = 0.0;
  double max_deviation() const noexcept;
};

IdentityReport matrix_identity_checks(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                      const Eigen::Ref<const Eigen::VectorXd>& sigma_sqrt,
                                      double sigma2, double rho);

struct MinNormReport {
  double pred_ols = 0.0;      // P(X^T (X X^T)^{-1})
  double gap_vs_ridge = 0.0;  // pred_ols - P(A(0))
  double train_ols = 0.0;
  std::optional<double> pred_ols_formula;  // (d - n)/d + sigma2 tr((X X^T)^{-1}), Sigma = I only
  std::optional<double> gap_spectral;      // eigenvalue form of the gap, Sigma = I only
};

MinNormReport min_norm_interpolant_report(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                          const Eigen::Ref<const Eigen::VectorXd>& sigma_sqrt,
                                          double sigma2);

struct MonteCarloEstimate {
  double mc_pred = 0.0;
  double mc_train = 0.0;
  double pred_std = 0.0;   // sample standard deviation of the per-draw loss
  double train_std = 0.0;
  double max_train = 0.0;  // largest single-draw training loss
  int samples = 0;
};

/// Draws theta ~ N(0, I/d), w ~ N(0, sigma2 I), y = X theta + w and averages
/// ||Sigma^{1/2}(A y - theta)||^2 and (1/n)||X A y - y||^2.
MonteCarloEstimate monte_carlo_response_check(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                              const Eigen::Ref<const Eigen::VectorXd>& sigma_sqrt,
                                              double sigma2,
                                              const Eigen::Ref<const Eigen::MatrixXd>& A,
                                              int samples, std::uint64_t seed);

struct GrowthControlReport {
  double pred_lhs = 0.0;  // P(A(rho)) - P(A(0))
  double pred_rhs = 0.0;
  double train_lhs = 0.0;  // T(A(rho)) - T(A(0))
  double train_rhs = 0.0;
  double pred_margin() const noexcept { return pred_lhs - pred_rhs; }
  double train_margin() const noexcept { return train_rhs - train_lhs; }
};

/// Compares the anisotropic error growth at X = Z Sigma^{1/2} with the
/// isotropic-spectrum bounds built from Z Z^T / d.
/// Throws RegimeError unless rho lambda_max(Z Z^T) / d < 1.
GrowthControlReport growth_control_bounds_check(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                                                const PopulationSpectrum& population,
                                                double sigma2, double rho);

struct ErrorReport {
  double pred_direct = 0.0;
  double train_direct = 0.0;
  double pred_growth_trace = 0.0;
  double pred_growth_direct = 0.0;  // P(A) - P(A(0)), expanded in the shift
  double train_trace = 0.0;
  double duality_residual = 0.0;
  std::optional<double> monte_carlo_pred;
  std::optional<double> monte_carlo_train;
};

/// All exact conditional errors of A(rho) for one design.
ErrorReport error_report(const Eigen::Ref<const Eigen::MatrixXd>& X,
                         const Eigen::Ref<const Eigen::VectorXd>& sigma_sqrt, double sigma2,
                         double rho, int mc_samples = 0, std::uint64_t mc_seed = 0);

// ---------------------------------------------------------------------------
// Trials

enum class TrialMode {
  spectral,  // eigenvalue shortcuts where Sigma = I; dense traces otherwise
  full,      // additionally direct Frobenius errors, identities, stationarity
};

/// NaN marks a metric that the mode does not compute.
struct TrialMetrics {
  int trial = 0;
  double rho = 0.0;
  double train0 = 0.0;       // T(A(0))
  double train = 0.0;        // T(A(rho))
  double cost = 0.0;         // P(A(rho)) - P(A(0))
  double ols_gap = 0.0;      // P(A_ols) - P(A(0))
  double pred_direct = 0.0;
  double train_direct = 0.0;
  double identity_dev = 0.0;
  double stationarity = 0.0;
};

TrialMetrics run_trial(const ExperimentConfig& config, int trial, TrialMode mode);

/// Worker count from MEMCOST_THREADS, else the hardware default.
int default_thread_count();

/// Runs all trials (concurrently up to `threads`, 0 = default) and returns
/// them in trial order.
std::vector<TrialMetrics> run_trials(const ExperimentConfig& config, TrialMode mode,
                                     int threads = 0);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // sample std / sqrt(count)
};

MeanSe mean_se(const std::vector<double>& xs);

/// Asymptotic limits paired with a configuration. NaN when not available.
struct AsymptoticTargets {
  double train0 = 0.0;
  double train = 0.0;
  double cost = 0.0;
  double ols_gap = 0.0;
  bool cost_is_lower_bound = false;
};

/// Targets at gamma = d/n from the isotropic formulas, or the deformed
/// threshold and the cost lower bound when the population is not the identity.
AsymptoticTargets asymptotic_targets(const ExperimentConfig& config);

struct ConvergenceRow {
  int n = 0;
  int d = 0;
  int trials = 0;
  MeanSe train0;
  MeanSe cost;
  MeanSe ols_gap;
  AsymptoticTargets target;
  double train0_dev = 0.0;  // |mean - target| / |target|
  double cost_dev = 0.0;
  double ols_gap_dev = 0.0;
};

/// One row per configuration (same gamma, sigma2, population; varying n).
/// `targets`, when non-empty, overrides the computed limits (one per config).
std::vector<ConvergenceRow> convergence_report(const std::vector<ExperimentConfig>& configs,
                                               const std::vector<AsymptoticTargets>& targets = {},
                                               int threads = 0);

}  // namespace memcost
