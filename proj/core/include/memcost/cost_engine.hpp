#pragma once

#include "memcost/deformed.hpp"
#include "memcost/spectra.hpp"

#include <optional>

namespace memcost {

class NoiseLevel {
public:
  /// Throws DomainError unless sigma2 > 0 and finite.
  explicit NoiseLevel(double sigma2);
  double sigma2() const noexcept { return sigma2_; }
  double sigma4() const noexcept { return sigma2_ * sigma2_; }

private:
  double sigma2_;
};

enum class Regime { below_threshold, above_threshold };

const char* to_string(Regime r) noexcept;

struct RhoSolution {
  double rho = 0.0;
  Regime regime = Regime::below_threshold;
  double residual = 0.0;
  double target_eps2 = 0.0;
};

struct CostPoint {
  double eps2 = 0.0;
  double rho = 0.0;
  double cost = 0.0;
  double costbar = 0.0;
  Regime regime = Regime::below_threshold;
};

struct BoundConstants {
  double c_small = 0.0;        // linear growth holds for eps2 >= c_small * sigma^4
  double C_growth = 0.0;       // cost >= C_growth * eps2 there
  double kappa = 1.0;
  double c_small_proof = 0.0;  // isotropic only: 2/(lambda_- + sigma2), as written in the proof
};

struct ThresholdReport {
  double eps_sigma2 = 0.0;
  double eps_sigma2_approx = 0.0;
  double eps_ols2 = 0.0;
  double rho_ols = 0.0;
  std::optional<double> eps_def2;
  std::optional<double> eps_def2_upper;  // sigma^4 kappa m_H(-kappa sigma2)
};

/// Upper end of every rho bracket: (1 - 1e-8) / lambda_+.
double rho_cap(const MPLaw& law);

/// epsilon_sigma^2 = sigma^4 m_H(-sigma2).
double memorization_threshold(double gamma, const NoiseLevel& noise);

/// sigma^4 / (sigma2 + 1 - 1/gamma).
double threshold_approx(double gamma, const NoiseLevel& noise);

/// Asymptotic training error of A(rho): int sigma^4 / ((1 - rho s)^2 (s + sigma2)) dH,
/// evaluated in closed form through the MP resolvent at 1/rho. DomainError
/// unless 0 <= rho < 1/lambda_+.
double asymptotic_train(double gamma, const NoiseLevel& noise, double rho);

/// Asymptotic cost at a given multiplier: (rho^2/gamma) int sigma^4 s / ((1 - rho s)^2 (s + sigma2)) dH.
double cost_at_rho(double gamma, const NoiseLevel& noise, double rho);

/// Multiplier for the training-error floor eps2. eps2 <= epsilon_sigma^2 is
/// below threshold (rho = 0). Throws DomainError for eps2 < 0 and
/// NearDivergenceError if the root lies beyond rho_cap.
RhoSolution solve_rho(double gamma, const NoiseLevel& noise, double eps2);

CostPoint asymptotic_cost(double gamma, const NoiseLevel& noise, double eps2);

/// Isotropic constants c = 2/(lambda_-^2 + sigma2), C = (1 - 1/sqrt2)^2 lambda_- / (lambda_+^2 gamma).
BoundConstants isotropic_linear_bound(double gamma, const NoiseLevel& noise);

/// Condition-number constants c = 2 kappa/(lambda_- + kappa sigma2),
/// C = lambda_- (1 - 1/sqrt2)^2 / (kappa lambda_+^2 gamma).
BoundConstants anisotropic_linear_bound(double gamma, const NoiseLevel& noise, double kappa);

/// Isotropic constants when kappa == 1, condition-number constants otherwise.
BoundConstants cost_linear_bound(double gamma, const NoiseLevel& noise, double kappa);

/// Asymptotic excess risk of the minimum-norm interpolant over ridge:
/// (sigma^4/gamma) int 1/(s (s + sigma2)) dH, via the Stieltjes difference.
double ols_gap(double gamma, const NoiseLevel& noise);

/// Same quantity by direct quadrature.
double ols_gap_quadrature(double gamma, const NoiseLevel& noise);

/// Root of rho^2 int s/((1 - rho s)^2 (s + sigma2)) dH = int 1/(s (s + sigma2)) dH.
RhoSolution solve_rho_ols(double gamma, const NoiseLevel& noise);

/// Training-error level at which the constrained optimum ties the interpolant.
double ols_threshold(double gamma, const NoiseLevel& noise);

ThresholdReport threshold_report(double gamma, const NoiseLevel& noise,
                                 const PopulationSpectrum* pop = nullptr);

/// Root of kappa sigma^4 (int 1/((1-rho s)^2 (s + kappa sigma2)) dH - int 1/(s + kappa sigma2) dH)
///   = eps2 - epsilon_{sigma,def}^2.
/// Throws RegimeError if eps2 is below the deformed threshold.
RhoSolution solve_rho_def(double gamma, const PopulationSpectrum& pop, const NoiseLevel& noise,
                          double eps2);

/// (rho_def^2/gamma) int sigma^4 s / ((1 - rho_def s)^2 (s + sigma2)) dH.
double anisotropic_cost_lower_bound(double gamma, const PopulationSpectrum& pop,
                                    const NoiseLevel& noise, double eps2);

/// Plug-back residuals by adaptive quadrature (up to 2^22 nodes), independent
/// of the closed forms the solvers use. ConvergenceError if the quadrature
/// cannot resolve the peak at lambda_+.
double rho_equation_residual(double gamma, const NoiseLevel& noise, double eps2, double rho);
double rho_ols_equation_residual(double gamma, const NoiseLevel& noise, double rho);
double rho_def_equation_residual(double gamma, const PopulationSpectrum& pop,
                                 const NoiseLevel& noise, double eps2, double rho);

}  // namespace memcost
