#include "memcost/cost_engine.hpp"

#include "memcost/errors.hpp"

#include <cmath>
#include <sstream>

namespace memcost {

NoiseLevel::NoiseLevel(double sigma2) : sigma2_(sigma2) {
  if (!std::isfinite(sigma2) || !(sigma2 > 0.0)) {
    std::ostringstream msg;
    msg << "noise variance sigma2 must be positive (got " << sigma2 << ")";
    throw DomainError(msg.str());
  }
}

const char* to_string(Regime r) noexcept {
  return r == Regime::below_threshold ? "below_threshold" : "above_threshold";
}

double rho_cap(const MPLaw& law) {
  return (1.0 - 1e-8) / law.lambda_plus();
}

namespace {

// Spectral integrals against (1 - rho s)^{-2}, evaluated through the MP
// resolvent at z = 1/rho written in rho so that rho -> 0 is regular.
struct PoleIntegrals {
  double inv;     // int 1/(1 - rho s) dH
  double inv_sq;  // int 1/(1 - rho s)^2 dH
};

PoleIntegrals pole_integrals(const MPLaw& law, double rho) {
  const double c = 1.0 / law.gamma();
  const double a = 1.0 - rho * law.lambda_minus();
  const double b = 1.0 - rho * law.lambda_plus();
  const double S = std::sqrt(a * b);
  const double D = S + 1.0 - (1.0 - c) * rho;
  const double dS = (2.0 - rho * (law.lambda_minus() + law.lambda_plus())) / (2.0 * S);
  return {2.0 / D, 2.0 * (dS + 1.0) / (D * D)};
}

// int 1/((1 - rho s)^2 (s + t)) dH by partial fractions in s.
double train_integral(const MPLaw& law, double t, double rho) {
  const double m = mp_stieltjes_neg(law, t);
  if (rho == 0.0) return m;
  const PoleIntegrals p = pole_integrals(law, rho);
  const double q = 1.0 + t * rho;
  return (p.inv * rho + m) / (q * q) + p.inv_sq * rho / q;
}

// int s/((1 - rho s)^2 (s + t)) dH.
double cost_integral(const MPLaw& law, double t, double rho) {
  return pole_integrals(law, rho).inv_sq - t * train_integral(law, t, rho);
}

struct Root {
  double rho;
  double residual;
};

// Root of an increasing phi on [0, rho_cap]; phi(0) < 0 is the caller's job.
Root solve_increasing(const MPLaw& law, const std::function<double(double)>& phi,
                      const char* what, double value_at_cap_offset) {
  const double cap = rho_cap(law);
  const double at_cap = phi(cap);
  if (at_cap < 0.0) {
    std::ostringstream msg;
    msg << what << ": required multiplier exceeds the solver cap rho = " << cap
        << " just below 1/lambda_+, where the spectral integral diverges";
    throw NearDivergenceError(msg.str(), at_cap + value_at_cap_offset);
  }
  const BisectResult r = bisect_detailed(phi, Interval(0.0, cap), {0.0, 1e-16, 200});
  return {r.x, r.fx};
}

// Plug-back checks resolve the peak at lambda_+ with up to 2^22 nodes.
const AdaptiveOptions kCheckQuadrature{2048, 1 << 22, 1e-12};

void require_eps2(double eps2) {
  if (!std::isfinite(eps2) || eps2 < 0.0) {
    std::ostringstream msg;
    msg << "training-error level eps2 must be finite and non-negative (got " << eps2 << ")";
    throw DomainError(msg.str());
  }
}

}  // namespace

double memorization_threshold(double gamma, const NoiseLevel& noise) {
  return noise.sigma4() * mp_stieltjes_neg(MPLaw(gamma), noise.sigma2());
}

double threshold_approx(double gamma, const NoiseLevel& noise) {
  MPLaw law(gamma);
  return noise.sigma4() / (noise.sigma2() + 1.0 - 1.0 / law.gamma());
}

double asymptotic_train(double gamma, const NoiseLevel& noise, double rho) {
  const MPLaw law(gamma);
  if (!(rho >= 0.0) || !(rho * law.lambda_plus() < 1.0)) {
    std::ostringstream msg;
    msg << "asymptotic_train: rho = " << rho << " outside [0, 1/lambda_+)";
    throw DomainError(msg.str());
  }
  return noise.sigma4() * train_integral(law, noise.sigma2(), rho);
}

double cost_at_rho(double gamma, const NoiseLevel& noise, double rho) {
  if (rho == 0.0) return 0.0;
  const MPLaw law(gamma);
  if (!(rho > 0.0) || !(rho * law.lambda_plus() < 1.0)) {
    std::ostringstream msg;
    msg << "cost_at_rho: rho = " << rho << " outside [0, 1/lambda_+)";
    throw DomainError(msg.str());
  }
  return rho * rho / gamma * noise.sigma4() * cost_integral(law, noise.sigma2(), rho);
}

RhoSolution solve_rho(double gamma, const NoiseLevel& noise, double eps2) {
  require_eps2(eps2);
  const MPLaw law(gamma);
  RhoSolution out;
  out.target_eps2 = eps2;
  if (eps2 <= memorization_threshold(gamma, noise)) return out;

  const double s2 = noise.sigma2();
  const double s4 = noise.sigma4();
  const auto phi = [&](double rho) { return s4 * train_integral(law, s2, rho) - eps2; };
  const Root r = solve_increasing(law, phi, "solve_rho", eps2);
  out.rho = r.rho;
  out.residual = r.residual;
  out.regime = Regime::above_threshold;
  return out;
}

CostPoint asymptotic_cost(double gamma, const NoiseLevel& noise, double eps2) {
  const RhoSolution sol = solve_rho(gamma, noise, eps2);
  CostPoint p;
  p.eps2 = eps2;
  p.rho = sol.rho;
  p.regime = sol.regime;
  p.cost = sol.regime == Regime::below_threshold ? 0.0 : cost_at_rho(gamma, noise, sol.rho);
  p.costbar = p.cost - ols_gap(gamma, noise);
  return p;
}

BoundConstants isotropic_linear_bound(double gamma, const NoiseLevel& noise) {
  const MPLaw law(gamma);
  const double lm = law.lambda_minus();
  const double lp = law.lambda_plus();
  const double f = 1.0 - 1.0 / std::sqrt(2.0);
  BoundConstants b;
  b.kappa = 1.0;
  b.c_small = 2.0 / (lm * lm + noise.sigma2());
  b.c_small_proof = 2.0 / (lm + noise.sigma2());
  b.C_growth = f * f * lm / (lp * lp * gamma);
  return b;
}

BoundConstants anisotropic_linear_bound(double gamma, const NoiseLevel& noise, double kappa) {
  if (!std::isfinite(kappa) || !(kappa >= 1.0)) {
    std::ostringstream msg;
    msg << "condition number kappa must be >= 1 (got " << kappa << ")";
    throw DomainError(msg.str());
  }
  const MPLaw law(gamma);
  const double lm = law.lambda_minus();
  const double lp = law.lambda_plus();
  const double f = 1.0 - 1.0 / std::sqrt(2.0);
  BoundConstants b;
  b.kappa = kappa;
  b.c_small = 2.0 * kappa / (lm + kappa * noise.sigma2());
  b.c_small_proof = b.c_small;
  b.C_growth = lm * f * f / (kappa * lp * lp * gamma);
  return b;
}

BoundConstants cost_linear_bound(double gamma, const NoiseLevel& noise, double kappa) {
  if (kappa == 1.0) return isotropic_linear_bound(gamma, noise);
  return anisotropic_linear_bound(gamma, noise, kappa);
}

double ols_gap(double gamma, const NoiseLevel& noise) {
  const MPLaw law(gamma);
  // (sigma2/gamma)(1/q - m_H(-sigma2)) with q = 1 - 1/gamma, rewritten without
  // the cancellation that the difference suffers for small sigma2.
  const double s2 = noise.sigma2();
  const double q = 1.0 - 1.0 / gamma;
  const double a = q + s2;
  const double R = std::sqrt(a * a + 4.0 * s2 / gamma);
  const double bracket = (2.0 * q + s2 + 4.0 / gamma) / (R + q) + 1.0;
  return noise.sigma4() / gamma * bracket / (q * (R + a));
}

double ols_gap_quadrature(double gamma, const NoiseLevel& noise) {
  const MPLaw law(gamma);
  const double s2 = noise.sigma2();
  return noise.sigma4() / gamma * mp_integrate(law, [&](double s) { return 1.0 / (s * (s + s2)); });
}

RhoSolution solve_rho_ols(double gamma, const NoiseLevel& noise) {
  const MPLaw law(gamma);
  const double s2 = noise.sigma2();
  // int 1/(s (s + sigma2)) dH = gamma ols_gap / sigma^4.
  const double target = gamma * ols_gap(gamma, noise) / noise.sigma4();
  const auto phi = [&](double rho) { return rho * rho * cost_integral(law, s2, rho) - target; };
  const Root r = solve_increasing(law, phi, "solve_rho_ols", 0.0);
  RhoSolution out;
  out.rho = r.rho;
  out.residual = r.residual;
  out.regime = Regime::above_threshold;
  out.target_eps2 = asymptotic_train(gamma, noise, r.rho);
  return out;
}

double ols_threshold(double gamma, const NoiseLevel& noise) {
  return solve_rho_ols(gamma, noise).target_eps2;
}

ThresholdReport threshold_report(double gamma, const NoiseLevel& noise,
                                 const PopulationSpectrum* pop) {
  ThresholdReport t;
  t.eps_sigma2 = memorization_threshold(gamma, noise);
  t.eps_sigma2_approx = threshold_approx(gamma, noise);
  const RhoSolution ols = solve_rho_ols(gamma, noise);
  t.rho_ols = ols.rho;
  t.eps_ols2 = ols.target_eps2;
  if (pop != nullptr) {
    t.eps_def2 = deformed_threshold(DeformedLaw(gamma, *pop), noise.sigma2());
    const double kappa = pop->kappa();
    t.eps_def2_upper =
        noise.sigma4() * kappa * mp_stieltjes_neg(MPLaw(gamma), kappa * noise.sigma2());
  }
  return t;
}

RhoSolution solve_rho_def(double gamma, const PopulationSpectrum& pop, const NoiseLevel& noise,
                          double eps2) {
  require_eps2(eps2);
  const MPLaw law(gamma);
  const double threshold = deformed_threshold(DeformedLaw(gamma, pop), noise.sigma2());
  RhoSolution out;
  out.target_eps2 = eps2;
  if (eps2 < threshold) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "eps2 = " << eps2 << " lies below the deformed threshold " << threshold
        << "; the cost of not fitting is zero there";
    throw RegimeError(msg.str());
  }
  const double rhs = eps2 - threshold;
  if (rhs == 0.0) return out;

  const double ks2 = pop.kappa() * noise.sigma2();
  const double ks4 = pop.kappa() * noise.sigma4();
  const double m = mp_stieltjes_neg(law, ks2);
  const auto phi = [&](double rho) { return ks4 * (train_integral(law, ks2, rho) - m) - rhs; };
  const Root r = solve_increasing(law, phi, "solve_rho_def", rhs);
  out.rho = r.rho;
  out.residual = r.residual;
  out.regime = Regime::above_threshold;
  return out;
}

double anisotropic_cost_lower_bound(double gamma, const PopulationSpectrum& pop,
                                    const NoiseLevel& noise, double eps2) {
  const RhoSolution sol = solve_rho_def(gamma, pop, noise, eps2);
  return cost_at_rho(gamma, noise, sol.rho);
}

double rho_equation_residual(double gamma, const NoiseLevel& noise, double eps2, double rho) {
  const MPLaw law(gamma);
  const double s2 = noise.sigma2();
  const double s4 = noise.sigma4();
  const double lhs = mp_integrate(law, [&](double s) {
    const double u = 1.0 - rho * s;
    return s4 / (u * u * (s + s2));
  }, kCheckQuadrature);
  return lhs - eps2;
}

double rho_ols_equation_residual(double gamma, const NoiseLevel& noise, double rho) {
  const MPLaw law(gamma);
  const double s2 = noise.sigma2();
  const double lhs = mp_integrate(law, [&](double s) {
    const double u = 1.0 - rho * s;
    return rho * rho * s / (u * u * (s + s2));
  }, kCheckQuadrature);
  const double rhs = mp_integrate(law, [&](double s) { return 1.0 / (s * (s + s2)); });
  return lhs - rhs;
}

double rho_def_equation_residual(double gamma, const PopulationSpectrum& pop,
                                 const NoiseLevel& noise, double eps2, double rho) {
  const MPLaw law(gamma);
  const double threshold = deformed_threshold(DeformedLaw(gamma, pop), noise.sigma2());
  const double ks2 = pop.kappa() * noise.sigma2();
  const double integral = mp_integrate(law, [&](double s) {
    const double u = 1.0 - rho * s;
    return (1.0 / (u * u) - 1.0) / (s + ks2);
  }, kCheckQuadrature);
  return pop.kappa() * noise.sigma4() * integral - (eps2 - threshold);
}

}  // namespace memcost
