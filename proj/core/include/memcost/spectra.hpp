#pragma once

#include "memcost/numerics.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace memcost {

/// Marchenko-Pastur law H of (1/d) Z Z^T with aspect ratio gamma = d / n > 1.
class MPLaw {
public:
  explicit MPLaw(double gamma);

  double gamma() const noexcept { return gamma_; }
  double lambda_minus() const noexcept { return lambda_minus_; }
  double lambda_plus() const noexcept { return lambda_plus_; }
  Interval support() const { return {lambda_minus_, lambda_plus_}; }

  /// Density of H at s (zero outside the support).
  double density(double s) const noexcept;

private:
  double gamma_;
  double lambda_minus_;
  double lambda_plus_;
};

/// [(1 - 1/sqrt(gamma))^2, (1 + 1/sqrt(gamma))^2]. Throws RegimeError for gamma <= 1.
Interval mp_support(double gamma);

/// A fixed k-node rule for integrals against H, with nodes and weights
/// precomputed so that  int f dH ~ sum_i weights[i] * f(nodes[i]).
/// Useful when the same rule must be reused (e.g. inside a root search).
class MPRule {
public:
  MPRule(const MPLaw& law, int k);

  int node_count() const noexcept { return static_cast<int>(nodes_.size()); }
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  template <class F>
  double integrate(F&& f) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) sum += weights_[i] * f(nodes_[i]);
    return sum;
  }

private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Adaptive int f dH. Throws DomainError if f is not finite at a node and
/// ConvergenceError if the tolerance is not met within the node cap.
double mp_integrate(const MPLaw& law, const std::function<double(double)>& f,
                    const AdaptiveOptions& opts = {});

/// As mp_integrate but never throws on non-convergence.
QuadratureResult mp_integrate_detailed(const MPLaw& law, const std::function<double(double)>& f,
                                       const AdaptiveOptions& opts = {});

/// int 1/(s + sigma2) dH(s), closed form. Throws DomainError for sigma2 <= 0.
double mp_stieltjes_neg(const MPLaw& law, double sigma2);

/// int 1/(z - s) dH(s) for real z > lambda_+, closed form. Throws DomainError
/// unless z lies strictly right of the support.
double mp_resolvent_right(const MPLaw& law, double z);

/// int 1/(z - s)^2 dH(s) for real z > lambda_+; grows like (z - lambda_+)^{-1/2}.
double mp_resolvent_right_sq(const MPLaw& law, double z);

/// H((-inf, x]).
double mp_cdf(const MPLaw& law, double x);

struct EmpiricalSpectrum {
  Eigen::VectorXd values;  // eigenvalues of (1/d) X X^T, descending
  Eigen::Index n = 0;
  Eigen::Index d = 0;

  /// Fraction of eigenvalues <= x.
  double cdf(double x) const;
};

/// Squared singular values of X divided by d. Throws ShapeError if n > d.
EmpiricalSpectrum esd_from_design(const Eigen::Ref<const Eigen::MatrixXd>& X);

struct BaiYinDeviation {
  double max_rel_dev = 0.0;  // |lambda_1^2/d - lambda_+| / lambda_+
  double min_rel_dev = 0.0;  // |lambda_n^2/d - lambda_-| / lambda_-
};

BaiYinDeviation bai_yin_check(const EmpiricalSpectrum& spec, const MPLaw& law);

struct CdfPoint {
  double x;
  double empirical;
  double limit;
};

/// Empirical and limiting c.d.f. on `points` equispaced abscissae covering
/// [lambda_-/2, 2 lambda_+].
std::vector<CdfPoint> cdf_table(const EmpiricalSpectrum& spec, const MPLaw& law, int points = 100);

/// Max |F_n - F| over cdf_table(spec, law, points).
double kolmogorov_distance(const EmpiricalSpectrum& spec, const MPLaw& law, int points = 100);

}  // namespace memcost
