#include "memcost/spectra.hpp"

#include "memcost/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace memcost {

namespace {

void require_regime(double gamma) {
  if (!std::isfinite(gamma) || !(gamma > 1.0)) {
    std::ostringstream msg;
    msg << "aspect ratio gamma = d/n must exceed 1 (got " << gamma << ")";
    throw RegimeError(msg.str());
  }
}

}  // namespace

MPLaw::MPLaw(double gamma) : gamma_(gamma) {
  require_regime(gamma);
  const double r = 1.0 / std::sqrt(gamma);
  lambda_minus_ = (1.0 - r) * (1.0 - r);
  lambda_plus_ = (1.0 + r) * (1.0 + r);
}

double MPLaw::density(double s) const noexcept {
  if (!(s > lambda_minus_) || !(s < lambda_plus_)) return 0.0;
  return gamma_ / (2.0 * std::numbers::pi) * std::sqrt((lambda_plus_ - s) * (s - lambda_minus_)) / s;
}

Interval mp_support(double gamma) {
  return MPLaw(gamma).support();
}

MPRule::MPRule(const MPLaw& law, int k) {
  if (k < 1) throw ContractError("MPRule: k must be >= 1");
  const Interval iv = law.support();
  const double c = iv.center();
  const double h = iv.half_width();
  const double step = std::numbers::pi / (2.0 * k);
  const double scale = law.gamma() / (2.0 * std::numbers::pi) * h * h * std::numbers::pi / k;
  nodes_.resize(static_cast<std::size_t>(k));
  weights_.resize(static_cast<std::size_t>(k));
  for (int i = 1; i <= k; ++i) {
    const double theta = (2.0 * i - 1.0) * step;
    const double s = c + h * std::cos(theta);
    const double st = std::sin(theta);
    nodes_[static_cast<std::size_t>(i - 1)] = s;
    weights_[static_cast<std::size_t>(i - 1)] = scale * st * st / s;
  }
}

QuadratureResult mp_integrate_detailed(const MPLaw& law, const std::function<double(double)>& f,
                                       const AdaptiveOptions& opts) {
  const double pref = law.gamma() / (2.0 * std::numbers::pi);
  return integrate_sqrt_weighted([&](double s) { return pref * f(s) / s; }, law.support(), opts);
}

double mp_integrate(const MPLaw& law, const std::function<double(double)>& f,
                    const AdaptiveOptions& opts) {
  const QuadratureResult r = mp_integrate_detailed(law, f, opts);
  if (!r.converged) {
    std::ostringstream msg;
    msg << "mp_integrate: no convergence with " << r.nodes << " nodes (last change "
        << r.last_change << ", scale " << r.abs_value << ")";
    throw ConvergenceError(msg.str(), r.value, r.value);
  }
  return r.value;
}

double mp_stieltjes_neg(const MPLaw& law, double sigma2) {
  if (!std::isfinite(sigma2) || !(sigma2 > 0.0)) {
    std::ostringstream msg;
    msg << "noise variance sigma2 must be positive (got " << sigma2 << ")";
    throw DomainError(msg.str());
  }
  // (sqrt(a^2 + 4 sigma2/gamma) - a) / (2 sigma2/gamma), rationalised to
  // avoid cancellation when sigma2 is small.
  const double a = 1.0 - 1.0 / law.gamma() + sigma2;
  return 2.0 / (std::sqrt(a * a + 4.0 * sigma2 / law.gamma()) + a);
}

namespace {

struct RightResolvent {
  double g;   // int 1/(z - s) dH
  double g2;  // int 1/(z - s)^2 dH
};

// With c = 1/gamma and S = sqrt((z - lambda_-)(z - lambda_+)), the branch
// decaying like 1/z is 2 / (S + z - 1 + c); differentiating gives g2.
RightResolvent right_resolvent(const MPLaw& law, double z) {
  if (!std::isfinite(z) || !(z > law.lambda_plus())) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "resolvent: z = " << z << " must exceed lambda_+ = " << law.lambda_plus();
    throw DomainError(msg.str());
  }
  const double c = 1.0 / law.gamma();
  const double S = std::sqrt((z - law.lambda_minus()) * (z - law.lambda_plus()));
  const double D = S + z - 1.0 + c;
  const double dS = (2.0 * z - law.lambda_minus() - law.lambda_plus()) / (2.0 * S);
  const double g = 2.0 / D;
  return {g, 2.0 * (dS + 1.0) / (D * D)};
}

}  // namespace

double mp_resolvent_right(const MPLaw& law, double z) {
  return right_resolvent(law, z).g;
}

double mp_resolvent_right_sq(const MPLaw& law, double z) {
  return right_resolvent(law, z).g2;
}

double mp_cdf(const MPLaw& law, double x) {
  const double lo = law.lambda_minus();
  const double hi = law.lambda_plus();
  if (!(x > lo)) return 0.0;
  if (!(x < hi)) return 1.0;
  const double c = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo);
  // s = c + h cos(theta): s runs from x to lambda_- as theta runs to pi.
  const double theta_x = std::acos(std::clamp((x - c) / h, -1.0, 1.0));
  const int panels = 4000;  // even, composite Simpson
  const double dt = (std::numbers::pi - theta_x) / panels;
  auto g = [&](double t) {
    const double st = std::sin(t);
    return st * st / (c + h * std::cos(t));
  };
  double sum = g(theta_x) + g(std::numbers::pi);
  for (int j = 1; j < panels; ++j) {
    sum += (j % 2 == 1 ? 4.0 : 2.0) * g(theta_x + j * dt);
  }
  const double value = law.gamma() / (2.0 * std::numbers::pi) * h * h * sum * dt / 3.0;
  return std::clamp(value, 0.0, 1.0);
}

double EmpiricalSpectrum::cdf(double x) const {
  if (values.size() == 0) return 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) <= x) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(values.size());
}

EmpiricalSpectrum esd_from_design(const Eigen::Ref<const Eigen::MatrixXd>& X) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n > d) {
    std::ostringstream msg;
    msg << "esd_from_design: need n <= d (got " << n << " x " << d << ")";
    throw ShapeError(msg.str());
  }
  EmpiricalSpectrum out;
  out.n = n;
  out.d = d;
  if (n == 0) return out;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(X, 1.0 / static_cast<double>(d));
  gram = gram.selfadjointView<Eigen::Lower>();
  const Eigen::VectorXd ev = sym_eigenvalues(gram);
  out.values.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = std::max(0.0, ev(n - 1 - i));
  }
  return out;
}

BaiYinDeviation bai_yin_check(const EmpiricalSpectrum& spec, const MPLaw& law) {
  if (spec.values.size() == 0) {
    throw ContractError("bai_yin_check: empty spectrum");
  }
  const double top = spec.values(0);
  const double bottom = spec.values(spec.values.size() - 1);
  return {std::fabs(top - law.lambda_plus()) / law.lambda_plus(),
          std::fabs(bottom - law.lambda_minus()) / law.lambda_minus()};
}

std::vector<CdfPoint> cdf_table(const EmpiricalSpectrum& spec, const MPLaw& law, int points) {
  if (points < 2) throw ContractError("cdf_table: need at least 2 points");
  const double a = 0.5 * law.lambda_minus();
  const double b = 2.0 * law.lambda_plus();
  std::vector<CdfPoint> out;
  out.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double x = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
    out.push_back({x, spec.cdf(x), mp_cdf(law, x)});
  }
  return out;
}

double kolmogorov_distance(const EmpiricalSpectrum& spec, const MPLaw& law, int points) {
  double worst = 0.0;
  for (const CdfPoint& p : cdf_table(spec, law, points)) {
    worst = std::max(worst, std::fabs(p.empirical - p.limit));
  }
  return worst;
}

}  // namespace memcost
