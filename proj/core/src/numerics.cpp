#include "memcost/numerics.hpp"

#include "memcost/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace memcost {

Interval::Interval(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    std::ostringstream msg;
    msg << "invalid interval [" << lo << ", " << hi << "]";
    throw ContractError(msg.str());
  }
}

void ToleranceSpec::validate() const {
  if (!(abs_tol >= 0.0) || !(rel_tol >= 0.0) || !(abs_tol + rel_tol > 0.0)) {
    throw ContractError("tolerance: need abs_tol, rel_tol >= 0 with a positive sum");
  }
  if (max_iter < 1) {
    throw ContractError("tolerance: max_iter must be positive");
  }
}

QuadratureRule chebyshev_gauss_rule(int k) {
  if (k < 1) {
    throw ContractError("chebyshev_gauss_rule: k must be >= 1");
  }
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(k));
  rule.weights.assign(static_cast<std::size_t>(k), std::numbers::pi / k);
  for (int j = 0; j < k; ++j) {
    // i = k - j runs downward, so cos(...) runs upward.
    const int i = k - j;
    rule.nodes[static_cast<std::size_t>(j)] = std::cos((2.0 * i - 1.0) * std::numbers::pi / (2.0 * k));
  }
  // cos((k+1)pi/(2k)) style nodes are exactly symmetric in theory; make the
  // middle node an exact zero for odd k.
  if (k % 2 == 1) {
    rule.nodes[static_cast<std::size_t>(k / 2)] = 0.0;
  }
  return rule;
}

double bisect(const std::function<double(double)>& f, const Interval& bracket,
              const ToleranceSpec& tol) {
  return bisect_detailed(f, bracket, tol).x;
}

BisectResult bisect_detailed(const std::function<double(double)>& f, const Interval& bracket,
                             const ToleranceSpec& tol) {
  tol.validate();
  BisectResult r;
  double lo = bracket.lo();
  double hi = bracket.hi();
  double f_lo = f(lo);
  double f_hi = f(hi);
  r.lo = lo;
  r.hi = hi;
  if (f_lo == 0.0) {
    r.x = lo;
    return r;
  }
  if (f_hi == 0.0) {
    r.x = hi;
    return r;
  }
  if (std::signbit(f_lo) == std::signbit(f_hi) || std::isnan(f_lo) || std::isnan(f_hi)) {
    std::ostringstream msg;
    msg << "bisect: no sign change on [" << lo << ", " << hi << "] (f = " << f_lo << ", " << f_hi
        << ")";
    throw BracketError(msg.str(), f_lo, f_hi);
  }

  for (int it = 1; it <= tol.max_iter; ++it) {
    r.iterations = it;
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) {
      // Bracket has collapsed to adjacent doubles.
      const bool take_lo = std::fabs(f_lo) <= std::fabs(f_hi);
      r.x = take_lo ? lo : hi;
      r.fx = take_lo ? f_lo : f_hi;
      r.lo = lo;
      r.hi = hi;
      return r;
    }
    const double f_mid = f(mid);
    if (std::fabs(f_mid) <= tol.abs_tol) {
      r.x = mid;
      r.fx = f_mid;
      r.lo = lo;
      r.hi = hi;
      return r;
    }
    if (std::signbit(f_mid) == std::signbit(f_lo)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
    if (hi - lo <= tol.rel_tol * std::fabs(lo + 0.5 * (hi - lo)) + tol.abs_tol) {
      const bool take_lo = std::fabs(f_lo) <= std::fabs(f_hi);
      r.x = take_lo ? lo : hi;
      r.fx = take_lo ? f_lo : f_hi;
      r.lo = lo;
      r.hi = hi;
      return r;
    }
  }
  std::ostringstream msg;
  msg << "bisect: no convergence after " << tol.max_iter << " iterations, last bracket [" << lo
      << ", " << hi << "]";
  throw ConvergenceError(msg.str(), lo, hi);
}

namespace {

struct RuleSum {
  double value;
  double abs_value;
};

RuleSum chebyshev_sum(const std::function<double(double)>& g, const Interval& support, int k) {
  const double c = support.center();
  const double h = support.half_width();
  const double step = std::numbers::pi / (2.0 * k);
  double sum = 0.0;
  double abs_sum = 0.0;
  for (int i = 1; i <= k; ++i) {
    const double x = std::cos((2.0 * i - 1.0) * step);
    const double s = c + h * x;
    const double gs = g(s);
    if (!std::isfinite(gs)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "integrand is not finite at node s = " << s << " (node " << i << " of " << k << ")";
      throw DomainError(msg.str());
    }
    // sqrt(1 - x^2) = sin(theta) for x = cos(theta); (1 - x^2) transfers
    // the weight onto the first-kind rule.
    const double sin_t = std::sin((2.0 * i - 1.0) * step);
    const double term = sin_t * sin_t * gs;
    sum += term;
    abs_sum += std::fabs(term);
  }
  const double scale = h * h * std::numbers::pi / k;
  return {scale * sum, scale * abs_sum};
}

}  // namespace

QuadratureResult integrate_sqrt_weighted(const std::function<double(double)>& g,
                                         const Interval& support, const AdaptiveOptions& opts) {
  if (opts.initial_nodes < 1 || opts.max_nodes < opts.initial_nodes || !(opts.rel_tol > 0.0)) {
    throw ContractError("integrate_sqrt_weighted: invalid adaptive options");
  }
  QuadratureResult out;
  int k = opts.initial_nodes;
  RuleSum prev = chebyshev_sum(g, support, k);
  out.value = prev.value;
  out.abs_value = prev.abs_value;
  out.nodes = k;
  while (k <= opts.max_nodes / 2) {
    k *= 2;
    const RuleSum next = chebyshev_sum(g, support, k);
    out.last_change = std::fabs(next.value - prev.value);
    out.value = next.value;
    out.abs_value = next.abs_value;
    out.nodes = k;
    if (out.last_change <= opts.rel_tol * next.abs_value) {
      out.converged = true;
      return out;
    }
    prev = next;
  }
  return out;
}

namespace {

void require_symmetric(const Eigen::Ref<const Eigen::MatrixXd>& M, const char* who) {
  if (M.rows() != M.cols()) {
    throw ContractError(std::string(who) + ": matrix is not square");
  }
  const double scale = M.cwiseAbs().maxCoeff();
  const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    std::ostringstream msg;
    msg << who << ": matrix is not symmetric (max |M - M^T| = " << asym << ", max |M| = " << scale
        << ")";
    throw ContractError(msg.str());
  }
}

}  // namespace

SymEig sym_eig(const Eigen::Ref<const Eigen::MatrixXd>& M) {
  require_symmetric(M, "sym_eig");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(M, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("sym_eig: eigensolver did not converge", 0.0, 0.0);
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Eigen::VectorXd sym_eigenvalues(const Eigen::Ref<const Eigen::MatrixXd>& M) {
  require_symmetric(M, "sym_eigenvalues");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(M, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("sym_eigenvalues: eigensolver did not converge", 0.0, 0.0);
  }
  return solver.eigenvalues();
}

ThinSvd svd_thin(const Eigen::Ref<const Eigen::MatrixXd>& M) {
  ThinSvd out;
  const Eigen::Index r = std::min(M.rows(), M.cols());
  if (r == 0) {
    out.U.resize(M.rows(), 0);
    out.V.resize(M.cols(), 0);
    return out;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.values = svd.singularValues();
  out.U = svd.matrixU();
  out.V = svd.matrixV();
  const double cutoff = out.values(0) * static_cast<double>(std::max(M.rows(), M.cols())) *
                        std::numeric_limits<double>::epsilon();
  out.rank = 0;
  for (Eigen::Index i = 0; i < r; ++i) {
    if (out.values(i) > cutoff) ++out.rank;
  }
  return out;
}

}  // namespace memcost
