#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <vector>

namespace memcost {

/// Closed real interval [lo, hi] with lo < hi, both finite.
class Interval {
public:
  Interval(double lo, double hi);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double width() const noexcept { return hi_ - lo_; }
  double center() const noexcept { return 0.5 * (lo_ + hi_); }
  double half_width() const noexcept { return 0.5 * (hi_ - lo_); }

private:
  double lo_;
  double hi_;
};

/// Stopping rule for scalar solvers. `abs_tol` bounds |f(x)| and doubles as
/// the absolute part of the bracket-width test.
struct ToleranceSpec {
  double abs_tol = 1e-12;
  double rel_tol = 1e-15;
  int max_iter = 200;

  void validate() const;
};

struct QuadratureRule {
  std::vector<double> nodes;    // strictly increasing, in (-1, 1)
  std::vector<double> weights;  // all equal to pi / k

  std::size_t node_count() const noexcept { return nodes.size(); }
};

/// k-point Chebyshev-Gauss rule of the first kind:
///   int_{-1}^{1} g(x) / sqrt(1 - x^2) dx  ~  (pi / k) * sum g(x_i),
/// x_i = cos((2i - 1) pi / (2k)). Nodes are returned in increasing order.
QuadratureRule chebyshev_gauss_rule(int k);

/// Bisection for a continuous monotone f on `bracket`. Deterministic: the
/// same inputs always produce the same bits.
///
/// Throws BracketError if f(lo), f(hi) have the same strict sign and
/// ConvergenceError (carrying the last bracket) after tol.max_iter halvings.
double bisect(const std::function<double(double)>& f, const Interval& bracket,
              const ToleranceSpec& tol);

struct BisectResult {
  double x = 0.0;
  double fx = 0.0;
  double lo = 0.0;  // final bracket, lo <= x <= hi
  double hi = 0.0;
  int iterations = 0;
};

/// Same algorithm as bisect, also reporting f(x) and the final bracket.
BisectResult bisect_detailed(const std::function<double(double)>& f, const Interval& bracket,
                             const ToleranceSpec& tol);

struct AdaptiveOptions {
  int initial_nodes = 2048;
  int max_nodes = 1 << 18;
  double rel_tol = 1e-11;
};

struct QuadratureResult {
  double value = 0.0;
  double abs_value = 0.0;  // same rule applied to |integrand|
  double last_change = 0.0;
  int nodes = 0;
  bool converged = false;
};

/// Adaptive evaluation of  int_lo^hi sqrt((hi - s)(s - lo)) g(s) ds.
///
/// The substitution s = center + half_width * x turns the square-root factor
/// into sqrt(1 - x^2), which is moved onto the Chebyshev-Gauss weight; the
/// node count doubles from `initial_nodes` until two successive estimates
/// agree to rel_tol (relative to the integral of |g|) or `max_nodes` is
/// reached. Never throws on non-convergence; check `converged`.
///
/// Throws DomainError naming the offending node if g is not finite there.
QuadratureResult integrate_sqrt_weighted(const std::function<double(double)>& g,
                                         const Interval& support,
                                         const AdaptiveOptions& opts = {});

struct SymEig {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // orthonormal columns, vectors.col(i) <-> values(i)
};

/// Dense symmetric eigendecomposition. Throws ContractError if M is not
/// square or not symmetric to within 1e-12 relative.
SymEig sym_eig(const Eigen::Ref<const Eigen::MatrixXd>& M);

/// Eigenvalues only (ascending); same contract as sym_eig.
Eigen::VectorXd sym_eigenvalues(const Eigen::Ref<const Eigen::MatrixXd>& M);

struct ThinSvd {
  Eigen::VectorXd values;  // descending
  Eigen::MatrixXd U;       // rows x r
  Eigen::MatrixXd V;       // cols x r
  Eigen::Index rank = 0;   // numerical rank, reported rather than enforced
};

/// Thin singular value decomposition M = U diag(values) V^T with
/// r = min(rows, cols).
ThinSvd svd_thin(const Eigen::Ref<const Eigen::MatrixXd>& M);

}  // namespace memcost
