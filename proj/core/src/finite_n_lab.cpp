#include "memcost/finite_n_lab.hpp"

#include "memcost/errors.hpp"
#include "memcost/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace memcost {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(EntryDist e) noexcept {
  return e == EntryDist::gaussian ? "gaussian" : "rademacher";
}

void ExperimentConfig::validate() const {
  if (n < 1 || d < 1) {
    throw ContractError("experiment: n and d must be positive");
  }
  if (d <= n) {
    std::ostringstream msg;
    msg << "experiment: need d > n (overparameterized regime, d/n > 1); got n = " << n
        << ", d = " << d;
    throw RegimeError(msg.str());
  }
  if (!std::isfinite(sigma2) || !(sigma2 > 0.0)) {
    throw DomainError("experiment: sigma2 must be positive");
  }
  if (trials < 1) {
    throw ContractError("experiment: trials must be >= 1");
  }
  if (!std::isfinite(target.value) || target.value < 0.0) {
    throw DomainError("experiment: rho / eps2 must be finite and non-negative");
  }
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) noexcept {
  return seed ^ splitmix64(trial);
}

VectorXd realize_sigma_sqrt(const PopulationSpectrum& pop, int d) {
  if (d < 1) throw ContractError("realize_sigma_sqrt: d must be positive");
  std::vector<PopulationSpectrum::Atom> atoms = pop.atoms();
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const auto& a, const auto& b) { return a.value > b.value; });
  const std::size_t m = atoms.size();
  std::vector<long> count(m);
  std::vector<double> frac(m);
  long assigned = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const double quota = atoms[j].weight * d;
    count[j] = static_cast<long>(std::floor(quota));
    frac[j] = quota - static_cast<double>(count[j]);
    assigned += count[j];
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t r = 0; assigned < d; ++r, ++assigned) {
    ++count[order[r % m]];
  }
  VectorXd out(d);
  Index pos = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const double root = std::sqrt(atoms[j].value);
    for (long c = 0; c < count[j] && pos < d; ++c) out(pos++) = root;
  }
  return out;
}

DesignSample sample_design(const ExperimentConfig& config, int trial) {
  config.validate();
  if (trial < 0 || trial >= config.trials) {
    std::ostringstream msg;
    msg << "sample_design: trial " << trial << " outside [0, " << config.trials << ")";
    throw ContractError(msg.str());
  }
  std::mt19937_64 rng(trial_seed(config.seed, static_cast<std::uint64_t>(trial)));
  DesignSample s;
  s.Z.resize(config.n, config.d);
  if (config.entries == EntryDist::gaussian) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index i = 0; i < config.n; ++i)
      for (Index j = 0; j < config.d; ++j) s.Z(i, j) = normal(rng);
  } else {
    for (Index i = 0; i < config.n; ++i)
      for (Index j = 0; j < config.d; ++j) s.Z(i, j) = (rng() >> 63) ? 1.0 : -1.0;
  }
  s.sigma_sqrt = realize_sigma_sqrt(config.population, config.d);
  s.X = s.Z * s.sigma_sqrt.asDiagonal();
  return s;
}

namespace {

void require_shapes(const Eigen::Ref<const MatrixXd>& X, const Eigen::Ref<const VectorXd>& ss,
                    const char* who) {
  if (ss.size() != X.cols()) {
    std::ostringstream msg;
    msg << who << ": sigma_sqrt has length " << ss.size() << " but X has " << X.cols()
        << " columns";
    throw ShapeError(msg.str());
  }
}

MatrixXd gram_cols(const Eigen::Ref<const MatrixXd>& X) {
  MatrixXd G = MatrixXd::Zero(X.cols(), X.cols());
  G.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  return G.selfadjointView<Eigen::Lower>();
}

MatrixXd gram_rows(const Eigen::Ref<const MatrixXd>& X) {
  MatrixXd G = MatrixXd::Zero(X.rows(), X.rows());
  G.selfadjointView<Eigen::Lower>().rankUpdate(X);
  return G.selfadjointView<Eigen::Lower>();
}

// Cholesky factor of M = Sigma - (rho/d) X^T X after an eigenvalue check.
struct Constraint {
  Eigen::LLT<MatrixXd> llt;
  double min_eigenvalue = 0.0;
};

Constraint factor_constraint(const MatrixXd& XtX, const Eigen::Ref<const VectorXd>& ss,
                             double rho) {
  const double d = static_cast<double>(XtX.rows());
  MatrixXd M = -(rho / d) * XtX;
  M.diagonal() += ss.cwiseAbs2();
  Constraint c;
  c.min_eigenvalue = sym_eigenvalues(M)(0);
  if (!(c.min_eigenvalue > 1e-10)) {
    std::ostringstream msg;
    msg << "rho = " << rho << " is infeasible: Sigma - (rho/d) X^T X has minimum eigenvalue "
        << c.min_eigenvalue;
    throw FeasibilityError(msg.str(), c.min_eigenvalue);
  }
  c.llt.compute(M);
  if (c.llt.info() != Eigen::Success) {
    throw FeasibilityError("Cholesky factorization of Sigma - (rho/d) X^T X failed",
                           c.min_eigenvalue);
  }
  return c;
}

double rel_frobenius(const MatrixXd& a, const MatrixXd& b) {
  const double denom = b.norm();
  const double diff = (a - b).norm();
  return denom > 0.0 ? diff / denom : diff;
}

ThinSvd checked_svd(const Eigen::Ref<const MatrixXd>& X, const char* who) {
  if (X.rows() > X.cols()) {
    throw ShapeError(std::string(who) + ": need n <= d");
  }
  ThinSvd svd = svd_thin(X);
  const double smin = X.rows() > 0 ? svd.values(X.rows() - 1) : 0.0;
  if (!(smin > 1e-8 * std::sqrt(static_cast<double>(X.cols())))) {
    std::ostringstream msg;
    msg << who << ": X X^T is numerically singular (smallest singular value " << smin << ")";
    throw RankError(msg.str(), smin);
  }
  return svd;
}

// P(A0 + S) - P(A0) as 2<U, V> + |V|^2 terms, so a small shift S keeps full
// relative precision instead of cancelling two O(1) errors.
double pred_growth_expanded(const MatrixXd& A0, const MatrixXd& S, const Eigen::Ref<const MatrixXd>& X,
                            const Eigen::Ref<const VectorXd>& sigma_sqrt, double sigma2) {
  const double d = static_cast<double>(X.cols());
  MatrixXd U = A0 * X;
  U.diagonal().array() -= 1.0;
  U = sigma_sqrt.asDiagonal() * U;
  const MatrixXd V = sigma_sqrt.asDiagonal() * (S * X);
  const MatrixXd WA = sigma_sqrt.asDiagonal() * A0;
  const MatrixXd WS = sigma_sqrt.asDiagonal() * S;
  const double bias = (2.0 * (U.array() * V.array()).sum() + V.squaredNorm()) / d;
  const double var = sigma2 * (2.0 * (WA.array() * WS.array()).sum() + WS.squaredNorm());
  return bias + var;
}

}  // namespace

EstimatorMatrix build_estimator(const Eigen::Ref<const MatrixXd>& X,
                                const Eigen::Ref<const VectorXd>& sigma_sqrt, double sigma2,
                                double rho) {
  require_shapes(X, sigma_sqrt, "build_estimator");
  if (!(rho >= 0.0)) throw DomainError("build_estimator: rho must be non-negative");
  const double dd = static_cast<double>(X.cols());

  const MatrixXd XtX = gram_cols(X);
  const Constraint c = factor_constraint(XtX, sigma_sqrt, rho);

  // Primal form: (X^T X + d sigma2 I)^{-1} X^T.
  MatrixXd big = XtX;
  big.diagonal().array() += dd * sigma2;
  const MatrixXd ridge2 = big.llt().solve(X.transpose());
  // Dual form: X^T (X X^T + d sigma2 I)^{-1}.
  MatrixXd small = gram_rows(X);
  small.diagonal().array() += dd * sigma2;
  const MatrixXd ridge1 =
      small.llt().solve(X).transpose();  // (K^{-1} X)^T = X^T K^{-1}, K symmetric

  EstimatorMatrix e;
  e.rho = rho;
  e.feasible = true;
  e.min_eigenvalue = c.min_eigenvalue;
  e.shift = -rho * sigma2 * c.llt.solve(ridge2);
  e.A = ridge2 + e.shift;
  const MatrixXd A1 = ridge1 - rho * sigma2 * c.llt.solve(ridge1);
  e.form_deviation = rel_frobenius(A1, e.A);
  return e;
}

double pred_error_direct(const Eigen::Ref<const MatrixXd>& A, const Eigen::Ref<const MatrixXd>& X,
                         const Eigen::Ref<const VectorXd>& sigma_sqrt, double sigma2) {
  require_shapes(X, sigma_sqrt, "pred_error_direct");
  if (A.rows() != X.cols() || A.cols() != X.rows()) {
    throw ShapeError("pred_error_direct: A must be d x n");
  }
  const double d = static_cast<double>(X.cols());
  MatrixXd AXmI = A * X;
  AXmI.diagonal().array() -= 1.0;
  const double bias = (sigma_sqrt.asDiagonal() * AXmI).squaredNorm() / d;
  const double var = sigma2 * (sigma_sqrt.asDiagonal() * A).squaredNorm();
  return bias + var;
}

double train_error_direct(const Eigen::Ref<const MatrixXd>& A, const Eigen::Ref<const MatrixXd>& X,
                          double sigma2) {
  if (A.rows() != X.cols() || A.cols() != X.rows()) {
    throw ShapeError("train_error_direct: A must be d x n");
  }
  const double n = static_cast<double>(X.rows());
  const double d = static_cast<double>(X.cols());
  MatrixXd XAmI = X * A;
  XAmI.diagonal().array() -= 1.0;
  const MatrixXd XAXmX = XAmI * X;
  return XAXmX.squaredNorm() / (n * d) + sigma2 / n * XAmI.squaredNorm();
}

GrowthTrace error_growth_trace(const Eigen::Ref<const MatrixXd>& X,
                               const Eigen::Ref<const VectorXd>& sigma_sqrt, double sigma2,
                               double rho) {
  require_shapes(X, sigma_sqrt, "error_growth_trace");
  const ThinSvd svd = checked_svd(X, "error_growth_trace");
  const double n = static_cast<double>(X.rows());
  const double d = static_cast<double>(X.cols());
  const double s4 = sigma2 * sigma2;
  const Constraint c = factor_constraint(gram_cols(X), sigma_sqrt, rho);

  const VectorXd sv2 = svd.values.cwiseAbs2();
  const VectorXd sigma = sigma_sqrt.cwiseAbs2();

  // Training error: (d sigma^4/n) sum_j ||X M^{-1} Sigma v_j||^2 / (s_j^2 (s_j^2 + d sigma2)).
  const MatrixXd B = c.llt.solve(sigma.asDiagonal() * svd.V);
  const MatrixXd XB = X * B;
  double train = 0.0;
  for (Index j = 0; j < XB.cols(); ++j) {
    train += XB.col(j).squaredNorm() / (sv2(j) * (sv2(j) + d * sigma2));
  }
  train *= d * s4 / n;

  // Prediction growth: (rho^2 sigma^4/d) sum_j ||Sigma^{1/2} M^{-1} v_j||^2 s_j^2/(s_j^2 + d sigma2).
  double growth = 0.0;
  if (rho != 0.0) {
    const MatrixXd C = sigma_sqrt.asDiagonal() * c.llt.solve(svd.V);
    for (Index j = 0; j < C.cols(); ++j) {
      growth += C.col(j).squaredNorm() * sv2(j) / (sv2(j) + d * sigma2);
    }
    growth *= rho * rho * s4 / d;
  }
  return {growth, train};
}

double lagrangian_gradient_residual(const Eigen::Ref<const MatrixXd>& A,
                                    const Eigen::Ref<const MatrixXd>& X,
                                    const Eigen::Ref<const VectorXd>& sigma_sqrt, double sigma2,
                                    double rho) {
  require_shapes(X, sigma_sqrt, "lagrangian_gradient_residual");
  if (A.rows() != X.cols() || A.cols() != X.rows()) {
    throw ShapeError("lagrangian_gradient_residual: A must be d x n");
  }
  const double n = static_cast<double>(X.rows());
  const double d = static_cast<double>(X.cols());
  const VectorXd sigma = sigma_sqrt.cwiseAbs2();
  // lambda/n = rho/d.
  auto apply_m = [&](const MatrixXd& Y) -> MatrixXd {
    return sigma.asDiagonal() * Y - (rho / d) * (X.transpose() * (X * Y));
  };
  MatrixXd K = gram_rows(X);
  K.diagonal().array() += d * sigma2;
  const MatrixXd first = apply_m(A * K) / d;
  const MatrixXd Xt = X.transpose();
  const MatrixXd second = (apply_m(Xt) - rho * sigma2 * Xt) / d;
  const double scale = X.norm() / (d * std::sqrt(n));
  return (first - second).norm() / scale;
}

double IdentityReport::max_deviation() const noexcept {
  return std::max({ax_minus_i, xa_minus_i, form_deviation});
}

IdentityReport matrix_identity_checks(const Eigen::Ref<const MatrixXd>& X,
                                      const Eigen::Ref<const VectorXd>& sigma_sqrt, double sigma2,
                                      double rho) {
  require_shapes(X, sigma_sqrt, "matrix_identity_checks");
  const double d = static_cast<double>(X.cols());
  const EstimatorMatrix est = build_estimator(X, sigma_sqrt, sigma2, rho);
  const MatrixXd XtX = gram_cols(X);
  const Constraint c = factor_constraint(XtX, sigma_sqrt, rho);
  const VectorXd sigma = sigma_sqrt.cwiseAbs2();

  MatrixXd big = XtX;
  big.diagonal().array() += d * sigma2;
  const MatrixXd big_inv = big.llt().solve(MatrixXd::Identity(X.cols(), X.cols()));

  IdentityReport r;
  r.form_deviation = est.form_deviation;

  MatrixXd lhs = est.A * X;
  lhs.diagonal().array() -= 1.0;
  const MatrixXd rhs = -d * sigma2 * c.llt.solve(sigma.asDiagonal() * big_inv);
  r.ax_minus_i = rel_frobenius(lhs, rhs);

  MatrixXd lhs2 = X * est.A;
  lhs2.diagonal().array() -= 1.0;
  const MatrixXd G = gram_rows(X);
  MatrixXd K = G;
  K.diagonal().array() += d * sigma2;
  // (X X^T)^{-1} (X X^T + d sigma2 I)^{-1}: both are functions of G and commute.
  const MatrixXd inner = G.llt().solve(K.llt().solve(MatrixXd::Identity(X.rows(), X.rows())));
  const MatrixXd rhs2 =
      -d * sigma2 * (X * c.llt.solve(sigma.asDiagonal() * X.transpose())) * inner;
  r.xa_minus_i = rel_frobenius(lhs2, rhs2);
  return r;
}

MinNormReport min_norm_interpolant_report(const Eigen::Ref<const MatrixXd>& X,
                                          const Eigen::Ref<const VectorXd>& sigma_sqrt,
                                          double sigma2) {
  require_shapes(X, sigma_sqrt, "min_norm_interpolant_report");
  if (X.rows() > X.cols()) throw ShapeError("min_norm_interpolant_report: need n <= d");
  const double n = static_cast<double>(X.rows());
  const double d = static_cast<double>(X.cols());
  const MatrixXd G = gram_rows(X);
  const VectorXd ev = sym_eigenvalues(G);
  const double smin = std::sqrt(std::max(0.0, ev(0)));
  if (!(smin > 1e-8 * std::sqrt(d))) {
    std::ostringstream msg;
    msg << "min_norm_interpolant_report: X X^T is numerically singular (smallest singular value "
        << smin << ")";
    throw RankError(msg.str(), smin);
  }
  const MatrixXd A_ols = G.llt().solve(X).transpose();
  const EstimatorMatrix ridge = build_estimator(X, sigma_sqrt, sigma2, 0.0);

  MinNormReport r;
  r.pred_ols = pred_error_direct(A_ols, X, sigma_sqrt, sigma2);
  r.gap_vs_ridge = r.pred_ols - pred_error_direct(ridge.A, X, sigma_sqrt, sigma2);
  r.train_ols = train_error_direct(A_ols, X, sigma2);
  if ((sigma_sqrt.array() == 1.0).all()) {
    double tr_inv = 0.0;
    double tr_shrink = 0.0;
    for (Index i = 0; i < ev.size(); ++i) {
      tr_inv += 1.0 / ev(i);
      tr_shrink += ev(i) / (ev(i) + d * sigma2);
    }
    r.pred_ols_formula = (d - n) / d + sigma2 * tr_inv;
    r.gap_spectral = -n / d + sigma2 * tr_inv + tr_shrink / d;
  }
  return r;
}

MonteCarloEstimate monte_carlo_response_check(const Eigen::Ref<const MatrixXd>& X,
                                              const Eigen::Ref<const VectorXd>& sigma_sqrt,
                                              double sigma2, const Eigen::Ref<const MatrixXd>& A,
                                              int samples, std::uint64_t seed) {
  require_shapes(X, sigma_sqrt, "monte_carlo_response_check");
  if (samples < 1) throw ContractError("monte_carlo_response_check: samples must be >= 1");
  if (A.rows() != X.cols() || A.cols() != X.rows()) {
    throw ShapeError("monte_carlo_response_check: A must be d x n");
  }
  if (!(sigma2 >= 0.0)) throw DomainError("monte_carlo_response_check: sigma2 must be >= 0");
  const Index n = X.rows();
  const Index d = X.cols();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double theta_scale = 1.0 / std::sqrt(static_cast<double>(d));
  const double noise_scale = std::sqrt(sigma2);

  std::vector<double> pred(static_cast<std::size_t>(samples));
  std::vector<double> train(static_cast<std::size_t>(samples));
  VectorXd theta(d);
  VectorXd w(n);
  for (int k = 0; k < samples; ++k) {
    for (Index j = 0; j < d; ++j) theta(j) = theta_scale * normal(rng);
    for (Index i = 0; i < n; ++i) w(i) = noise_scale * normal(rng);
    const VectorXd y = X * theta + w;
    const VectorXd est = A * y;
    pred[static_cast<std::size_t>(k)] = sigma_sqrt.cwiseProduct(est - theta).squaredNorm();
    train[static_cast<std::size_t>(k)] = (X * est - y).squaredNorm() / static_cast<double>(n);
  }
  MonteCarloEstimate out;
  out.samples = samples;
  const MeanSe p = mean_se(pred);
  const MeanSe t = mean_se(train);
  out.mc_pred = p.mean;
  out.mc_train = t.mean;
  out.pred_std = p.se * std::sqrt(static_cast<double>(samples));
  out.train_std = t.se * std::sqrt(static_cast<double>(samples));
  out.max_train = *std::max_element(train.begin(), train.end());
  return out;
}

GrowthControlReport growth_control_bounds_check(const Eigen::Ref<const MatrixXd>& Z,
                                                const PopulationSpectrum& population,
                                                double sigma2, double rho) {
  if (Z.rows() > Z.cols()) throw ShapeError("growth_control_bounds_check: need n <= d");
  if (!(sigma2 > 0.0)) throw DomainError("growth_control_bounds_check: sigma2 must be positive");
  const double n = static_cast<double>(Z.rows());
  const double d = static_cast<double>(Z.cols());
  const VectorXd ss = realize_sigma_sqrt(population, static_cast<int>(Z.cols()));
  if (ss.maxCoeff() != 1.0) {
    throw ContractError("growth_control_bounds_check: population must have largest value 1");
  }
  const VectorXd mu = sym_eigenvalues(gram_rows(Z) / d);
  const double mu_max = mu(mu.size() - 1);
  if (!(rho * mu_max < 1.0)) {
    std::ostringstream msg;
    msg << "growth_control_bounds_check: need rho lambda_max(Z Z^T)/d < 1, got " << rho * mu_max;
    throw RegimeError(msg.str());
  }
  const double kappa = population.kappa();
  const double s4 = sigma2 * sigma2;

  const MatrixXd X = Z * ss.asDiagonal();
  const GrowthTrace at_rho = error_growth_trace(X, ss, sigma2, rho);
  const GrowthTrace at_zero = error_growth_trace(X, ss, sigma2, 0.0);

  GrowthControlReport r;
  r.pred_lhs = at_rho.delta_pred;
  r.train_lhs = at_rho.train - at_zero.train;
  for (Index i = 0; i < mu.size(); ++i) {
    const double m = std::max(0.0, mu(i));
    const double u = 1.0 - rho * m;
    r.pred_rhs += m / (u * u * (m + sigma2));
    r.train_rhs += (1.0 / (u * u) - 1.0) / (m + kappa * sigma2);
  }
  r.pred_rhs *= rho * rho * s4 / d;
  r.train_rhs *= kappa * s4 / n;
  return r;
}

ErrorReport error_report(const Eigen::Ref<const MatrixXd>& X,
                         const Eigen::Ref<const VectorXd>& sigma_sqrt, double sigma2, double rho,
                         int mc_samples, std::uint64_t mc_seed) {
  const EstimatorMatrix est = build_estimator(X, sigma_sqrt, sigma2, rho);
  const EstimatorMatrix ridge = build_estimator(X, sigma_sqrt, sigma2, 0.0);
  const GrowthTrace tr = error_growth_trace(X, sigma_sqrt, sigma2, rho);
  ErrorReport r;
  r.pred_direct = pred_error_direct(est.A, X, sigma_sqrt, sigma2);
  r.train_direct = train_error_direct(est.A, X, sigma2);
  r.pred_growth_direct = pred_growth_expanded(ridge.A, est.shift, X, sigma_sqrt, sigma2);
  r.pred_growth_trace = tr.delta_pred;
  r.train_trace = tr.train;
  r.duality_residual = lagrangian_gradient_residual(est.A, X, sigma_sqrt, sigma2, rho);
  if (mc_samples > 0) {
    const MonteCarloEstimate mc =
        monte_carlo_response_check(X, sigma_sqrt, sigma2, est.A, mc_samples, mc_seed);
    r.monte_carlo_pred = mc.mc_pred;
    r.monte_carlo_train = mc.mc_train;
  }
  return r;
}

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  if (xs.empty()) return out;
  const double count = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / count;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (count - 1.0)) / std::sqrt(count);
  }
  return out;
}

}  // namespace memcost
