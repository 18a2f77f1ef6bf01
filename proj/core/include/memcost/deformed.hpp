#pragma once

#include <istream>
#include <string>
#include <vector>

namespace memcost {

/// Discrete eigenvalue distribution T of the population covariance.
///
/// On construction values are rescaled so the largest is 1 and weights so
/// they sum to 1; each adjustment appends a message to warnings().
class PopulationSpectrum {
public:
  struct Atom {
    double value;
    double weight;
  };

  explicit PopulationSpectrum(std::vector<Atom> atoms);

  /// Point mass at 1 (Sigma = I).
  static PopulationSpectrum identity();

  /// Reads `value weight` lines; blank lines and `#` comments are skipped.
  /// Throws ParseError carrying the 1-based line number.
  static PopulationSpectrum parse(std::istream& in);
  static PopulationSpectrum from_file(const std::string& path);

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  double kappa() const noexcept { return kappa_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  /// True when every atom sits at 1.
  bool is_identity() const noexcept;

  /// int tau dT(tau).
  double mean() const noexcept;

private:
  std::vector<Atom> atoms_;
  double kappa_ = 1.0;
  std::vector<std::string> warnings_;
};

/// Deformed Marchenko-Pastur law G: limit spectrum of (1/d) Z Sigma Z^T.
class DeformedLaw {
public:
  DeformedLaw(double gamma, PopulationSpectrum population);

  double gamma() const noexcept { return gamma_; }
  const PopulationSpectrum& population() const noexcept { return population_; }

private:
  double gamma_;
  PopulationSpectrum population_;
};

/// g(m) = m (sigma2 + int tau / (1 + tau m / gamma) dT) - 1; zero at m_G(-sigma2).
double silverstein_residual(const DeformedLaw& law, double sigma2, double m);

/// m_G(-sigma2) = int 1/(s + sigma2) dG(s), the unique positive root of the
/// fixed-point equation m = 1 / (sigma2 + int tau / (1 + tau m / gamma) dT).
/// Throws DomainError for sigma2 <= 0.
double silverstein_solve(const DeformedLaw& law, double sigma2);

/// sigma^4 m_G(-sigma2).
double deformed_threshold(const DeformedLaw& law, double sigma2);

}  // namespace memcost
