#include "memcost/deformed.hpp"

#include "memcost/errors.hpp"
#include "memcost/numerics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace memcost {

PopulationSpectrum::PopulationSpectrum(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) {
    throw ContractError("population spectrum: no atoms");
  }
  double vmax = 0.0;
  double vmin = std::numeric_limits<double>::infinity();
  double wsum = 0.0;
  for (const Atom& a : atoms_) {
    if (!std::isfinite(a.value) || !(a.value > 0.0)) {
      throw ContractError("population spectrum: atom values must be positive and finite");
    }
    if (!std::isfinite(a.weight) || !(a.weight > 0.0)) {
      throw ContractError("population spectrum: atom weights must be positive and finite");
    }
    vmax = std::max(vmax, a.value);
    vmin = std::min(vmin, a.value);
    wsum += a.weight;
  }
  if (vmax != 1.0) {
    std::ostringstream msg;
    msg << "population values rescaled by 1/" << vmax << " so the largest equals 1";
    warnings_.push_back(msg.str());
    for (Atom& a : atoms_) a.value /= vmax;
    vmin /= vmax;
  }
  if (std::fabs(wsum - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "population weights summed to " << wsum << " and were normalized";
    warnings_.push_back(msg.str());
  }
  for (Atom& a : atoms_) a.weight /= wsum;
  kappa_ = 1.0 / vmin;
}

PopulationSpectrum PopulationSpectrum::identity() {
  return PopulationSpectrum({{1.0, 1.0}});
}

namespace {

bool parse_double(const std::string& token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

}  // namespace

PopulationSpectrum PopulationSpectrum::parse(std::istream& in) {
  std::vector<Atom> atoms;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string t; fields >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) {
      throw ParseError("expected `value weight`, found " + std::to_string(tokens.size()) +
                           " field(s)",
                       lineno);
    }
    Atom a{};
    if (!parse_double(tokens[0], a.value)) {
      throw ParseError("cannot read value '" + tokens[0] + "'", lineno);
    }
    if (!parse_double(tokens[1], a.weight)) {
      throw ParseError("cannot read weight '" + tokens[1] + "'", lineno);
    }
    if (!std::isfinite(a.value) || !(a.value > 0.0)) {
      throw ParseError("value must be positive and finite", lineno);
    }
    if (!std::isfinite(a.weight) || !(a.weight > 0.0)) {
      throw ParseError("weight must be positive and finite", lineno);
    }
    atoms.push_back(a);
  }
  if (atoms.empty()) {
    throw ParseError("population spectrum has no atoms", 0);
  }
  return PopulationSpectrum(std::move(atoms));
}

PopulationSpectrum PopulationSpectrum::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open population file '" + path + "'", 0);
  }
  return parse(in);
}

bool PopulationSpectrum::is_identity() const noexcept {
  return std::all_of(atoms_.begin(), atoms_.end(), [](const Atom& a) { return a.value == 1.0; });
}

double PopulationSpectrum::mean() const noexcept {
  double m = 0.0;
  for (const Atom& a : atoms_) m += a.weight * a.value;
  return m;
}

DeformedLaw::DeformedLaw(double gamma, PopulationSpectrum population)
    : gamma_(gamma), population_(std::move(population)) {
  if (!std::isfinite(gamma) || !(gamma > 1.0)) {
    std::ostringstream msg;
    msg << "aspect ratio gamma = d/n must exceed 1 (got " << gamma << ")";
    throw RegimeError(msg.str());
  }
}

namespace {

void require_sigma2(double sigma2) {
  if (!std::isfinite(sigma2) || !(sigma2 > 0.0)) {
    std::ostringstream msg;
    msg << "noise variance sigma2 must be positive (got " << sigma2 << ")";
    throw DomainError(msg.str());
  }
}

}  // namespace

double silverstein_residual(const DeformedLaw& law, double sigma2, double m) {
  double integral = 0.0;
  for (const auto& a : law.population().atoms()) {
    integral += a.weight * a.value / (1.0 + a.value * m / law.gamma());
  }
  return m * (sigma2 + integral) - 1.0;
}

double silverstein_solve(const DeformedLaw& law, double sigma2) {
  require_sigma2(sigma2);
  // g(0) = -1 and g(1/sigma2) > 0; g is increasing on the bracket.
  const ToleranceSpec tol{1e-15, 1e-16, 400};
  return bisect([&](double m) { return silverstein_residual(law, sigma2, m); },
                Interval(0.0, 1.0 / sigma2), tol);
}

double deformed_threshold(const DeformedLaw& law, double sigma2) {
  return sigma2 * sigma2 * silverstein_solve(law, sigma2);
}

}  // namespace memcost
