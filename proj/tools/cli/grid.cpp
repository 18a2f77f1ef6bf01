#include "grid.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace memcost::cli {

namespace {

double parse_field(const std::string& s, const char* name) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("grid: cannot read ") + name + " '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
  const auto a = spec.find(':');
  const auto b = a == std::string::npos ? a : spec.find(':', a + 1);
  if (a == std::string::npos || b == std::string::npos || spec.find(':', b + 1) != std::string::npos) {
    throw std::invalid_argument("grid: expected start:step:stop, got '" + spec + "'");
  }
  const double start = parse_field(spec.substr(0, a), "start");
  const double step = parse_field(spec.substr(a + 1, b - a - 1), "step");
  const double stop = parse_field(spec.substr(b + 1), "stop");
  if (!(step > 0.0)) throw std::invalid_argument("grid: step must be positive");
  std::vector<double> out;
  if (start > stop) return out;
  const double count = std::floor((stop - start) / step + 0.5) + 1.0;
  if (count > 1e6) throw std::invalid_argument("grid: more than 10^6 points");
  const auto k = static_cast<long>(count);
  out.reserve(static_cast<std::size_t>(k));
  for (long i = 0; i < k; ++i) {
    double v = start + static_cast<double>(i) * step;
    if (std::fabs(v - stop) <= 1e-9 * step) v = stop;
    out.push_back(v);
  }
  return out;
}

}  // namespace memcost::cli
