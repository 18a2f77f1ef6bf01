#include "output_table.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace memcost::cli {

OutputTable::OutputTable(std::vector<std::string> header) : header_(std::move(header)) {}

void OutputTable::add_row(std::vector<double> row) {
  if (row.size() != header_.size()) {
    throw std::invalid_argument("OutputTable: row has " + std::to_string(row.size()) +
                                " cells, header has " + std::to_string(header_.size()));
  }
  rows_.push_back(std::move(row));
}

void OutputTable::add_config(std::string key, std::string value) {
  config_.emplace_back(std::move(key), std::move(value));
}

void OutputTable::add_metadata(std::string key, std::string value) {
  metadata_.emplace_back(std::move(key), std::move(value));
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string to_csv(const OutputTable& t) {
  std::ostringstream out;
  for (const auto& [k, v] : t.config()) out << "# config." << k << ": " << v << '\n';
  for (const auto& [k, v] : t.metadata()) out << "# " << k << ": " << v << '\n';
  for (std::size_t j = 0; j < t.header().size(); ++j) {
    out << (j ? "," : "") << t.header()[j];
  }
  out << '\n';
  for (const auto& row : t.rows()) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      out << (j ? "," : "") << format_number(row[j]);
    }
    out << '\n';
  }
  return out.str();
}

namespace {

std::string quote(const std::string& s) {
  return nlohmann::json(s).dump();
}

void write_object(std::ostringstream& out, const KeyValues& kv) {
  out << '{';
  for (std::size_t i = 0; i < kv.size(); ++i) {
    out << (i ? ", " : "") << quote(kv[i].first) << ": " << quote(kv[i].second);
  }
  out << '}';
}

}  // namespace

std::string to_json(const OutputTable& t) {
  std::ostringstream out;
  out << "{\n  \"config\": ";
  write_object(out, t.config());
  out << ",\n  \"metadata\": ";
  write_object(out, t.metadata());
  out << ",\n  \"columns\": [";
  for (std::size_t j = 0; j < t.header().size(); ++j) {
    out << (j ? ", " : "") << quote(t.header()[j]);
  }
  out << "],\n  \"rows\": [";
  for (std::size_t i = 0; i < t.rows().size(); ++i) {
    out << (i ? ",\n    [" : "\n    [");
    const auto& row = t.rows()[i];
    for (std::size_t j = 0; j < row.size(); ++j) {
      out << (j ? ", " : "") << (std::isfinite(row[j]) ? format_number(row[j]) : "null");
    }
    out << ']';
  }
  out << (t.rows().empty() ? "]\n}\n" : "\n  ]\n}\n");
  return out.str();
}

std::string render(const OutputTable& t, Format f) {
  return f == Format::csv ? to_csv(t) : to_json(t);
}

}  // namespace memcost::cli
