#pragma once

#include <string>
#include <utility>
#include <vector>

namespace memcost::cli {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Rectangular numeric table plus the configuration and metadata needed to
/// reproduce it.
class OutputTable {
public:
  explicit OutputTable(std::vector<std::string> header = {});

  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }
  const KeyValues& config() const noexcept { return config_; }
  const KeyValues& metadata() const noexcept { return metadata_; }

  /// Throws std::invalid_argument if the row width differs from the header.
  void add_row(std::vector<double> row);
  void add_config(std::string key, std::string value);
  void add_metadata(std::string key, std::string value);

private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
  KeyValues config_;
  KeyValues metadata_;
};

/// 17 significant digits; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double x);

/// `# key: value` lines (config first, then metadata), a header row, data rows.
std::string to_csv(const OutputTable& t);

/// {"config": {...}, "metadata": {...}, "columns": [...], "rows": [[...], ...]}.
/// Non-finite numbers become null.
std::string to_json(const OutputTable& t);

enum class Format { csv, json };

std::string render(const OutputTable& t, Format f);

}  // namespace memcost::cli
