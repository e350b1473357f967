#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cma/harness/config.hpp"
#include "json.hpp"

namespace cma::harness {

struct ResultRow {
  std::string experiment;
  // Sweep-point parameters in a fixed order, serialized as "k1=v1;k2=v2".
  std::vector<std::pair<std::string, double>> params;
  std::string metric;
  double value = 0.0;
  double std_error = 0.0;
  long trials = 0;

  std::string param_string() const;
  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

// Shortest round-trippable decimal form ("nan", "inf", "-inf" for non-finite values).
std::string format_number(double v);

const std::vector<std::string>& csv_columns();
std::string to_csv(const std::vector<ResultRow>& rows);
nlohmann::json to_json(const std::vector<ResultRow>& rows);
std::vector<ResultRow> rows_from_json(const nlohmann::json& j);

// Writes rows to `path` (stdout when empty). Empty rows are rejected before any
// file is touched; the file is written through a temporary and renamed.
void emit(const std::vector<ResultRow>& rows, OutputFormat format, const std::string& path);

}  // namespace cma::harness
