#include "cma/harness/emit.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cma/types.hpp"

namespace cma::harness {

using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_number(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ConfigError("bad number '" + s + "'");
  return v;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Non-finite doubles have no JSON literal, so they travel as strings.
json number_json(double v) { return std::isfinite(v) ? json(v) : json(format_number(v)); }

double number_from_json(const json& j) { return j.is_string() ? parse_number(j.get<std::string>()) : j.get<double>(); }

}  // namespace

std::string ResultRow::param_string() const {
  std::string s;
  for (const auto& [k, v] : params) {
    if (!s.empty()) s += ';';
    s += k + '=' + format_number(v);
  }
  return s;
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{"experiment", "params", "metric", "value", "std_error", "trials"};
  return cols;
}

std::string to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  for (std::size_t i = 0; i < csv_columns().size(); ++i) os << (i ? "," : "") << csv_columns()[i];
  os << "\r\n";
  for (const auto& r : rows) {
    os << csv_field(r.experiment) << ',' << csv_field(r.param_string()) << ',' << csv_field(r.metric) << ','
       << format_number(r.value) << ',' << format_number(r.std_error) << ',' << r.trials << "\r\n";
  }
  return os.str();
}

json to_json(const std::vector<ResultRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back(json{{"experiment", r.experiment},
                       {"params", r.param_string()},
                       {"metric", r.metric},
                       {"value", number_json(r.value)},
                       {"std_error", number_json(r.std_error)},
                       {"trials", r.trials}});
  }
  return arr;
}

std::vector<ResultRow> rows_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("result JSON must be an array");
  std::vector<ResultRow> rows;
  for (const auto& rec : j) {
    ResultRow r;
    r.experiment = rec.at("experiment").get<std::string>();
    r.metric = rec.at("metric").get<std::string>();
    r.value = number_from_json(rec.at("value"));
    r.std_error = number_from_json(rec.at("std_error"));
    r.trials = rec.at("trials").get<long>();
    std::istringstream ps(rec.at("params").get<std::string>());
    std::string item;
    while (std::getline(ps, item, ';')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("bad params entry '" + item + "'");
      r.params.emplace_back(item.substr(0, eq), parse_number(item.substr(eq + 1)));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void emit(const std::vector<ResultRow>& rows, OutputFormat format, const std::string& path) {
  if (rows.empty()) throw ConfigError("emit: no result rows to write");
  const std::string text = format == OutputFormat::Csv ? to_csv(rows) : to_json(rows).dump(2) + "\n";
  if (path.empty()) {
    std::cout << text;
    return;
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file '" + path + "'");
    out << text;
    if (!out) throw ConfigError("write failed for '" + path + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ConfigError("cannot write output file '" + path + "'");
  }
}

}  // namespace cma::harness
