#include "cma/harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "cma/types.hpp"

namespace cma::harness {

using nlohmann::json;

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{"table1", "table2", "table3", "table4", "table5", "fig2", "fig3", "custom"};
  return ids;
}

OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  throw ConfigError("unknown output format '" + s + "' (expected csv or json)");
}

namespace {

template <class T>
void read(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

template <class T>
void require_nonempty(const std::vector<T>& v, const char* key) {
  require(!v.empty(), std::string("config key '") + key + "' must be a nonempty list");
}

void check_unit_interval(const std::vector<double>& v, const char* key) {
  require_nonempty(v, key);
  for (double x : v) require(x > 0.0 && x < 1.0, std::string("config key '") + key + "' entries must lie in (0, 1)");
}

void check_positive(const std::vector<double>& v, const char* key) {
  require_nonempty(v, key);
  for (double x : v) require(x > 0.0, std::string("config key '") + key + "' entries must be positive");
}

}  // namespace

void finalize(ExperimentConfig& c) {
  const auto& ids = experiment_ids();
  require(std::find(ids.begin(), ids.end(), c.experiment) != ids.end(), "unknown experiment id '" + c.experiment + "'");
  if (c.N == 0) c.N = c.experiment == "table3" || c.experiment == "table5" ? 8 : 64;
  require(c.N >= 1 && c.M >= 1 && c.K >= 1 && c.T >= 1, "N, M, K and T must be >= 1");
  require(c.b >= 0 && c.b <= 16, "b must lie in [0, 16] (0 selects continuous phases)");
  require(c.trials >= 1, "trials must be >= 1");
  require(c.randomization >= 1, "randomization must be >= 1");
  require(c.threads >= 1, "threads must be >= 1");
  require(c.lp_states >= 1, "lp_states must be >= 1");
  require(c.cusum_window >= 0, "cusum_window must be >= 0");
  require(c.arld_cap > 1.0, "arld_cap must exceed 1");
  require(c.eps_h > 0.0 && c.eps_g > 0.0, "eps_h and eps_g must be positive");
  require(c.iota > 0.0, "iota must be positive");
  require(c.sigma_e2 >= 0.0, "sigma_e2 must be nonnegative");
  check_unit_interval(c.rho, "rho");
  check_unit_interval(c.xi, "xi");
  check_unit_interval(c.a_glr, "a_glr");
  check_positive(c.tau_arld, "tau_arld");
  check_positive(c.zeta, "zeta");
  check_positive(c.eps_ks, "eps_ks");
  check_positive(c.nu_ks, "nu_ks");
  require_nonempty(c.kappa, "kappa");
  for (auto [k1, k2] : c.kappa) require(k1 > 0.0 && k2 > 0.0, "kappa pairs must be positive");
  // The only place dBm becomes linear.
  c.p_tx = dbm_to_watts(c.p_dbm);
  c.sigma_w2 = dbm_to_watts(c.sigma_w2_dbm);
}

ExperimentConfig parse_config(const json& j, const std::string& experiment) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{
      "experiment", "N",        "M",       "K",         "b",         "T",      "P_dBm",   "sigma_w2_dBm",
      "eps_h",      "eps_g",    "rho",     "xi",        "a_glr",     "tau_arld", "cusum_window", "arld_cap",
      "lp_states",  "zeta",     "kappa",   "match_detection", "eps_ks", "nu_ks", "iota",    "sigma_e2",
      "randomization", "trials", "seed",   "threads",   "full",      "out",    "format"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");

  ExperimentConfig c;
  read(j, "experiment", c.experiment);
  read(j, "N", c.N);
  read(j, "M", c.M);
  read(j, "K", c.K);
  read(j, "b", c.b);
  read(j, "T", c.T);
  read(j, "P_dBm", c.p_dbm);
  read(j, "sigma_w2_dBm", c.sigma_w2_dbm);
  read(j, "eps_h", c.eps_h);
  read(j, "eps_g", c.eps_g);
  read(j, "rho", c.rho);
  read(j, "xi", c.xi);
  read(j, "a_glr", c.a_glr);
  read(j, "tau_arld", c.tau_arld);
  read(j, "cusum_window", c.cusum_window);
  read(j, "arld_cap", c.arld_cap);
  read(j, "lp_states", c.lp_states);
  read(j, "zeta", c.zeta);
  read(j, "kappa", c.kappa);
  read(j, "match_detection", c.match_detection);
  read(j, "eps_ks", c.eps_ks);
  read(j, "nu_ks", c.nu_ks);
  read(j, "iota", c.iota);
  read(j, "sigma_e2", c.sigma_e2);
  read(j, "randomization", c.randomization);
  read(j, "trials", c.trials);
  read(j, "seed", c.seed);
  read(j, "threads", c.threads);
  read(j, "full", c.full);
  read(j, "out", c.out);
  if (j.contains("format")) {
    std::string f;
    read(j, "format", f);
    c.format = parse_format(f);
  }
  if (!experiment.empty()) c.experiment = experiment;
  finalize(c);
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::string& experiment) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j, experiment);
}

json to_json(const ExperimentConfig& c) {
  return json{{"experiment", c.experiment},
              {"N", c.N},
              {"M", c.M},
              {"K", c.K},
              {"b", c.b},
              {"T", c.T},
              {"P_dBm", c.p_dbm},
              {"sigma_w2_dBm", c.sigma_w2_dbm},
              {"eps_h", c.eps_h},
              {"eps_g", c.eps_g},
              {"rho", c.rho},
              {"xi", c.xi},
              {"a_glr", c.a_glr},
              {"tau_arld", c.tau_arld},
              {"cusum_window", c.cusum_window},
              {"arld_cap", c.arld_cap},
              {"lp_states", c.lp_states},
              {"zeta", c.zeta},
              {"kappa", c.kappa},
              {"match_detection", c.match_detection},
              {"eps_ks", c.eps_ks},
              {"nu_ks", c.nu_ks},
              {"iota", c.iota},
              {"sigma_e2", c.sigma_e2},
              {"randomization", c.randomization},
              {"trials", c.trials},
              {"seed", c.seed},
              {"threads", c.threads},
              {"full", c.full},
              {"out", c.out},
              {"format", c.format == OutputFormat::Csv ? "csv" : "json"}};
}

}  // namespace cma::harness
