#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace cma::harness {

enum class OutputFormat { Csv, Json };

// All power quantities are linear (watts) once parsed; the dBm inputs are
// kept only so the configuration can be echoed back.
struct ExperimentConfig {
  std::string experiment = "table1";

  int N = 0;  // 0 selects the experiment default: 8 for the LP tables, 64 otherwise
  int M = 1;
  int K = 50;
  int b = 2;
  int T = 100;

  double p_dbm = 30.0;
  double sigma_w2_dbm = -10.0;
  double p_tx = 1.0;
  double sigma_w2 = 1e-4;
  double eps_h = 1.0;
  double eps_g = 1.0;

  // Fixed-sample energy test.
  std::vector<double> rho{0.05, 0.10, 0.15};
  std::vector<double> xi{0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

  // GLR-CUSUM.
  std::vector<double> a_glr{0.01, 0.015, 0.02};
  std::vector<double> tau_arld{50.0, 100.0, 150.0, 200.0, 250.0, 300.0};
  int cusum_window = 0;  // 0 selects K
  double arld_cap = 20.0;

  // Moment detector / LP attack.
  int lp_states = 100;
  std::vector<double> zeta{0.10, 0.20, 0.30, 0.40};
  std::vector<std::pair<double, double>> kappa{{0.56, 0.52}, {0.61, 0.58}};
  bool match_detection = true;

  // Imperfect CSI.
  std::vector<double> eps_ks{0.02, 0.04};
  std::vector<double> nu_ks{0.10, 0.15, 0.20, 0.25, 0.30, 0.35};
  double iota = 0.230;
  double sigma_e2 = 0.01;

  int randomization = 1000;
  int trials = 2000;
  std::uint64_t seed = 1;
  int threads = 1;
  bool full = false;

  std::string out;
  OutputFormat format = OutputFormat::Csv;

  double kappa_bar() const { return p_tx / sigma_w2; }
};

const std::vector<std::string>& experiment_ids();

// Throws ConfigError on unknown keys, bad types or invalid values.
// A nonempty `experiment` overrides the file's id before defaults are resolved.
ExperimentConfig parse_config(const nlohmann::json& j, const std::string& experiment = "");
ExperimentConfig load_config(const std::string& path, const std::string& experiment = "");
nlohmann::json to_json(const ExperimentConfig& cfg);

// Re-derives p_tx and sigma_w2 from the dBm fields and checks every invariant.
void finalize(ExperimentConfig& cfg);

OutputFormat parse_format(const std::string& s);

}  // namespace cma::harness
