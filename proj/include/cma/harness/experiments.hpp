#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cma/harness/config.hpp"
#include "cma/harness/emit.hpp"

namespace cma::harness {

// Runs body(i) for i in [0, n) on `threads` workers. Each index writes only its
// own output slot, so results do not depend on the thread count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

// Mean and standard error of a sample, summed in index order.
struct Summary {
  double mean = 0.0;
  double std_error = 0.0;
  long count = 0;
};
Summary summarize(const std::vector<double>& values);

// Percentage rate decrease 100 (1 - log2(1 + snr) / log2(1 + snr0)).
double rate_decrease_pct(double snr, double snr0);

std::vector<ResultRow> run(const ExperimentConfig& cfg);

std::vector<ResultRow> run_table1(const ExperimentConfig& cfg);
std::vector<ResultRow> run_table2(const ExperimentConfig& cfg);
std::vector<ResultRow> run_table3(const ExperimentConfig& cfg);
std::vector<ResultRow> run_table4(const ExperimentConfig& cfg);
std::vector<ResultRow> run_table5(const ExperimentConfig& cfg);
std::vector<ResultRow> run_fig2(const ExperimentConfig& cfg);
std::vector<ResultRow> run_fig3(const ExperimentConfig& cfg);
// UMP attack over the (rho, xi) grid with per-point detection statistics.
std::vector<ResultRow> run_custom(const ExperimentConfig& cfg);

// Single-shot helpers behind the CLI subcommands.
std::vector<ResultRow> describe_channel(const ExperimentConfig& cfg);
std::vector<ResultRow> attack_once(const ExperimentConfig& cfg, const std::string& kind);
std::vector<ResultRow> detect_once(const ExperimentConfig& cfg, const std::string& detector);
std::vector<ResultRow> moments_check(const ExperimentConfig& cfg);

// Looks up a metric at a parameter point; nullopt when absent.
std::optional<ResultRow> find_row(const std::vector<ResultRow>& rows, const std::string& metric,
                                  const std::vector<std::pair<std::string, double>>& params = {});

}  // namespace cma::harness
