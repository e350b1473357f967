#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cma/harness/config.hpp"
#include "cma/harness/emit.hpp"
#include "cma/harness/experiments.hpp"
#include "cma/types.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kNumerical = 2, kInfeasible = 3 };

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> threads;
  std::optional<int> n;
  std::optional<int> b;
  std::string out;
  std::string format;
  bool full = false;
};

cma::harness::ExperimentConfig build_config(const CommonOptions& o, const std::string& experiment) {
  using namespace cma::harness;
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config, experiment);
  if (!experiment.empty()) cfg.experiment = experiment;
  cfg.full = cfg.full || o.full;
  if (cfg.full && cfg.experiment != "table3" && cfg.experiment != "table5") cfg.trials = 10000;
  if (o.trials) cfg.trials = *o.trials;
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (o.n) cfg.N = *o.n;
  if (o.b) cfg.b = *o.b;
  if (!o.out.empty()) cfg.out = o.out;
  if (!o.format.empty()) cfg.format = parse_format(o.format);
  finalize(cfg);
  return cfg;
}

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config, "JSON configuration file");
  app->add_option("--seed", o.seed, "Master seed");
  app->add_option("--trials", o.trials, "Monte Carlo trials (channel realizations)");
  app->add_option("--threads", o.threads, "Worker threads");
  app->add_option("--N", o.n, "Number of RIS elements");
  app->add_option("--b", o.b, "Phase resolution in bits (0 = continuous)");
  app->add_option("--out", o.out, "Output path (stdout when omitted)");
  app->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app->add_flag("--full", o.full, "Use large-sample trial counts");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RIS controller-manipulation attack and detection experiments"};
  app.require_subcommand(1);
  CommonOptions opts;

  std::string experiment = "table1";
  auto* run = app.add_subcommand("run", "Run a table or figure experiment");
  run->add_option("experiment", experiment, "Experiment id")
      ->check(CLI::IsMember(cma::harness::experiment_ids()));
  add_common(run, opts);

  auto* channel = app.add_subcommand("channel", "Sample one channel and print its composite gains");
  add_common(channel, opts);

  std::string kind = "ump";
  auto* attack = app.add_subcommand("attack", "Design one attack on a sampled channel");
  attack->add_option("--kind", kind, "Attack family")->check(CLI::IsMember({"ump", "cusum", "csi", "miso"}));
  add_common(attack, opts);

  std::string detector = "energy";
  auto* detect = app.add_subcommand("detect", "Run one detector on simulated samples");
  detect->add_option("--detector", detector, "Detector")->check(CLI::IsMember({"energy", "cusum", "double"}));
  add_common(detect, opts);

  auto* moments = app.add_subcommand("moments", "Compare closed-form SNR moments with Monte Carlo");
  add_common(moments, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  using namespace cma::harness;
  try {
    std::vector<ResultRow> rows;
    ExperimentConfig cfg;
    if (run->parsed()) {
      cfg = build_config(opts, experiment);
      rows = cma::harness::run(cfg);
    } else if (channel->parsed()) {
      cfg = build_config(opts, "");
      rows = describe_channel(cfg);
    } else if (attack->parsed()) {
      cfg = build_config(opts, "");
      rows = attack_once(cfg, kind);
    } else if (detect->parsed()) {
      cfg = build_config(opts, "");
      rows = detect_once(cfg, detector);
    } else {
      if (opts.full && !opts.trials) opts.trials = 100000;
      cfg = build_config(opts, "");
      rows = moments_check(cfg);
    }
    emit(rows, cfg.format, cfg.out);
    return kOk;
  } catch (const cma::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kConfig;
  } catch (const cma::InfeasibleTarget& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const cma::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
}
