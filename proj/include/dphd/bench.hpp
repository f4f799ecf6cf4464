#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dphd/data_io.hpp"
#include "dphd/model.hpp"
#include "dphd/optimizers.hpp"

namespace dphd {

// Per-algorithm hyperparameter value lists, keyed by parameter name
// (iter, sparsity, reg, gamma, lr, s, latent, batch, lambda).
using HyperGrid = std::map<std::string, std::vector<double>>;

enum class ReportFormat { csv, markdown };

struct ExperimentConfig {
  std::string dataset;
  std::string data_dir = "data";
  std::string task_hint;
  std::vector<Algo> algorithms;
  // epsilon = 100 is treated as the nonprivate proxy and run with delta 0.999
  std::vector<double> epsilons = {0.1, 0.5, 1.0, 2.0, 5.0, 100.0};
  int trials = 20;
  std::uint64_t master_seed = 0;
  std::map<std::string, HyperGrid> hyper_grid;  // overrides, keyed by algo name
  double time_limit = 3600.0;                   // seconds per trial
  std::string out_path;
  ReportFormat format = ReportFormat::csv;
  int workers = 1;
};

struct TrialResult {
  std::string dataset;
  Algo algorithm = Algo::fw;
  double epsilon = 0.0;
  int trial = 0;
  std::string chosen_hyperparameters;
  double test_metric = 0.0;
  double validation_metric = 0.0;
  double wall_time = 0.0;
  bool ok = false;
  std::string fail_reason;
};

struct CellStats {
  double mean = 0.0;
  double two_sem = 0.0;
  int ok = 0;
  int failed = 0;
  bool available = false;
};

// Table of default hyperparameter values swept for each algorithm.
HyperGrid default_grid(Algo algo);

// Cartesian expansion of a grid into concrete optimizer configurations.
std::vector<OptimizerSpec> expand_grid(Algo algo, const HyperGrid& grid);

// Parses "algo.param = v1,v2,..." override lines (comments start with '#').
std::map<std::string, HyperGrid> parse_grid_overrides(const std::string& text);

// Effective grid for one algorithm after applying config overrides.
HyperGrid effective_grid(const ExperimentConfig& config, Algo algo);

// True when larger metric values are better (classification accuracy).
bool higher_is_better(Task task);

// Runs one (algorithm, epsilon, trial) cell entry: a seeded split, a grid
// search scored on validation, and the best configuration scored on test.
TrialResult run_trial(const ExperimentConfig& config, const Dataset& data, Algo algo,
                      double epsilon, int trial_index);

// Mean and 2 * standard error of the mean over successful trials; cells with
// fewer than two successes are marked unavailable.
CellStats aggregate(const std::vector<TrialResult>& cell);

// All (algorithm, epsilon, trial) combinations, optionally across worker
// threads; output order is fixed regardless of scheduling.
std::vector<TrialResult> run_experiment(const ExperimentConfig& config, const Dataset& data);

std::string emit_csv(const ExperimentConfig& config, const std::vector<TrialResult>& results);
std::string emit_markdown(const ExperimentConfig& config, const Dataset& data,
                          const std::vector<TrialResult>& results);

// Emits in the configured format and writes to config.out_path ("" = stdout
// handled by the caller; this function only returns the text then).
std::string emit_report(const ExperimentConfig& config, const Dataset& data,
                        const std::vector<TrialResult>& results);

}  // namespace dphd
