#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "dphd/bench.hpp"

using namespace dphd;

namespace {

ExperimentConfig quick_config() {
  ExperimentConfig config;
  config.dataset = "synthetic:n=60,d=6,s=2,sd=0.1,task=linear";
  config.algorithms = {Algo::fw, Algo::dpight};
  config.epsilons = {1.0, 100.0};
  config.trials = 3;
  config.master_seed = 7;
  // tiny grids keep the suite fast
  config.hyper_grid["fw"]["iter"] = {1, 5};
  config.hyper_grid["dpight"]["iter"] = {5};
  config.hyper_grid["dpight"]["lr"] = {0.1};
  config.hyper_grid["dpight"]["sparsity"] = {2};
  return config;
}

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("default grids match the reference sweep sizes") {
  CHECK(expand_grid(Algo::fw, default_grid(Algo::fw)).size() == 7);
  CHECK(expand_grid(Algo::ts, default_grid(Algo::ts)).size() == 4 * 6);
  CHECK(expand_grid(Algo::admm, default_grid(Algo::admm)).size() == 7 * 4 * 6);
  CHECK(expand_grid(Algo::htso, default_grid(Algo::htso)).size() == 4 * 3 * 7 * 3);
  CHECK(expand_grid(Algo::dpsgd, default_grid(Algo::dpsgd)).size() == 3 * 3 * 7);
  CHECK(expand_grid(Algo::projerm, default_grid(Algo::projerm)).size() == 4);
  CHECK(expand_grid(Algo::polyfw, default_grid(Algo::polyfw)).size() == 1);
  CHECK(expand_grid(Algo::nm, default_grid(Algo::nm)).size() == 1);
}

TEST_CASE("grid override parsing") {
  const auto overrides = parse_grid_overrides(
      "# comment\n"
      "fw.iter = 1, 2, 5\n"
      "dpight.lr=0.1\n");
  CHECK(overrides.at("fw").at("iter") == std::vector<double>{1, 2, 5});
  CHECK(overrides.at("dpight").at("lr") == std::vector<double>{0.1});
  CHECK_THROWS(parse_grid_overrides("nosuchalgo.iter = 1\n"));
  CHECK_THROWS(parse_grid_overrides("fw.iter = banana\n"));
  CHECK_THROWS(parse_grid_overrides("fw.iter =\n"));

  ExperimentConfig config = quick_config();
  const HyperGrid g = effective_grid(config, Algo::fw);
  CHECK(g.at("iter") == std::vector<double>{1, 5});
}

TEST_CASE("aggregate: mean and 2 SEM") {
  std::vector<TrialResult> cell(3);
  for (int i = 0; i < 3; ++i) {
    cell[i].ok = true;
    cell[i].test_metric = i + 1.0;  // 1, 2, 3
  }
  const CellStats s = aggregate(cell);
  CHECK(s.available);
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.two_sem == doctest::Approx(1.1547).epsilon(1e-4));  // 2 * (1 / sqrt 3)

  for (auto& r : cell) r.test_metric = 5.0;
  CHECK(aggregate(cell).two_sem == doctest::Approx(0.0));

  std::vector<TrialResult> single(1);
  single[0].ok = true;
  single[0].test_metric = 1.0;
  CHECK_FALSE(aggregate(single).available);  // < 2 successes -> unavailable

  cell.push_back(TrialResult{});  // one failed trial
  const CellStats flagged = aggregate(cell);
  CHECK(flagged.ok == 3);
  CHECK(flagged.failed == 1);
}

TEST_CASE("delta follows the split arithmetic") {
  // n = 252 -> train 151 -> delta = 1/151^2
  CHECK(split(252, 0).train.size() == 151);
  CHECK(1.0 / (151.0 * 151.0) == doctest::Approx(4.3858e-5).epsilon(1e-4));
}

TEST_CASE("run_trial: determinism and per-index seeding") {
  const ExperimentConfig config = quick_config();
  const Dataset data = load_dataset(config.dataset, config.data_dir);

  const TrialResult a = run_trial(config, data, Algo::fw, 1.0, 1);
  const TrialResult b = run_trial(config, data, Algo::fw, 1.0, 1);
  CHECK(a.ok);
  CHECK(a.test_metric == b.test_metric);
  CHECK(a.validation_metric == b.validation_metric);
  CHECK(a.chosen_hyperparameters == b.chosen_hyperparameters);
  CHECK(std::isfinite(a.test_metric));

  // trial 2 is unaffected by whether trial 1 ran (per-index derivation)
  const TrialResult c = run_trial(config, data, Algo::fw, 1.0, 2);
  CHECK(c.test_metric != a.test_metric);

  // nonprivate proxy run completes with a finite metric
  const TrialResult proxy = run_trial(config, data, Algo::fw, 100.0, 0);
  CHECK(proxy.ok);
  CHECK(std::isfinite(proxy.test_metric));
}

TEST_CASE("run_trial timeout is reported, not dropped") {
  ExperimentConfig config = quick_config();
  config.time_limit = 0.0;
  const Dataset data = load_dataset(config.dataset, config.data_dir);
  const TrialResult r = run_trial(config, data, Algo::fw, 1.0, 0);
  CHECK_FALSE(r.ok);
  CHECK(r.fail_reason == "timeout");
}

TEST_CASE("csv report: shape, reproducibility, worker independence") {
  ExperimentConfig config = quick_config();
  const Dataset data = load_dataset(config.dataset, config.data_dir);

  const std::vector<TrialResult> results = run_experiment(config, data);
  CHECK(results.size() == 2 * 2 * 3);
  int ok = 0, failed = 0;
  for (const auto& r : results) (r.ok ? ok : failed)++;
  CHECK(ok + failed == static_cast<int>(results.size()));  // no silent drops

  const std::string csv = emit_csv(config, results);
  const auto lines = csv_lines(csv);
  CHECK(lines[0] == "dataset,algorithm,epsilon,mean,two_sem,trials_ok,trials_failed");
  CHECK(lines.size() == 1 + 2 * 2);  // header + algorithms x epsilons

  // identical config + seed => byte-identical csv
  CHECK(emit_csv(config, run_experiment(config, data)) == csv);

  // worker count must not change the bytes
  config.workers = 3;
  CHECK(emit_csv(config, run_experiment(config, data)) == csv);
}

TEST_CASE("markdown bolding matches an independent argmin recomputation") {
  ExperimentConfig config = quick_config();
  const Dataset data = load_dataset(config.dataset, config.data_dir);
  const std::vector<TrialResult> results = run_experiment(config, data);
  const std::string md = emit_markdown(config, data, results);

  // recompute the per-epsilon winner from the csv numbers
  const auto lines = csv_lines(emit_csv(config, results));
  for (std::size_t ei = 0; ei < config.epsilons.size(); ++ei) {
    double best = 1e300;
    std::string best_algo;
    for (std::size_t ai = 0; ai < config.algorithms.size(); ++ai) {
      const std::string& line = lines[1 + ai * config.epsilons.size() + ei];
      std::istringstream in(line);
      std::string dataset_field, algo_field, eps_field, mean_field;
      std::getline(in, dataset_field, ',');
      if (dataset_field.size() >= 1 && dataset_field[0] == '"') {
        // quoted dataset id: consume through the closing quote
        while (!dataset_field.empty() && dataset_field.back() != '"') {
          std::string more;
          std::getline(in, more, ',');
          dataset_field += "," + more;
        }
      }
      std::getline(in, algo_field, ',');
      std::getline(in, eps_field, ',');
      std::getline(in, mean_field, ',');
      const double mean = std::stod(mean_field);
      if (mean < best) {
        best = mean;
        best_algo = algo_field;
      }
    }
    // the winning row must carry the bold marker in this column
    std::istringstream md_in(md);
    std::string md_line;
    bool found_bold = false;
    while (std::getline(md_in, md_line)) {
      if (md_line.rfind("| " + best_algo + " |", 0) != 0) continue;
      std::vector<std::string> cells;
      std::stringstream row(md_line);
      std::string cell;
      while (std::getline(row, cell, '|')) cells.push_back(cell);
      // cells[0] empty, cells[1] algo, columns follow
      found_bold = cells[2 + ei].find("**") != std::string::npos;
    }
    CHECK(found_bold);
  }
}
