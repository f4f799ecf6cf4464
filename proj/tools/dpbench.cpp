#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dphd/bench.hpp"

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark harness for differentially private linear and logistic regression"};

  std::string dataset, algo_list = "all", eps_list, grid_file, out_path, format = "csv";
  std::string task_hint, data_dir = "data";
  int trials = 20, workers = 1;
  std::uint64_t seed = 0;
  double time_limit = 3600.0;
  bool strict = false, list_algos = false;

  app.add_option("--dataset", dataset, "Dataset id, libsvm path, or synthetic:... spec");
  app.add_option("--algo", algo_list, "Comma-separated algorithm names or \"all\"");
  app.add_option("--epsilons", eps_list, "Comma-separated epsilon values (default benchmark grid)");
  app.add_option("--trials", trials, "Trials per cell")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--grid-file", grid_file, "Hyperparameter overrides, one algo.param=v1,v2 per line");
  app.add_option("--out", out_path, "Output file (default stdout)");
  app.add_option("--format", format, "csv or markdown")->check(CLI::IsMember({"csv", "markdown"}));
  app.add_option("--workers", workers, "Concurrent trial workers")->check(CLI::PositiveNumber);
  app.add_option("--time-limit-secs", time_limit, "Per-trial time limit in seconds");
  app.add_flag("--strict", strict, "Exit 2 if any cell has a failed trial");
  app.add_flag("--list-algos", list_algos, "Print algorithm identifiers and exit");
  app.add_option("--task", task_hint, "linear or logistic (required for raw file paths)");
  app.add_option("--data-dir", data_dir, "Directory holding named datasets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (list_algos) {
    for (const auto& name : dphd::algo_names()) std::cout << name << "\n";
    return 0;
  }

  try {
    if (dataset.empty()) throw std::invalid_argument("--dataset is required");

    dphd::ExperimentConfig config;
    config.dataset = dataset;
    config.data_dir = data_dir;
    config.task_hint = task_hint;
    config.trials = trials;
    config.master_seed = seed;
    config.time_limit = time_limit;
    config.workers = workers;
    config.out_path = out_path;
    config.format = format == "csv" ? dphd::ReportFormat::csv : dphd::ReportFormat::markdown;

    if (algo_list == "all") {
      for (const auto& name : dphd::algo_names())
        config.algorithms.push_back(dphd::algo_from_name(name));
    } else {
      for (const auto& name : split_commas(algo_list))
        config.algorithms.push_back(dphd::algo_from_name(name));
    }
    if (config.algorithms.empty()) throw std::invalid_argument("no algorithms selected");

    if (!eps_list.empty()) {
      config.epsilons.clear();
      for (const auto& tok : split_commas(eps_list)) config.epsilons.push_back(std::stod(tok));
      if (config.epsilons.empty()) throw std::invalid_argument("no epsilons given");
    }

    if (!grid_file.empty()) {
      std::ifstream in(grid_file);
      if (!in) throw std::invalid_argument("cannot read grid file: " + grid_file);
      std::stringstream buf;
      buf << in.rdbuf();
      config.hyper_grid = dphd::parse_grid_overrides(buf.str());
    }

    const dphd::Dataset data = dphd::load_dataset(config.dataset, config.data_dir, config.task_hint);
    const std::vector<dphd::TrialResult> results = dphd::run_experiment(config, data);
    const std::string report = dphd::emit_report(config, data, results);

    if (out_path.empty()) {
      std::cout << report;
    } else {
      std::ofstream out(out_path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write output file: " + out_path);
      out << report;
    }
    if (config.format == dphd::ReportFormat::csv)
      std::cerr << "note: hyperparameters chosen on validation without charging privacy budget\n";

    if (strict)
      for (const auto& r : results)
        if (!r.ok) {
          std::cerr << "failed trial: " << dphd::algo_name(r.algorithm) << " eps=" << r.epsilon
                    << " trial=" << r.trial << " (" << r.fail_reason << ")\n";
          return 2;
        }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
