#include "dphd/bench.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dphd {

namespace {

const std::vector<double> kIters = {1, 2, 5, 10, 20, 50, 100};
const std::vector<double> kSparsity = {1, 2, 5, 10};
const std::vector<double> kReg = {0.001, 0.005, 0.01, 0.05, 0.1, 0.5};
const std::vector<double> kLr = {0.001, 0.01, 0.1};
const std::vector<double> kGamma = {0.001, 0.01, 0.1, 1.0};
const std::vector<double> kCatoni = {1, 10, 100};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

HyperGrid default_grid(Algo algo) {
  HyperGrid g;
  switch (algo) {
    case Algo::ts:
      g["sparsity"] = kSparsity;
      g["reg"] = kReg;
      break;
    case Algo::fw:
    case Algo::htpl:
      g["iter"] = kIters;
      break;
    case Algo::polyfw:
    case Algo::vrfw:
    case Algo::nm:
      break;
    case Algo::htfw:
      g["iter"] = kIters;
      g["s"] = kCatoni;
      break;
    case Algo::projerm:
      g["latent"] = {2, 5, 10, 20};
      break;
    case Algo::admm:
    case Algo::admmhalf:
      g["iter"] = kIters;
      g["gamma"] = kGamma;
      g["reg"] = kReg;
      break;
    case Algo::dpight:
    case Algo::dpslkt:
    case Algo::htsl:
      g["sparsity"] = kSparsity;
      g["lr"] = kLr;
      g["iter"] = kIters;
      break;
    case Algo::htso:
      g["sparsity"] = kSparsity;
      g["lr"] = kLr;
      g["iter"] = kIters;
      g["s"] = kCatoni;
      break;
    case Algo::gcdgsq:
    case Algo::gcdgsr:
    case Algo::gcdgss:
      g["iter"] = kIters;
      g["reg"] = kReg;
      break;
    case Algo::dpsgd:
      g["batch"] = {32, 64, 128};
      g["lr"] = kLr;
      g["iter"] = kIters;
      break;
  }
  return g;
}

namespace {

void apply_param(OptimizerSpec& spec, const std::string& key, double v) {
  if (key == "iter")
    spec.iterations = static_cast<int>(v);
  else if (key == "sparsity")
    spec.sparsity = static_cast<int>(v);
  else if (key == "reg" || key == "lambda")
    spec.reg = v;
  else if (key == "gamma")
    spec.admm_penalty = v;
  else if (key == "lr")
    spec.learning_rate = v;
  else if (key == "s")
    spec.catoni_scale = v;
  else if (key == "latent")
    spec.latent_dim = static_cast<int>(v);
  else if (key == "batch")
    spec.batch_size = static_cast<int>(v);
  else if (key == "k")
    spec.l1_radius = v;
  else if (key == "truncation")
    spec.truncation = v;
  else if (key == "clip")
    spec.clip_norm = v;
  else
    throw std::invalid_argument("unknown hyperparameter: " + key);
}

}  // namespace

std::vector<OptimizerSpec> expand_grid(Algo algo, const HyperGrid& grid) {
  std::vector<OptimizerSpec> out;
  OptimizerSpec base;
  base.algorithm = algo;
  out.push_back(base);
  for (const auto& [key, values] : grid) {
    if (values.empty()) throw std::invalid_argument("empty value list for " + key);
    std::vector<OptimizerSpec> next;
    next.reserve(out.size() * values.size());
    for (const auto& spec : out)
      for (double v : values) {
        OptimizerSpec s = spec;
        apply_param(s, key, v);
        next.push_back(s);
      }
    out = std::move(next);
  }
  return out;
}

std::map<std::string, HyperGrid> parse_grid_overrides(const std::string& text) {
  std::map<std::string, HyperGrid> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    const auto dot = line.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw std::invalid_argument("grid file line " + std::to_string(lineno) +
                                  ": expected \"algo.param = v1,v2,...\"");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string algo = trim(line.substr(0, dot));
    const std::string param = trim(line.substr(dot + 1, eq - dot - 1));
    std::vector<double> values;
    std::istringstream vs(line.substr(eq + 1));
    std::string tok;
    while (std::getline(vs, tok, ',')) {
      tok = trim(tok);
      if (tok.empty()) continue;
      std::size_t pos = 0;
      const double v = std::stod(tok, &pos);
      if (pos != tok.size())
        throw std::invalid_argument("grid file line " + std::to_string(lineno) +
                                    ": bad value \"" + tok + "\"");
      values.push_back(v);
    }
    if (values.empty())
      throw std::invalid_argument("grid file line " + std::to_string(lineno) + ": no values");
    algo_from_name(algo);  // validates the name
    out[algo][param] = values;
  }
  return out;
}

HyperGrid effective_grid(const ExperimentConfig& config, Algo algo) {
  HyperGrid g = default_grid(algo);
  const auto it = config.hyper_grid.find(algo_name(algo));
  if (it != config.hyper_grid.end())
    for (const auto& [key, values] : it->second) g[key] = values;
  return g;
}

bool higher_is_better(Task task) { return task == Task::logistic; }

namespace {

std::uint64_t stream_seed(const ExperimentConfig& config, Algo algo, double epsilon, int trial,
                          std::size_t combo) {
  std::uint64_t s = NoiseSource::child_seed(config.master_seed, static_cast<std::uint64_t>(trial));
  s = NoiseSource::child_seed(s, 0x1000 + static_cast<std::uint64_t>(algo));
  s = NoiseSource::child_seed(s, std::bit_cast<std::uint64_t>(epsilon));
  return NoiseSource::child_seed(s, static_cast<std::uint64_t>(combo));
}

std::string describe(const OptimizerSpec& spec, const HyperGrid& grid) {
  std::string out;
  for (const auto& [key, values] : grid) {
    (void)values;
    double v = 0.0;
    if (key == "iter")
      v = spec.iterations;
    else if (key == "sparsity")
      v = spec.sparsity;
    else if (key == "reg" || key == "lambda")
      v = spec.reg;
    else if (key == "gamma")
      v = spec.admm_penalty;
    else if (key == "lr")
      v = spec.learning_rate;
    else if (key == "s")
      v = spec.catoni_scale;
    else if (key == "latent")
      v = spec.latent_dim;
    else if (key == "batch")
      v = spec.batch_size;
    else if (key == "k")
      v = spec.l1_radius;
    else if (key == "truncation")
      v = spec.truncation;
    else if (key == "clip")
      v = spec.clip_norm;
    if (!out.empty()) out += " ";
    out += key + "=" + fmt(v);
  }
  return out.empty() ? "default" : out;
}

}  // namespace

TrialResult run_trial(const ExperimentConfig& config, const Dataset& data, Algo algo,
                      double epsilon, int trial_index) {
  const auto t0 = std::chrono::steady_clock::now();
  TrialResult result;
  result.dataset = config.dataset;
  result.algorithm = algo;
  result.epsilon = epsilon;
  result.trial = trial_index;

  const SplitIndices idx =
      split(static_cast<int>(data.n()),
            NoiseSource::child_seed(config.master_seed, static_cast<std::uint64_t>(trial_index)));
  const Dataset train = data.rows(idx.train);
  const Dataset val = data.rows(idx.val);
  const Dataset test = data.rows(idx.test);
  const double n_train = static_cast<double>(train.n());
  const double delta = epsilon == 100.0 ? 0.999 : 1.0 / (n_train * n_train);
  const PrivacyBudget budget{epsilon, delta};

  const HyperGrid grid = effective_grid(config, algo);
  const std::vector<OptimizerSpec> specs = expand_grid(algo, grid);
  const bool maximize = higher_is_better(data.task);
  const double worst = maximize ? -std::numeric_limits<double>::infinity()
                                : std::numeric_limits<double>::infinity();

  double best_val = worst;
  Eigen::VectorXd best_w;
  std::string best_desc;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (elapsed > config.time_limit) {
      result.ok = false;
      result.fail_reason = "timeout";
      result.wall_time = elapsed;
      return result;
    }
    double score = worst;
    Eigen::VectorXd w;
    try {
      NoiseSource noise(stream_seed(config, algo, epsilon, trial_index, c));
      const FitReport fit_result = fit(train, budget, specs[c], noise);
      w = fit_result.weights;
      if (w.allFinite()) score = evaluate(w, val);
      if (!std::isfinite(score)) score = worst;
    } catch (const std::exception&) {
      score = worst;
    }
    const bool better = maximize ? score > best_val : score < best_val;
    if ((better && std::isfinite(score)) || (std::isfinite(score) && !std::isfinite(best_val))) {
      best_val = score;
      best_w = std::move(w);
      best_desc = describe(specs[c], grid);
    }
  }

  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!std::isfinite(best_val)) {
    result.ok = false;
    result.fail_reason = "all configurations failed";
    return result;
  }
  result.validation_metric = best_val;
  result.chosen_hyperparameters = best_desc;
  const double test_metric = evaluate(best_w, test);
  if (!std::isfinite(test_metric)) {
    result.ok = false;
    result.fail_reason = "non-finite test metric";
    return result;
  }
  result.test_metric = test_metric;
  result.ok = true;
  return result;
}

CellStats aggregate(const std::vector<TrialResult>& cell) {
  CellStats stats;
  double sum = 0.0;
  for (const auto& r : cell) {
    if (r.ok) {
      ++stats.ok;
      sum += r.test_metric;
    } else {
      ++stats.failed;
    }
  }
  if (stats.ok < 2) return stats;
  stats.available = true;
  stats.mean = sum / stats.ok;
  double sq = 0.0;
  for (const auto& r : cell)
    if (r.ok) sq += (r.test_metric - stats.mean) * (r.test_metric - stats.mean);
  const double sd = std::sqrt(sq / (stats.ok - 1));
  stats.two_sem = 2.0 * sd / std::sqrt(static_cast<double>(stats.ok));
  return stats;
}

std::vector<TrialResult> run_experiment(const ExperimentConfig& config, const Dataset& data) {
  struct Job {
    Algo algo;
    double epsilon;
    int trial;
  };
  std::vector<Job> jobs;
  for (const Algo algo : config.algorithms)
    for (const double eps : config.epsilons)
      for (int t = 0; t < config.trials; ++t) jobs.push_back({algo, eps, t});

  std::vector<TrialResult> results(jobs.size());
  const int workers = std::max(1, config.workers);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      results[i] = run_trial(config, data, jobs[i].algo, jobs[i].epsilon, jobs[i].trial);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

namespace {

std::map<std::pair<std::size_t, std::size_t>, std::vector<TrialResult>> group_cells(
    const ExperimentConfig& config, const std::vector<TrialResult>& results) {
  std::map<std::pair<std::size_t, std::size_t>, std::vector<TrialResult>> cells;
  for (const auto& r : results) {
    std::size_t ai = 0, ei = 0;
    for (std::size_t i = 0; i < config.algorithms.size(); ++i)
      if (config.algorithms[i] == r.algorithm) ai = i;
    for (std::size_t i = 0; i < config.epsilons.size(); ++i)
      if (config.epsilons[i] == r.epsilon) ei = i;
    cells[{ai, ei}].push_back(r);
  }
  return cells;
}

}  // namespace

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string emit_csv(const ExperimentConfig& config, const std::vector<TrialResult>& results) {
  const auto cells = group_cells(config, results);
  std::string out = "dataset,algorithm,epsilon,mean,two_sem,trials_ok,trials_failed\n";
  for (std::size_t ai = 0; ai < config.algorithms.size(); ++ai)
    for (std::size_t ei = 0; ei < config.epsilons.size(); ++ei) {
      const auto it = cells.find({ai, ei});
      const CellStats s = it == cells.end() ? CellStats{} : aggregate(it->second);
      out += csv_field(config.dataset) + "," + algo_name(config.algorithms[ai]) + "," +
             fmt(config.epsilons[ei]) + ",";
      if (s.available)
        out += fmt(s.mean) + "," + fmt(s.two_sem);
      else
        out += ",";
      out += "," + std::to_string(s.ok) + "," + std::to_string(s.failed) + "\n";
    }
  return out;
}

std::string emit_markdown(const ExperimentConfig& config, const Dataset& data,
                          const std::vector<TrialResult>& results) {
  const auto cells = group_cells(config, results);
  const bool maximize = higher_is_better(data.task);
  const std::size_t na = config.algorithms.size(), ne = config.epsilons.size();

  std::vector<std::vector<CellStats>> stats(na, std::vector<CellStats>(ne));
  for (std::size_t ai = 0; ai < na; ++ai)
    for (std::size_t ei = 0; ei < ne; ++ei) {
      const auto it = cells.find({ai, ei});
      if (it != cells.end()) stats[ai][ei] = aggregate(it->second);
    }

  std::vector<double> best(ne, maximize ? -std::numeric_limits<double>::infinity()
                                        : std::numeric_limits<double>::infinity());
  for (std::size_t ei = 0; ei < ne; ++ei)
    for (std::size_t ai = 0; ai < na; ++ai)
      if (stats[ai][ei].available)
        best[ei] = maximize ? std::max(best[ei], stats[ai][ei].mean)
                            : std::min(best[ei], stats[ai][ei].mean);

  auto cell_text = [](const CellStats& s) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.4f ± %.4f", s.mean, s.two_sem);
    return std::string(buf);
  };

  std::string out = "# " + config.dataset + "\n\n| algorithm |";
  for (std::size_t ei = 0; ei < ne; ++ei)
    out += config.epsilons[ei] == 100.0 ? " nonprivate |" : " eps=" + fmt(config.epsilons[ei]) + " |";
  out += "\n|---|";
  for (std::size_t ei = 0; ei < ne; ++ei) out += "---|";
  out += "\n";
  for (std::size_t ai = 0; ai < na; ++ai) {
    out += "| " + algo_name(config.algorithms[ai]) + " |";
    for (std::size_t ei = 0; ei < ne; ++ei) {
      const CellStats& s = stats[ai][ei];
      if (!s.available) {
        out += " unavailable |";
        continue;
      }
      const std::string text = cell_text(s);
      out += s.mean == best[ei] ? " **" + text + "** |" : " " + text + " |";
    }
    out += "\n";
  }
  out += "\nMetric: ";
  out += maximize ? "classification accuracy (higher is better)."
                  : "test mean squared error (lower is better).";
  out += "\nNote: hyperparameters are chosen on a validation split without charging the"
         " privacy budget.\n";
  return out;
}

std::string emit_report(const ExperimentConfig& config, const Dataset& data,
                        const std::vector<TrialResult>& results) {
  return config.format == ReportFormat::csv ? emit_csv(config, results)
                                            : emit_markdown(config, data, results);
}

}  // namespace dphd
