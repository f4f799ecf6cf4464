// Protocol acceptance: full-protocol benchmark criteria against the named
// datasets. Prints one PASS/FAIL line per criterion. When the dataset files
// have not been fetched (see README), prints SKIP lines and exits 77 so the
// test runner records a skip rather than a failure.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "dphd/bench.hpp"
#include "dphd/data_io.hpp"

using namespace dphd;

namespace {

int g_failures = 0;

void report(const char* number, const std::string& name, bool ok) {
  std::printf("[%s] criterion %s: %s\n", ok ? "PASS" : "FAIL", number, name.c_str());
  if (!ok) ++g_failures;
}

bool dataset_present(const std::string& data_dir, const std::string& id) {
  for (const char* ext : {"", ".txt", ".libsvm", ".scale"}) {
    if (std::ifstream(data_dir + "/" + id + ext)) return true;
  }
  return false;
}

struct Cell {
  double mean = 0.0;
  bool available = false;
};

std::map<std::pair<std::string, double>, Cell> cells_of(const ExperimentConfig& config,
                                                        const std::vector<TrialResult>& results) {
  std::map<std::pair<std::string, double>, Cell> out;
  for (Algo algo : config.algorithms) {
    for (double eps : config.epsilons) {
      std::vector<TrialResult> bucket;
      for (const auto& r : results)
        if (r.algorithm == algo && r.epsilon == eps) bucket.push_back(r);
      const CellStats s = aggregate(bucket);
      out[{algo_name(algo), eps}] = {s.mean, s.available};
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string data_dir = argc > 1 ? argv[1] : "data";

  if (!dataset_present(data_dir, "bodyfat") || !dataset_present(data_dir, "heart")) {
    std::printf("[SKIP] criterion 5 (named datasets): bodyfat/heart not present under %s\n",
                data_dir.c_str());
    std::printf("[SKIP] criterion 7: coarse table reproduction needs bodyfat and heart\n");
    std::printf("[SKIP] criterion 8: headline trend needs bodyfat and heart\n");
    std::printf("[SKIP] criterion 9: reproducibility is defined over criterion 7's run\n");
    std::printf("fetch the datasets with tools/fetch_datasets.sh on a networked machine\n");
    return 77;
  }

  const unsigned hw = std::thread::hardware_concurrency();
  const int workers = static_cast<int>(hw == 0 ? 4 : hw);

  // criterion 5, named-dataset half: the preprocessing audit on real files
  {
    bool ok = true;
    for (const std::string& id : {std::string("bodyfat"), std::string("heart")}) {
      const Dataset data = load_dataset(id, data_dir);
      double max_l1 = 0.0;
      for (Eigen::Index i = 0; i < data.n(); ++i)
        max_l1 = std::max(max_l1, data.X.row(i).lpNorm<1>());
      ok = ok && std::abs(max_l1 - 1.0) <= 1e-12;
    }
    const SplitIndices s = split(static_cast<int>(load_dataset("bodyfat", data_dir).n()), 0);
    ok = ok && s.train.size() == 151 && s.val.size() == 50 && s.test.size() == 51;
    report("5 (named datasets)", "preprocessing and split audit on real files", ok);
  }

  // full-protocol runs: 20 trials, default reference grids, validation-tuned
  ExperimentConfig bodyfat;
  bodyfat.dataset = "bodyfat";
  bodyfat.data_dir = data_dir;
  bodyfat.algorithms = {Algo::fw, Algo::htso};
  bodyfat.epsilons = {0.1, 0.5, 1.0, 2.0, 5.0};
  bodyfat.trials = 20;
  bodyfat.master_seed = 20260823;
  bodyfat.workers = workers;
  const Dataset bodyfat_data = load_dataset("bodyfat", data_dir);
  const std::vector<TrialResult> bodyfat_results = run_experiment(bodyfat, bodyfat_data);
  const auto bf = cells_of(bodyfat, bodyfat_results);

  ExperimentConfig heart;
  heart.dataset = "heart";
  heart.data_dir = data_dir;
  heart.algorithms = {Algo::gcdgsq, Algo::gcdgsr, Algo::gcdgss, Algo::dpsgd};
  heart.epsilons = {0.1, 0.5, 1.0, 2.0, 5.0};
  heart.trials = 20;
  heart.master_seed = 20260823;
  heart.workers = workers;
  const Dataset heart_data = load_dataset("heart", data_dir);
  const auto ht = cells_of(heart, run_experiment(heart, heart_data));

  {  // criterion 7: wide bands around the reference table values
    const Cell fw1 = bf.at({"fw", 1.0});
    const Cell htso01 = bf.at({"htso", 0.1});
    const Cell gsq05 = ht.at({"gcdgsq", 0.5});
    std::printf("  fw mse@1 = %.4f, htso mse@0.1 = %.4f, gcdgsq acc@0.5 = %.4f\n", fw1.mean,
                htso01.mean, gsq05.mean);
    const bool ok = fw1.available && fw1.mean >= 0.07 && fw1.mean <= 0.13 &&
                    htso01.available && htso01.mean >= 0.05 && htso01.mean <= 0.10 &&
                    gsq05.available && gsq05.mean >= 0.70;
    report("7", "coarse table reproduction (bodyfat fw/htso, heart gcdgsq)", ok);
  }

  {  // criterion 8: directional headline trends
    bool ok = true;
    for (double eps : {0.1, 0.5, 1.0}) {
      const Cell a = bf.at({"htso", eps}), b = bf.at({"fw", eps});
      ok = ok && a.available && b.available && a.mean <= b.mean;
    }
    for (double eps : heart.epsilons) {
      const Cell sgd = ht.at({"dpsgd", eps});
      double best_gcd = -1.0;
      for (const char* rule : {"gcdgsq", "gcdgsr", "gcdgss"}) {
        const Cell c = ht.at({rule, eps});
        if (c.available) best_gcd = std::max(best_gcd, c.mean);
      }
      ok = ok && sgd.available && best_gcd >= sgd.mean;
    }
    report("8", "headline trend (htso <= fw on bodyfat, best gcd >= dpsgd on heart)", ok);
  }

  {  // criterion 9: the same seed reproduces the csv byte for byte
    const std::string once = emit_csv(bodyfat, bodyfat_results);
    const std::string again = emit_csv(bodyfat, run_experiment(bodyfat, bodyfat_data));
    report("9", "byte-identical csv on rerun with the same master seed", once == again);
  }

  return g_failures == 0 ? 0 : 1;
}
