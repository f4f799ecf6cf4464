#include "dphd/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dphd/random.hpp"

namespace dphd {

int RawDataset::max_index() const {
  int m = 0;
  for (const auto& row : rows)
    if (!row.empty()) m = std::max(m, row.back().first);
  return m;
}

RawDataset parse_libsvm(const std::string& text) {
  RawDataset out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double label;
    if (!(ls >> label))
      throw std::runtime_error("libsvm parse error at line " + std::to_string(lineno) + ": bad label");
    std::vector<std::pair<int, double>> row;
    std::string tok;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error("libsvm parse error at line " + std::to_string(lineno) +
                                 ": expected idx:val, got '" + tok + "'");
      int idx;
      double val;
      try {
        idx = std::stoi(tok.substr(0, colon));
        val = std::stod(tok.substr(colon + 1));
      } catch (const std::exception&) {
        throw std::runtime_error("libsvm parse error at line " + std::to_string(lineno) +
                                 ": bad idx:val '" + tok + "'");
      }
      if (idx < 1)
        throw std::runtime_error("libsvm parse error at line " + std::to_string(lineno) +
                                 ": index must be >= 1");
      if (!row.empty() && idx <= row.back().first)
        throw std::runtime_error("libsvm parse error at line " + std::to_string(lineno) +
                                 ": nonincreasing feature index");
      row.emplace_back(idx, val);
    }
    out.labels.push_back(label);
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::string serialize_libsvm(const RawDataset& raw) {
  std::ostringstream out;
  char buf[64];
  for (std::size_t i = 0; i < raw.rows.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", raw.labels[i]);
    out << buf;
    for (const auto& [idx, val] : raw.rows[i]) {
      std::snprintf(buf, sizeof(buf), "%.17g", val);
      out << ' ' << idx << ':' << buf;
    }
    out << '\n';
  }
  return out.str();
}

Dataset densify(const RawDataset& raw, Task task, int dim) {
  const int n = static_cast<int>(raw.rows.size());
  const int d = dim > 0 ? dim : raw.max_index();
  Dataset out;
  out.task = task;
  out.X = Eigen::MatrixXd::Zero(n, d);
  out.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (const auto& [idx, val] : raw.rows[i]) {
      if (idx <= d) out.X(i, idx - 1) = val;
    }
    out.y[i] = raw.labels[i];
  }
  if (task == Task::logistic && n > 0) {
    const double lo = *std::min_element(raw.labels.begin(), raw.labels.end());
    for (int i = 0; i < n; ++i) out.y[i] = (out.y[i] == lo) ? 0.0 : 1.0;
  }
  return out;
}

Dataset demean(const Dataset& data) {
  Dataset out = data;
  out.X.rowwise() -= data.X.colwise().mean();
  return out;
}

Dataset rescale_l1(const Dataset& data) {
  double max_norm = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i)
    max_norm = std::max(max_norm, data.X.row(i).lpNorm<1>());
  if (max_norm == 0.0) throw std::invalid_argument("rescale_l1: all-zero design matrix");
  Dataset out = data;
  out.X /= max_norm;
  return out;
}

Dataset preprocess(const Dataset& data) { return rescale_l1(demean(data)); }

SplitIndices split(int n, std::uint64_t seed) {
  if (n < 5) throw std::invalid_argument("split: need n >= 5");
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  NoiseSource rng(seed ^ 0x5357A9B1D2C3E4F5ull);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  const int n_train = (n * 6) / 10;
  const int n_val = (n * 2) / 10;
  SplitIndices out;
  out.train.assign(perm.begin(), perm.begin() + n_train);
  out.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  out.test.assign(perm.begin() + n_train + n_val, perm.end());
  return out;
}

Eigen::MatrixXd pca_components(const Dataset& data, int target_dim) {
  const Eigen::Index n = data.n(), d = data.d();
  if (target_dim < 1 || target_dim > std::min(n, d))
    throw std::invalid_argument("pca_reduce: target_dim out of range");
  Eigen::MatrixXd Xc = data.X;
  Xc.rowwise() -= data.X.colwise().mean();
  Eigen::MatrixXd cov = (Xc.transpose() * Xc) / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
  Eigen::MatrixXd Q(d, target_dim);
  NoiseSource rng(0x9CA7ull);
  for (int c = 0; c < target_dim; ++c) {
    Eigen::VectorXd v(d);
    for (Eigen::Index j = 0; j < d; ++j) v[j] = rng.normal(1.0);
    v.normalize();
    double prev = 0.0;
    for (int it = 0; it < 1000; ++it) {
      Eigen::VectorXd u = cov * v;
      // re-orthogonalize against found components
      for (int k = 0; k < c; ++k) u -= Q.col(k).dot(u) * Q.col(k);
      const double nrm = u.norm();
      if (nrm == 0.0) break;
      u /= nrm;
      const double lam = u.dot(cov * u);
      v = u;
      if (std::abs(lam - prev) <= 1e-8 * std::max(1.0, std::abs(lam))) break;
      prev = lam;
    }
    Q.col(c) = v;
    cov -= v.dot(cov * v) * v * v.transpose();  // deflation
  }
  return Q;
}

Dataset pca_reduce(const Dataset& data, int target_dim) {
  const Eigen::MatrixXd Q = pca_components(data, target_dim);
  Dataset out;
  out.task = data.task;
  Eigen::MatrixXd Xc = data.X;
  Xc.rowwise() -= data.X.colwise().mean();
  out.X = Xc * Q;
  out.y = data.y;
  return out;
}

std::pair<Dataset, Eigen::VectorXd> synthetic_sparse(int n, int d, int s_true, double noise_sd,
                                                     Task task, std::uint64_t seed) {
  if (s_true > d) throw std::invalid_argument("synthetic_sparse: s_true exceeds d");
  NoiseSource rng(seed ^ 0x51A3B7C9ull);
  Eigen::MatrixXd X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = rng.normal(1.0);

  Eigen::VectorXd w_true = Eigen::VectorXd::Zero(d);
  std::vector<int> idx(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) idx[static_cast<std::size_t>(j)] = j;
  for (int j = d - 1; j > 0; --j) {
    const int k = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(j + 1));
    std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(k)]);
  }
  for (int j = 0; j < s_true; ++j) w_true[idx[static_cast<std::size_t>(j)]] = rng.sign();

  // demean + L1 rescale, remembering the rescale factor so logistic margins
  // keep their pre-rescale temperature
  Eigen::MatrixXd Xc = X;
  Xc.rowwise() -= X.colwise().mean();
  double max_norm = 0.0;
  for (int i = 0; i < n; ++i) max_norm = std::max(max_norm, Xc.row(i).lpNorm<1>());
  if (max_norm == 0.0) max_norm = 1.0;

  Dataset data;
  data.task = task;
  data.X = Xc / max_norm;
  data.y.resize(n);
  const Eigen::VectorXd margin = data.X * w_true;
  if (task == Task::linear) {
    // noise_sd is relative to the pre-rescale margin scale, so the
    // signal-to-noise ratio does not depend on the L1 rescale factor
    for (int i = 0; i < n; ++i)
      data.y[i] = margin[i] + (noise_sd > 0.0 ? rng.normal(noise_sd) / max_norm : 0.0);
  } else {
    for (int i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i] * max_norm);
      data.y[i] = (rng.uniform() < p) ? 1.0 : 0.0;
    }
  }
  return {data, w_true};
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> parse_kv(const std::string& body) {
  std::map<std::string, std::string> kv;
  std::istringstream in(body);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("bad synthetic spec item: " + item);
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return kv;
}

Dataset subsample_rows(const Dataset& data, int count, std::uint64_t seed) {
  if (data.n() <= count) return data;
  std::vector<int> perm(static_cast<std::size_t>(data.n()));
  for (int i = 0; i < data.n(); ++i) perm[static_cast<std::size_t>(i)] = i;
  NoiseSource rng(seed);
  for (int i = static_cast<int>(data.n()) - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  perm.resize(static_cast<std::size_t>(count));
  return data.rows(perm);
}

}  // namespace

Dataset load_dataset(const std::string& spec, const std::string& data_dir,
                     const std::string& task_hint) {
  if (spec.rfind("synthetic:", 0) == 0) {
    const auto kv = parse_kv(spec.substr(10));
    const int n = std::stoi(kv.at("n"));
    const int d = std::stoi(kv.at("d"));
    const int s = std::stoi(kv.at("s"));
    const double sd = kv.count("sd") ? std::stod(kv.at("sd")) : 0.0;
    const Task task = (kv.at("task") == "logistic") ? Task::logistic : Task::linear;
    const std::uint64_t seed = kv.count("seed") ? std::stoull(kv.at("seed")) : 0;
    return synthetic_sparse(n, d, s, sd, task, seed).first;
  }

  struct Named {
    Task task;
    bool reduce;
  };
  static const std::map<std::string, Named> named = {
      {"bodyfat", {Task::linear, false}}, {"pah", {Task::linear, false}},
      {"e2006", {Task::linear, true}},    {"heart", {Task::logistic, false}},
      {"dbworld", {Task::logistic, false}}, {"rcv1", {Task::logistic, true}},
  };

  std::string path = spec;
  Task task = Task::linear;
  bool reduce = false;
  const auto it = named.find(spec);
  if (it != named.end()) {
    task = it->second.task;
    reduce = it->second.reduce;
    path.clear();
    for (const char* ext : {"", ".txt", ".libsvm", ".scale"}) {
      const std::string candidate = data_dir + "/" + spec + ext;
      if (std::ifstream(candidate)) {
        path = candidate;
        break;
      }
    }
    if (path.empty())
      throw std::runtime_error("dataset '" + spec + "' not found under " + data_dir +
                               " (see README for the out-of-band fetch)");
  } else {
    if (task_hint.empty())
      throw std::invalid_argument("file datasets need a task hint (linear|logistic)");
    task = (task_hint == "logistic") ? Task::logistic : Task::linear;
  }

  Dataset data = densify(parse_libsvm(read_file(path)), task);
  if (reduce) {
    data = subsample_rows(data, 500, 0);
    const int target = static_cast<int>(std::min<Eigen::Index>(500, std::min(data.n(), data.d())));
    if (target < data.d()) data = pca_reduce(data, target);
  }
  return preprocess(data);
}

}  // namespace dphd
