#include "dphd/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dphd {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// ln(1 + e^z) without overflow
double log1pexp(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

void check_dims(const Eigen::VectorXd& w, const Dataset& data) {
  if (w.size() != data.d()) throw std::invalid_argument("weight/dataset dimension mismatch");
  if (data.y.size() != data.n()) throw std::invalid_argument("X/y row count mismatch");
}

}  // namespace

double loss(const Eigen::VectorXd& w, const Dataset& data, double l1_reg) {
  check_dims(w, data);
  const Eigen::Index n = data.n();
  const Eigen::VectorXd z = data.X * w;
  double total = 0.0;
  if (data.task == Task::linear) {
    total = (z - data.y).squaredNorm() / static_cast<double>(n);
  } else {
    for (Eigen::Index i = 0; i < n; ++i) total += log1pexp(z[i]) - data.y[i] * z[i];
    total /= static_cast<double>(n);
  }
  return total + l1_reg * w.lpNorm<1>();
}

Eigen::VectorXd gradient(const Eigen::VectorXd& w, const Dataset& data) {
  check_dims(w, data);
  const double n = static_cast<double>(data.n());
  const Eigen::VectorXd z = data.X * w;
  if (data.task == Task::linear) return (2.0 / n) * (data.X.transpose() * (z - data.y));
  Eigen::VectorXd r(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) r[i] = sigmoid(z[i]) - data.y[i];
  return (1.0 / n) * (data.X.transpose() * r);
}

Eigen::MatrixXd per_example_gradients(const Eigen::VectorXd& w, const Dataset& data) {
  check_dims(w, data);
  const Eigen::VectorXd z = data.X * w;
  Eigen::VectorXd r(z.size());
  if (data.task == Task::linear) {
    r = 2.0 * (z - data.y);
  } else {
    for (Eigen::Index i = 0; i < z.size(); ++i) r[i] = sigmoid(z[i]) - data.y[i];
  }
  return r.asDiagonal() * data.X;
}

CoordinateConstants coordinate_constants(const Dataset& data, double l1_radius) {
  const double n = static_cast<double>(data.n());
  CoordinateConstants out;
  const Eigen::VectorXd abs_sum = data.X.cwiseAbs().colwise().sum();
  const Eigen::VectorXd sq_sum = data.X.cwiseAbs2().colwise().sum();
  if (data.task == Task::linear) {
    const double b_y = (data.n() > 0 ? data.y.cwiseAbs().maxCoeff() : 0.0) + l1_radius;
    out.lipschitz = (2.0 / n) * abs_sum * b_y;
    out.smoothness = (2.0 / n) * sq_sum;
  } else {
    out.lipschitz = (1.0 / n) * abs_sum;
    out.smoothness = (1.0 / (4.0 * n)) * sq_sum;
  }
  return out;
}

Eigen::VectorXd clip_per_example_gradients(const Eigen::MatrixXd& per_example, double clip_norm) {
  if (clip_norm <= 0.0) throw std::invalid_argument("clip norm must be positive");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(per_example.cols());
  for (Eigen::Index i = 0; i < per_example.rows(); ++i) {
    const double nrm = per_example.row(i).norm();
    const double scale = (nrm > clip_norm) ? clip_norm / nrm : 1.0;
    sum += scale * per_example.row(i).transpose();
  }
  return sum;
}

Dataset truncate_dataset(const Dataset& data, double K) {
  if (K <= 0.0) throw std::invalid_argument("truncation bound must be positive");
  Dataset out = data;
  out.X = out.X.cwiseMax(-K).cwiseMin(K);
  out.y = out.y.cwiseMax(-K).cwiseMin(K);
  return out;
}

double catoni_psi(double x) {
  const double a = std::abs(x);
  const double v = std::log(1.0 + a + 0.5 * a * a);
  return x >= 0.0 ? v : -v;
}

Eigen::VectorXd catoni_robust_gradient(const Eigen::MatrixXd& per_example, double scale) {
  if (scale <= 0.0) throw std::invalid_argument("catoni scale must be positive");
  const double n = static_cast<double>(per_example.rows());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(per_example.cols());
  for (Eigen::Index i = 0; i < per_example.rows(); ++i)
    for (Eigen::Index j = 0; j < per_example.cols(); ++j)
      out[j] += catoni_psi(per_example(i, j) / scale);
  return (scale / n) * out;
}

Eigen::VectorXd hard_threshold(const Eigen::VectorXd& w, int s) {
  if (s < 1) throw std::invalid_argument("sparsity must be >= 1");
  if (s >= w.size()) return w;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(w.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(w[a]) > std::abs(w[b]);
  });
  Eigen::VectorXd out = Eigen::VectorXd::Zero(w.size());
  for (int r = 0; r < s; ++r) out[order[static_cast<std::size_t>(r)]] = w[order[static_cast<std::size_t>(r)]];
  return out;
}

std::vector<Eigen::Index> private_top_s(const Eigen::VectorXd& scores, int s, double sensitivity,
                                        double epsilon, NoiseSource& noise) {
  if (s < 1) throw std::invalid_argument("private_top_s: s must be >= 1");
  if (s > scores.size()) throw std::invalid_argument("private_top_s: s exceeds dimension");
  const double eps_round = epsilon / s;
  std::vector<Eigen::Index> selected;
  std::vector<bool> taken(static_cast<std::size_t>(scores.size()), false);
  for (int round = 0; round < s; ++round) {
    Eigen::VectorXd remaining(scores.size() - round);
    std::vector<Eigen::Index> remap(static_cast<std::size_t>(scores.size() - round));
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < scores.size(); ++j) {
      if (taken[static_cast<std::size_t>(j)]) continue;
      remaining[k] = scores[j];
      remap[static_cast<std::size_t>(k)] = j;
      ++k;
    }
    const Eigen::Index pick = remap[static_cast<std::size_t>(
        report_noisy_max(remaining, sensitivity, eps_round, noise))];
    taken[static_cast<std::size_t>(pick)] = true;
    selected.push_back(pick);
  }
  return selected;
}

double soft_threshold(double w, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("soft_threshold: lambda must be nonnegative");
  const double m = std::abs(w) - lambda;
  return m > 0.0 ? (w > 0.0 ? m : -m) : 0.0;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& w, double lambda) {
  Eigen::VectorXd out(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) out[i] = soft_threshold(w[i], lambda);
  return out;
}

double half_threshold(double w, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("half_threshold: lambda must be nonnegative");
  if (lambda == 0.0) return w;
  // Closed-form rule for argmin_v (1/2)(v-w)^2 + lambda |v|^{1/2}; equals the
  // classical half-thresholding operator at an effective penalty of 2*lambda
  // (the classical form is stated for (v-w)^2 without the 1/2). Validated
  // against a dense grid oracle in the tests.
  const double le = 2.0 * lambda;
  const double cutoff = (std::cbrt(54.0) / 4.0) * std::pow(le, 2.0 / 3.0);
  const double a = std::abs(w);
  if (a <= cutoff) return 0.0;
  const double phi = std::acos((le / 8.0) * std::pow(a / 3.0, -1.5));
  return (2.0 / 3.0) * w * (1.0 + std::cos(2.0 * M_PI / 3.0 - (2.0 / 3.0) * phi));
}

Eigen::VectorXd half_threshold(const Eigen::VectorXd& w, double lambda) {
  Eigen::VectorXd out(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) out[i] = half_threshold(w[i], lambda);
  return out;
}

double evaluate(const Eigen::VectorXd& w, const Dataset& data) {
  check_dims(w, data);
  const Eigen::VectorXd z = data.X * w;
  if (data.task == Task::linear)
    return (z - data.y).squaredNorm() / static_cast<double>(data.n());
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double pred = (z[i] >= 0.0) ? 1.0 : 0.0;
    if (pred == data.y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.n());
}

}  // namespace dphd
