#include "dphd/optimizers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

namespace dphd {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kDomainFactor = 10.0;  // L2 guardrail radius = 10 * l1_radius

struct DataBounds {
  double xmax = 0.0;          // max |x_ij|
  double row_l2_max = 0.0;    // max row L2 norm
  double ymax = 0.0;          // max |y_i|
  double y_x_inf_max = 0.0;   // max over rows of |y_i| * max_j |x_ij|
  double y_x_l2_max = 0.0;    // max over rows of |y_i| * ||x_i||_2
};

DataBounds bounds_of(const Dataset& data) {
  DataBounds b;
  if (data.n() == 0) return b;
  b.xmax = data.X.cwiseAbs().maxCoeff();
  b.ymax = data.y.cwiseAbs().maxCoeff();
  for (Index i = 0; i < data.n(); ++i) {
    const double l2 = data.X.row(i).norm();
    const double linf = data.X.row(i).cwiseAbs().maxCoeff();
    const double ay = std::abs(data.y[i]);
    b.row_l2_max = std::max(b.row_l2_max, l2);
    b.y_x_inf_max = std::max(b.y_x_inf_max, ay * linf);
    b.y_x_l2_max = std::max(b.y_x_l2_max, ay * l2);
  }
  return b;
}

// sup over the iterate domain of any single coordinate of a per-example
// gradient; pred_bound bounds |<x, w>| on that domain. The |y_i| factor is
// paired with its own row's norm, which is strictly tighter than
// (pred_bound + ymax) * xmax when the largest label and the largest row differ.
double grad_inf_bound(const Dataset& data, const DataBounds& b, double pred_bound) {
  if (data.task == Task::linear) return 2.0 * (pred_bound * b.xmax + b.y_x_inf_max);
  return b.xmax;
}

// analogous L2 bound on a whole per-example gradient
double grad_l2_bound(const Dataset& data, const DataBounds& b, double pred_bound) {
  if (data.task == Task::linear) return 2.0 * (pred_bound * b.row_l2_max + b.y_x_l2_max);
  return b.row_l2_max;
}

// largest eigenvalue of X^T X by power iteration
double spectral_norm_sq(const MatrixXd& X) {
  if (X.rows() == 0 || X.cols() == 0) return 0.0;
  VectorXd v = VectorXd::Ones(X.cols()).normalized();
  double lam = 0.0;
  for (int it = 0; it < 200; ++it) {
    VectorXd u = X.transpose() * (X * v);
    const double nrm = u.norm();
    if (nrm == 0.0) return 0.0;
    u /= nrm;
    const double next = (X * u).squaredNorm();
    if (std::abs(next - lam) <= 1e-10 * std::max(1.0, next)) {
      lam = next;
      break;
    }
    lam = next;
    v = u;
  }
  return lam;
}

// Lipschitz constant of the full (averaged) loss gradient
double smoothness_bound(const Dataset& data) {
  const double lam = spectral_norm_sq(data.X);
  const double n = static_cast<double>(data.n());
  return data.task == Task::linear ? 2.0 * lam / n : lam / (4.0 * n);
}

void clip_l2(VectorXd& w, double radius) {
  const double nrm = w.norm();
  if (nrm > radius) w *= radius / nrm;
}

double pure_step_epsilon(const PrivacyBudget& budget, int steps) {
  return budget.delta > 0.0 ? per_step_epsilon_for(budget.epsilon, steps, budget.delta / 2.0)
                            : budget.epsilon / steps;
}

PrivacyBudget composed_pure_steps(double eps_it, int steps, const PrivacyBudget& budget) {
  if (budget.delta > 0.0) return advanced_composition(eps_it, steps, budget.delta / 2.0);
  return PrivacyBudget{eps_it * steps, 0.0};
}

// Frank-Wolfe loop over the L1-ball vertices {+-k e_j}; the vertex is chosen
// by report_noisy_max on the linearized scores. An exactly-zero score vector
// means a zero duality gap, so the step is skipped.
VectorXd fw_loop(Index d, const OptimizerSpec& spec, int T, double score_sensitivity,
                 double eps_it, NoiseSource& noise,
                 const std::function<VectorXd(const VectorXd&)>& grad_fn) {
  const double k = spec.l1_radius;
  VectorXd w = VectorXd::Zero(d);
  for (int t = 0; t < T; ++t) {
    const VectorXd g = grad_fn(w);
    VectorXd scores(2 * d);
    scores.head(d) = -k * g;
    scores.tail(d) = k * g;
    if (scores.cwiseAbs().maxCoeff() == 0.0) continue;
    const Index pick = report_noisy_max(scores, score_sensitivity, eps_it, noise);
    VectorXd v = VectorXd::Zero(d);
    if (pick < d)
      v[pick] = k;
    else
      v[pick - d] = -k;
    const double gamma = 2.0 / (t + 2.0);
    w = (1.0 - gamma) * w + gamma * v;
  }
  return w;
}

void validate_common(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec) {
  if (data.n() < 1) throw std::invalid_argument("empty dataset");
  if (budget.epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
  if (budget.delta < 0.0 || budget.delta > 1.0) throw std::invalid_argument("delta out of range");
  if (spec.iterations < 0) throw std::invalid_argument("iterations must be nonnegative");
  if (spec.l1_radius <= 0.0) throw std::invalid_argument("l1_radius must be positive");
}

FitReport make_report(VectorXd w, PrivacyBudget spent, int iters) {
  FitReport r;
  r.weights = std::move(w);
  r.spent = spent;
  r.iterations_run = iters;
  return r;
}

// ---------------------------------------------------------------------------

FitReport fw_impl(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                  NoiseSource& noise) {
  validate_common(data, budget, spec);
  const int T = spec.iterations;
  if (T == 0) return make_report(VectorXd::Zero(data.d()), {}, 0);
  const DataBounds b = bounds_of(data);
  const double ginf = grad_inf_bound(data, b, b.xmax * spec.l1_radius);
  const double sens = 2.0 * spec.l1_radius * ginf / static_cast<double>(data.n());
  const double eps_it = pure_step_epsilon(budget, T);
  VectorXd w = fw_loop(data.d(), spec, T, std::max(sens, 1e-300), eps_it, noise,
                       [&](const VectorXd& x) { return gradient(x, data); });
  return make_report(std::move(w), composed_pure_steps(eps_it, T, budget), T);
}

FitReport htfw_impl(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                    NoiseSource& noise) {
  validate_common(data, budget, spec);
  const int T = spec.iterations;
  if (T == 0) return make_report(VectorXd::Zero(data.d()), {}, 0);
  const DataBounds b = bounds_of(data);
  const double ginf = grad_inf_bound(data, b, b.xmax * spec.l1_radius);
  const double sc = spec.catoni_scale;
  if (sc <= 0.0) throw std::invalid_argument("catoni_scale must be positive");
  // one row moves each robust coordinate by at most (sc/n) * 2 psi(ginf/sc)
  const double sens =
      2.0 * spec.l1_radius * (sc / static_cast<double>(data.n())) * catoni_psi(ginf / sc);
  const double eps_it = budget.epsilon / T;  // pure DP, basic composition
  VectorXd w = fw_loop(data.d(), spec, T, std::max(sens, 1e-300), eps_it, noise,
                       [&](const VectorXd& x) {
                         return catoni_robust_gradient(per_example_gradients(x, data), sc);
                       });
  return make_report(std::move(w), PrivacyBudget{budget.epsilon, 0.0}, T);
}

FitReport htpl_impl(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                    NoiseSource& noise) {
  if (data.task != Task::linear) throw std::invalid_argument("htpl supports linear regression only");
  if (budget.delta <= 0.0) throw std::invalid_argument("htpl requires delta > 0");
  return fw_impl(truncate_dataset(data, spec.truncation), budget, spec, noise);
}

FitReport polyfw_impl(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                      NoiseSource& noise) {
  validate_common(data, budget, spec);
  const Index n = data.n(), d = data.d();
  const int n_half = static_cast<int>(n / 2);
  const int steps = static_cast<int>(n) - n_half;
  if (steps == 0 || n < 2) return make_report(VectorXd::Zero(d), {}, 0);
  const DataBounds b = bounds_of(data);
  const double ginf = grad_inf_bound(data, b, b.xmax * spec.l1_radius);
  const double sens = 4.0 * spec.l1_radius * ginf / static_cast<double>(n);
  const double eps_it = pure_step_epsilon(budget, steps);
  const double k = spec.l1_radius;

  std::vector<int> head(static_cast<std::size_t>(n_half));
  for (int i = 0; i < n_half; ++i) head[static_cast<std::size_t>(i)] = i;
  const Dataset first_half = data.rows(head);

  auto row_grad = [&](const VectorXd& w, Index r) -> VectorXd {
    const double z = data.X.row(r).dot(w);
    const double resid = data.task == Task::linear ? 2.0 * (z - data.y[r])
                                                   : sigmoid(z) - data.y[r];
    return resid * data.X.row(r).transpose();
  };

  VectorXd w = VectorXd::Zero(d);
  VectorXd w_prev = w;
  VectorXd dir = n_half > 0 ? VectorXd(gradient(w, first_half)) : VectorXd(VectorXd::Zero(d));
  for (int t = 1; t <= steps; ++t) {
    const Index r = n_half + t - 1;
    const double a = spec.polyfw_weight_override >= 0.0 ? spec.polyfw_weight_override
                                                        : 1.0 / static_cast<double>(t + 1);
    dir = row_grad(w, r) + (1.0 - a) * (dir - row_grad(w_prev, r));
    VectorXd scores(2 * d);
    scores.head(d) = -k * dir;
    scores.tail(d) = k * dir;
    w_prev = w;
    if (scores.cwiseAbs().maxCoeff() != 0.0) {
      const Index pick = report_noisy_max(scores, std::max(sens, 1e-300), eps_it, noise);
      VectorXd v = VectorXd::Zero(d);
      if (pick < d)
        v[pick] = k;
      else
        v[pick - d] = -k;
      const double gamma = 2.0 / (t + 1.0);
      w = (1.0 - gamma) * w + gamma * v;
    }
  }
  return make_report(std::move(w), composed_pure_steps(eps_it, steps, budget), steps);
}

}  // namespace

Eigen::VectorXd basis_pursuit(const Eigen::MatrixXd& phi, const Eigen::VectorXd& target) {
  const Index d = phi.cols();
  const MatrixXd gram = phi * phi.transpose();
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> dec(gram);
  auto project = [&](const VectorXd& v) -> VectorXd {
    return v - phi.transpose() * dec.solve(phi * v - target);
  };
  VectorXd x = VectorXd::Zero(d), z = VectorXd::Zero(d), u = VectorXd::Zero(d);
  const double rho = 1.0;
  for (int it = 0; it < 500; ++it) {
    x = project(z - u);
    z = soft_threshold(x + u, 1.0 / rho);
    u += x - z;
  }
  return project(z - u);
}

std::vector<VrfwNode> vrfw_tree_blocks(int n, int T) {
  const int h = std::max(1, static_cast<int>(std::ceil(std::log2(std::max(T, 2)))));
  std::vector<VrfwNode> nodes;
  int cursor = 0;
  for (int depth = 0; depth <= h; ++depth) {
    const int count = 1 << depth;
    const int size = n / ((h + 1) * count);
    for (int idx = 0; idx < count; ++idx) {
      VrfwNode node;
      node.depth = depth;
      node.index = idx;
      node.start = cursor;
      node.size = std::min(size, std::max(0, n - cursor));
      cursor += node.size;
      nodes.push_back(node);
    }
  }
  return nodes;
}

namespace {

FitReport vrfw_impl(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                    NoiseSource& noise) {
  validate_common(data, budget, spec);
  const int T = spec.iterations;
  if (T == 0) return make_report(VectorXd::Zero(data.d()), {}, 0);
  const Index n = data.n(), d = data.d();
  const int h = std::max(1, static_cast<int>(std::ceil(std::log2(std::max(T, 2)))));
  const auto nodes = vrfw_tree_blocks(static_cast<int>(n), T);
  const DataBounds b = bounds_of(data);
  // smoothness floor: a k-smooth loss is also l-smooth for l >= k
  const double floor = 1.0;
  const double ginf = std::max(grad_inf_bound(data, b, b.xmax * spec.l1_radius), floor * spec.l1_radius);
  const double eps_it = pure_step_epsilon(budget, T);
  const double k = spec.l1_radius;

  auto node_at = [&](int depth, int idx) -> const VrfwNode& {
    return nodes[static_cast<std::size_t>((1 << depth) - 1 + idx)];
  };

  VectorXd w = VectorXd::Zero(d);
  for (int t = 0; t < T; ++t) {
    std::vector<int> rows;
    for (int depth = 0; depth <= h; ++depth) {
      const VrfwNode& node = node_at(depth, t >> (h - depth));
      for (int r = node.start; r < node.start + node.size; ++r) rows.push_back(r);
    }
    if (rows.empty()) rows.push_back(t % static_cast<int>(n));
    const Dataset sub = data.rows(rows);
    const VectorXd g = gradient(w, sub);
    const double sens = 2.0 * k * ginf / static_cast<double>(rows.size());
    VectorXd scores(2 * d);
    scores.head(d) = -k * g;
    scores.tail(d) = k * g;
    if (scores.cwiseAbs().maxCoeff() == 0.0) continue;
    const Index pick = report_noisy_max(scores, sens, eps_it, noise);
    VectorXd v = VectorXd::Zero(d);
    if (pick < d)
      v[pick] = k;
    else
      v[pick - d] = -k;
    const double gamma = 2.0 / (t + 2.0);
    w = (1.0 - gamma) * w + gamma * v;
  }
  return make_report(std::move(w), composed_pure_steps(eps_it, T, budget), T);
}

FitReport projerm_impl(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                       NoiseSource& noise) {
  validate_common(data, budget, spec);
  if (budget.delta <= 0.0) throw std::invalid_argument("projerm requires delta > 0");
  const Index n = data.n(), d = data.d();
  const int m = std::max(1, std::min<int>(spec.latent_dim, static_cast<int>(d)));

  MatrixXd phi(m, d);
  const double entry = 1.0 / std::sqrt(static_cast<double>(m));
  for (int i = 0; i < m; ++i)
    for (Index j = 0; j < d; ++j) phi(i, j) = entry * noise.sign();

  Dataset latent;
  latent.task = data.task;
  latent.X = data.X * phi.transpose();
  latent.y = data.y;

  const long long steps_ll = std::min<long long>(static_cast<long long>(n) * n, 5000);
  const int steps = static_cast<int>(std::max<long long>(steps_ll, 1));
  const double C = spec.clip_norm;
  const double sigma = noise.disabled() ? 0.0 : calibrate_sigma_for_budget(budget, steps, C);
  const double radius = kDomainFactor * spec.l1_radius;

  VectorXd theta_lat = VectorXd::Zero(m);
  for (int t = 0; t < steps; ++t) {
    const MatrixXd per_ex = per_example_gradients(theta_lat, latent);
    VectorXd g = clip_per_example_gradients(per_ex, C);
    g = gaussian_noise(g, sigma, noise);
    theta_lat -= spec.learning_rate * g / static_cast<double>(n);
    clip_l2(theta_lat, radius);
  }

  VectorXd x = basis_pursuit(phi, theta_lat);

  const double rho_spent = noise.disabled() ? 0.0 : zcdp_compose(C, sigma, steps);
  const PrivacyBudget spent{noise.disabled() ? 0.0 : zcdp_to_approx_dp(rho_spent, budget.delta),
                            noise.disabled() ? 0.0 : budget.delta};
  return make_report(std::move(x), spent, steps);
}

FitReport admm_impl(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                    NoiseSource& noise, AdmmPenalty penalty) {
  validate_common(data, budget, spec);
  if (data.task != Task::logistic)
    throw std::invalid_argument("admm supports logistic regression only");
  const int T = spec.iterations;
  const Index d = data.d();
  if (T == 0) return make_report(VectorXd::Zero(d), {}, 0);
  const double gamma = spec.admm_penalty;
  if (gamma <= 0.0) throw std::invalid_argument("admm_penalty must be positive");
  const double lambda = spec.reg;
  const double n = static_cast<double>(data.n());
  const double eps_round = budget.epsilon / T;
  const DataBounds b = bounds_of(data);
  double row_l1_max = 0.0;
  for (Index i = 0; i < data.n(); ++i)
    row_l1_max = std::max(row_l1_max, data.X.row(i).lpNorm<1>());
  // L1 sensitivity of the unnormalized logistic gradient sum is 2 * max row L1
  const double b_scale = 2.0 * std::max(row_l1_max, 1e-300) / eps_round;
  const double msmooth = smoothness_bound(data);

  auto prox = [&](const VectorXd& v) {
    return penalty == AdmmPenalty::l1 ? soft_threshold(v, lambda / gamma)
                                      : half_threshold(v, lambda / gamma);
  };

  VectorXd w = VectorXd::Zero(d), u = VectorXd::Zero(d), z = VectorXd::Zero(d);
  for (int t = 0; t < T; ++t) {
    z = prox(w + u);
    VectorXd bvec(d);
    for (Index j = 0; j < d; ++j) bvec[j] = noise.disabled() ? 0.0 : noise.laplace(b_scale);
    const double step = 1.0 / (msmooth + gamma);
    for (int it = 0; it < 200; ++it) {
      const VectorXd g = gradient(w, data) + gamma * (w - z + u) + bvec / n;
      w -= step * g;
    }
    u += w - z;
  }
  z = prox(w + u);
  return make_report(std::move(z), PrivacyBudget{budget.epsilon, 0.0}, T);
}

FitReport dpight_impl(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                      NoiseSource& noise) {
  validate_common(data, budget, spec);
  const int T = spec.iterations;
  if (T == 0) return make_report(VectorXd::Zero(data.d()), {}, 0);
  const DataBounds b = bounds_of(data);
  const double radius = kDomainFactor * spec.l1_radius;
  const double L = grad_l2_bound(data, b, b.row_l2_max * radius);
  const double sens = 2.0 * L / static_cast<double>(data.n());
  const double sigma =
      noise.disabled() ? 0.0 : calibrate_sigma_for_budget(budget, T, std::max(sens, 1e-300));
  VectorXd w = VectorXd::Zero(data.d());
  for (int t = 0; t < T; ++t) {
    VectorXd g = gaussian_noise(gradient(w, data), sigma, noise);
    w = hard_threshold(w - spec.learning_rate * g, spec.sparsity);
    clip_l2(w, radius);
  }
  const PrivacyBudget spent =
      noise.disabled() ? PrivacyBudget{}
                       : PrivacyBudget{zcdp_to_approx_dp(zcdp_compose(sens, sigma, T), budget.delta),
                                       budget.delta};
  return make_report(std::move(w), spent, T);
}

FitReport dpslkt_impl(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                      NoiseSource& noise) {
  validate_common(data, budget, spec);
  const Index n = data.n(), d = data.d();
  const VectorXd teacher = ight(data, spec.iterations, spec.learning_rate, spec.sparsity);

  const Index m_aux = n;
  MatrixXd A(m_aux, d);
  for (Index i = 0; i < m_aux; ++i)
    for (Index j = 0; j < d; ++j) A(i, j) = noise.normal(1.0);
  double max_l1 = 0.0;
  for (Index i = 0; i < m_aux; ++i) max_l1 = std::max(max_l1, A.row(i).lpNorm<1>());
  if (max_l1 > 0.0) A /= max_l1;

  const double C = spec.clip_norm;
  VectorXd scores = (A * teacher).cwiseMax(-C).cwiseMin(C);
  // one training row can move the teacher arbitrarily, so each clipped
  // prediction can shift by 2C; the whole label vector moves by 2C sqrt(m)
  const double sens = 2.0 * C * std::sqrt(static_cast<double>(m_aux));
  PrivacyBudget spent{};
  if (!noise.disabled()) {
    scores = gaussian_mechanism(scores, sens, budget, noise);
    spent = budget;
  }

  Dataset aux;
  aux.task = data.task;
  aux.X = A;
  aux.y.resize(m_aux);
  for (Index i = 0; i < m_aux; ++i)
    aux.y[i] = data.task == Task::linear ? scores[i] : (scores[i] >= 0.0 ? 1.0 : 0.0);

  VectorXd student = ight(aux, spec.iterations, spec.learning_rate, spec.sparsity);
  return make_report(std::move(student), spent, spec.iterations);
}

FitReport htsl_impl(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                    NoiseSource& noise) {
  validate_common(data, budget, spec);
  if (data.task != Task::linear) throw std::invalid_argument("htsl supports linear regression only");
  const int T = spec.iterations;
  if (T == 0) return make_report(VectorXd::Zero(data.d()), {}, 0);
  const Dataset tdata = truncate_dataset(data, spec.truncation);
  const DataBounds b = bounds_of(tdata);
  const double radius = kDomainFactor * spec.l1_radius;
  const double ginf = grad_inf_bound(tdata, b, b.row_l2_max * radius);
  // one row moves each post-step coordinate by at most eta * 2 ginf / n
  const double sens_w =
      std::max(spec.learning_rate * 2.0 * ginf / static_cast<double>(tdata.n()), 1e-300);
  const double eps_it = pure_step_epsilon(budget, T);
  VectorXd w = VectorXd::Zero(data.d());
  for (int t = 0; t < T; ++t) {
    w -= spec.learning_rate * gradient(w, tdata);
    const auto keep = private_top_s(w.cwiseAbs(), spec.sparsity, sens_w, eps_it, noise);
    VectorXd next = VectorXd::Zero(w.size());
    for (const Index j : keep) next[j] = w[j];
    w = std::move(next);
    clip_l2(w, radius);
  }
  return make_report(std::move(w), composed_pure_steps(eps_it, T, budget), T);
}

FitReport htso_impl(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                    NoiseSource& noise) {
  validate_common(data, budget, spec);
  const int T = spec.iterations;
  if (T == 0) return make_report(VectorXd::Zero(data.d()), {}, 0);
  const double sc = spec.catoni_scale;
  if (sc <= 0.0) throw std::invalid_argument("catoni_scale must be positive");
  const DataBounds b = bounds_of(data);
  const double radius = kDomainFactor * spec.l1_radius;
  const double ginf = grad_inf_bound(data, b, b.row_l2_max * radius);
  const double per_coord = 2.0 * (sc / static_cast<double>(data.n())) * catoni_psi(ginf / sc);
  const double sens = std::max(per_coord * std::sqrt(static_cast<double>(data.d())), 1e-300);
  const double sigma = noise.disabled() ? 0.0 : calibrate_sigma_for_budget(budget, T, sens);
  VectorXd w = VectorXd::Zero(data.d());
  for (int t = 0; t < T; ++t) {
    VectorXd g = catoni_robust_gradient(per_example_gradients(w, data), sc);
    g = gaussian_noise(g, sigma, noise);
    w = hard_threshold(w - spec.learning_rate * g, spec.sparsity);
    clip_l2(w, radius);
  }
  const PrivacyBudget spent =
      noise.disabled() ? PrivacyBudget{}
                       : PrivacyBudget{zcdp_to_approx_dp(zcdp_compose(sens, sigma, T), budget.delta),
                                       budget.delta};
  return make_report(std::move(w), spent, T);
}

FitReport gcd_impl(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                   NoiseSource& noise, GcdRule rule) {
  validate_common(data, budget, spec);
  const int T = spec.iterations;
  const Index d = data.d();
  if (T == 0) return make_report(VectorXd::Zero(d), {}, 0);
  const double lambda = spec.reg;
  const double n = static_cast<double>(data.n());
  const CoordinateConstants cc = coordinate_constants(data, spec.l1_radius);
  const double radius = kDomainFactor * spec.l1_radius;

  const double eps_sel =
      budget.delta > 0.0 ? per_step_epsilon_for(budget.epsilon / 2.0, T, budget.delta / 4.0)
                         : budget.epsilon / (2.0 * T);
  const double eps_upd =
      budget.delta > 0.0 ? per_step_epsilon_for(budget.epsilon / 2.0, T, budget.delta / 4.0)
                         : budget.epsilon / (2.0 * T);

  VectorXd w = VectorXd::Zero(d);
  for (int t = 0; t < T; ++t) {
    const VectorXd g = gradient(w, data);
    VectorXd norm_scores(d);
    for (Index j = 0; j < d; ++j) {
      const double M = cc.smoothness[j];
      const double L = cc.lipschitz[j];
      if (M <= 0.0 || L <= 0.0) {
        norm_scores[j] = -1e300;
        continue;
      }
      const double grad_sens = 2.0 * L / n;
      const double dj = soft_threshold(w[j] - g[j] / M, lambda / M) - w[j];
      double score = 0.0, sens = 0.0;
      switch (rule) {
        case GcdRule::gsq:
          score = -(g[j] * dj + 0.5 * M * dj * dj +
                    lambda * (std::abs(w[j] + dj) - std::abs(w[j])));
          sens = grad_sens * (L + lambda) / M;
          break;
        case GcdRule::gsr:
          score = std::abs(dj);
          sens = grad_sens / M;
          break;
        case GcdRule::gss: {
          double sub;
          if (w[j] > 0.0)
            sub = std::abs(g[j] + lambda);
          else if (w[j] < 0.0)
            sub = std::abs(g[j] - lambda);
          else
            sub = std::max(std::abs(g[j]) - lambda, 0.0);
          score = sub / std::sqrt(M);
          sens = grad_sens / std::sqrt(M);
          break;
        }
      }
      norm_scores[j] = score / sens;
    }
    const Index j = report_noisy_max(norm_scores, 1.0, eps_sel, noise);
    const double M = cc.smoothness[j];
    if (M <= 0.0) continue;
    const double z =
        noise.disabled() ? 0.0 : noise.laplace((2.0 * cc.lipschitz[j] / n) / eps_upd);
    w[j] = soft_threshold(w[j] - (g[j] + z) / M, lambda / M);
    clip_l2(w, radius);
  }

  PrivacyBudget spent;
  if (budget.delta > 0.0) {
    const PrivacyBudget sel = advanced_composition(eps_sel, T, budget.delta / 4.0);
    const PrivacyBudget upd = advanced_composition(eps_upd, T, budget.delta / 4.0);
    spent = PrivacyBudget{sel.epsilon + upd.epsilon, sel.delta + upd.delta};
  } else {
    spent = PrivacyBudget{(eps_sel + eps_upd) * T, 0.0};
  }
  return make_report(std::move(w), spent, T);
}

FitReport nm_impl(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                  NoiseSource& noise) {
  validate_common(data, budget, spec);
  if (budget.delta <= 0.0) throw std::invalid_argument("nm requires delta > 0");
  const int T = std::max(spec.iterations, 1);
  const int phases = std::max(1, static_cast<int>(std::ceil(std::log2(std::max(T, 2)))));
  const double lambda0 = spec.reg > 0.0 ? spec.reg : 1e-3;
  const Index d = data.d();
  const DataBounds b = bounds_of(data);
  const double radius = kDomainFactor * spec.l1_radius;
  const double L = grad_l2_bound(data, b, b.row_l2_max * radius);
  const double msmooth = smoothness_bound(data);
  const double rho_total = zcdp_rho_for_budget(budget);
  const double rho_phase = rho_total / phases;

  VectorXd center = VectorXd::Zero(d);
  for (int i = 1; i <= phases; ++i) {
    const double lam = lambda0 * std::pow(2.0, i);
    VectorXd w = center;
    const double step = 1.0 / (msmooth + lam);
    for (int it = 0; it < 200; ++it) {
      const VectorXd g = gradient(w, data) + lam * (w - center);
      w -= step * g;
    }
    // strong convexity bounds the solution's L2 sensitivity by 2L/(n lam)
    const double sens = 2.0 * L / (static_cast<double>(data.n()) * lam);
    const double sigma = sens / std::sqrt(2.0 * rho_phase);
    w = gaussian_noise(w, sigma, noise);
    clip_l2(w, radius);
    center = w;
  }
  const PrivacyBudget spent{zcdp_to_approx_dp(rho_phase * phases, budget.delta), budget.delta};
  return make_report(std::move(center), spent, phases);
}

FitReport dpsgd_impl(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                     NoiseSource& noise) {
  validate_common(data, budget, spec);
  const int T = spec.iterations;
  const Index n = data.n(), d = data.d();
  if (T == 0) return make_report(VectorXd::Zero(d), {}, 0);
  const int batch = std::max(1, std::min<int>(spec.batch_size, static_cast<int>(n)));
  const double C = spec.clip_norm;
  const double sigma = noise.disabled() ? 0.0 : calibrate_sigma_for_budget(budget, T, C);
  const double radius = kDomainFactor * spec.l1_radius;

  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  auto shuffle = [&]() {
    for (int i = static_cast<int>(n) - 1; i > 0; --i) {
      const int j = static_cast<int>(noise.next_u64() % static_cast<std::uint64_t>(i + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
  };
  shuffle();
  int cursor = 0;

  VectorXd w = VectorXd::Zero(d);
  for (int t = 0; t < T; ++t) {
    if (cursor + batch > static_cast<int>(n)) {
      shuffle();
      cursor = 0;
    }
    std::vector<int> rows(perm.begin() + cursor, perm.begin() + cursor + batch);
    cursor += batch;
    const Dataset sub = data.rows(rows);
    VectorXd g = clip_per_example_gradients(per_example_gradients(w, sub), C);
    g = gaussian_noise(g, sigma, noise);
    w -= spec.learning_rate * g / static_cast<double>(batch);
    clip_l2(w, radius);
  }
  const PrivacyBudget spent =
      noise.disabled() ? PrivacyBudget{}
                       : PrivacyBudget{zcdp_to_approx_dp(zcdp_compose(C, sigma, T), budget.delta),
                                       budget.delta};
  return make_report(std::move(w), spent, T);
}

// nonprivate L1-regularized solve by proximal gradient, used per block in TS
VectorXd lasso_prox_fit(const Dataset& data, double lambda, int iters = 200) {
  const double m = std::max(smoothness_bound(data), 1e-12);
  const double step = 1.0 / m;
  VectorXd w = VectorXd::Zero(data.d());
  for (int it = 0; it < iters; ++it)
    w = soft_threshold(w - step * gradient(w, data), step * lambda);
  return w;
}

FitReport ts_impl(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                  NoiseSource& noise) {
  validate_common(data, budget, spec);
  if (budget.delta <= 0.0) throw std::invalid_argument("ts requires delta > 0");
  const Index n = data.n(), d = data.d();
  const int s = std::min<int>(spec.sparsity, static_cast<int>(d));

  std::vector<Eigen::Index> support;
  PrivacyBudget stage1_spent{};
  if (s < static_cast<int>(d)) {
    const int blocks = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))));
    const int per_block = static_cast<int>(n) / blocks;
    VectorXd counts = VectorXd::Zero(d);
    for (int bidx = 0; bidx < blocks; ++bidx) {
      const int lo = bidx * per_block;
      const int hi = (bidx == blocks - 1) ? static_cast<int>(n) : lo + per_block;
      std::vector<int> rows;
      for (int r = lo; r < hi; ++r) rows.push_back(r);
      if (rows.empty()) continue;
      const VectorXd w_block = lasso_prox_fit(data.rows(rows), spec.reg);
      const VectorXd kept = hard_threshold(w_block, s);
      for (Index j = 0; j < d; ++j)
        if (kept[j] != 0.0) counts[j] += 1.0;
    }
    // one row lives in one block and can change that block's whole vote
    support = private_top_s(counts, s, 1.0, budget.epsilon / 2.0, noise);
    stage1_spent = PrivacyBudget{budget.epsilon / 2.0, 0.0};
  } else {
    support.resize(static_cast<std::size_t>(d));
    for (Index j = 0; j < d; ++j) support[static_cast<std::size_t>(j)] = j;
  }

  const PrivacyBudget stage2{budget.epsilon / 2.0, budget.delta};
  VectorXd w = ts_objective_perturbed(data, support, stage2, 1.0, noise);
  const PrivacyBudget spent{stage1_spent.epsilon + stage2.epsilon, stage2.delta};
  return make_report(std::move(w), noise.disabled() ? PrivacyBudget{} : spent,
                     spec.iterations);
}

template <class F>
FitReport timed_checked(const PrivacyBudget& budget, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  FitReport r = f();
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.spent.epsilon > budget.epsilon * (1.0 + 1e-9) + 1e-12 ||
      r.spent.delta > budget.delta * (1.0 + 1e-9) + 1e-15)
    throw std::logic_error("accounted privacy spend exceeds the requested budget");
  return r;
}

}  // namespace

Eigen::VectorXd ight(const Dataset& data, int iterations, double learning_rate, int sparsity) {
  VectorXd w = VectorXd::Zero(data.d());
  for (int t = 0; t < iterations; ++t)
    w = hard_threshold(w - learning_rate * gradient(w, data), sparsity);
  return w;
}

Eigen::VectorXd ts_objective_perturbed(const Dataset& data, const std::vector<Eigen::Index>& support,
                                       const PrivacyBudget& stage_budget, double l2_reg_scale,
                                       NoiseSource& noise) {
  const Index d = data.d();
  std::vector<int> cols(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) cols[i] = static_cast<int>(support[i]);

  Dataset sub;
  sub.task = data.task;
  sub.y = data.y;
  sub.X.resize(data.n(), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) sub.X.col(static_cast<Index>(i)) = data.X.col(cols[i]);

  const double n = static_cast<double>(data.n());
  const DataBounds b = bounds_of(sub);
  const double L = grad_l2_bound(sub, b, b.row_l2_max * kDomainFactor);
  const double msmooth = std::max(smoothness_bound(sub), 1e-12);
  const double lambda2 = l2_reg_scale * msmooth / (n * stage_budget.epsilon);
  const double sigma_b = (2.0 * L / (n * stage_budget.epsilon)) *
                         std::sqrt(2.0 * std::log(1.25 / stage_budget.delta));

  VectorXd bvec(static_cast<Index>(cols.size()));
  for (Index j = 0; j < bvec.size(); ++j) bvec[j] = noise.disabled() ? 0.0 : noise.normal(sigma_b);

  VectorXd w = VectorXd::Zero(static_cast<Index>(cols.size()));
  const double step = 1.0 / (msmooth + 2.0 * lambda2);
  for (int it = 0; it < 500; ++it) {
    const VectorXd g = gradient(w, sub) + 2.0 * lambda2 * w + bvec / n;
    w -= step * g;
  }

  VectorXd full = VectorXd::Zero(d);
  for (std::size_t i = 0; i < cols.size(); ++i) full[cols[i]] = w[static_cast<Index>(i)];
  return full;
}

const std::vector<std::string>& algo_names() {
  static const std::vector<std::string> names = {
      "ts",     "fw",     "polyfw", "vrfw",   "htfw",   "htpl",   "projerm", "admm", "admmhalf",
      "dpight", "dpslkt", "htsl",   "htso",   "gcdgsq", "gcdgsr", "gcdgss",  "nm",   "dpsgd"};
  return names;
}

Algo algo_from_name(const std::string& name) {
  const auto& names = algo_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<Algo>(i);
  throw std::invalid_argument("unknown algorithm: " + name);
}

const std::string& algo_name(Algo a) { return algo_names()[static_cast<std::size_t>(a)]; }

FitReport fit_ts(const Dataset& d, const PrivacyBudget& b, const OptimizerSpec& s, NoiseSource& n) {
  return timed_checked(b, [&] { return ts_impl(d, b, s, n); });
}
FitReport fit_fw(const Dataset& d, const PrivacyBudget& b, const OptimizerSpec& s, NoiseSource& n) {
  return timed_checked(b, [&] { return fw_impl(d, b, s, n); });
}
FitReport fit_polyfw(const Dataset& d, const PrivacyBudget& b, const OptimizerSpec& s,
                     NoiseSource& n) {
  return timed_checked(b, [&] { return polyfw_impl(d, b, s, n); });
}
FitReport fit_vrfw(const Dataset& d, const PrivacyBudget& b, const OptimizerSpec& s,
                   NoiseSource& n) {
  return timed_checked(b, [&] { return vrfw_impl(d, b, s, n); });
}
FitReport fit_htfw(const Dataset& d, const PrivacyBudget& b, const OptimizerSpec& s,
                   NoiseSource& n) {
  return timed_checked(b, [&] { return htfw_impl(d, b, s, n); });
}
FitReport fit_htpl(const Dataset& d, const PrivacyBudget& b, const OptimizerSpec& s,
                   NoiseSource& n) {
  return timed_checked(b, [&] { return htpl_impl(d, b, s, n); });
}
FitReport fit_projerm(const Dataset& d, const PrivacyBudget& b, const OptimizerSpec& s,
                      NoiseSource& n) {
  return timed_checked(b, [&] { return projerm_impl(d, b, s, n); });
}
FitReport fit_admm(const Dataset& d, const PrivacyBudget& b, const OptimizerSpec& s, NoiseSource& n,
                   AdmmPenalty p) {
  return timed_checked(b, [&] { return admm_impl(d, b, s, n, p); });
}
FitReport fit_dpight(const Dataset& d, const PrivacyBudget& b, const OptimizerSpec& s,
                     NoiseSource& n) {
  return timed_checked(b, [&] { return dpight_impl(d, b, s, n); });
}
FitReport fit_dpslkt(const Dataset& d, const PrivacyBudget& b, const OptimizerSpec& s,
                     NoiseSource& n) {
  return timed_checked(b, [&] { return dpslkt_impl(d, b, s, n); });
}
FitReport fit_htsl(const Dataset& d, const PrivacyBudget& b, const OptimizerSpec& s,
                   NoiseSource& n) {
  return timed_checked(b, [&] { return htsl_impl(d, b, s, n); });
}
FitReport fit_htso(const Dataset& d, const PrivacyBudget& b, const OptimizerSpec& s,
                   NoiseSource& n) {
  return timed_checked(b, [&] { return htso_impl(d, b, s, n); });
}
FitReport fit_gcd(const Dataset& d, const PrivacyBudget& b, const OptimizerSpec& s, NoiseSource& n,
                  GcdRule r) {
  return timed_checked(b, [&] { return gcd_impl(d, b, s, n, r); });
}
FitReport fit_nm(const Dataset& d, const PrivacyBudget& b, const OptimizerSpec& s, NoiseSource& n) {
  return timed_checked(b, [&] { return nm_impl(d, b, s, n); });
}
FitReport fit_dpsgd(const Dataset& d, const PrivacyBudget& b, const OptimizerSpec& s,
                    NoiseSource& n) {
  return timed_checked(b, [&] { return dpsgd_impl(d, b, s, n); });
}

FitReport fit(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
              NoiseSource& noise) {
  switch (spec.algorithm) {
    case Algo::ts: return fit_ts(data, budget, spec, noise);
    case Algo::fw: return fit_fw(data, budget, spec, noise);
    case Algo::polyfw: return fit_polyfw(data, budget, spec, noise);
    case Algo::vrfw: return fit_vrfw(data, budget, spec, noise);
    case Algo::htfw: return fit_htfw(data, budget, spec, noise);
    case Algo::htpl: return fit_htpl(data, budget, spec, noise);
    case Algo::projerm: return fit_projerm(data, budget, spec, noise);
    case Algo::admm: return fit_admm(data, budget, spec, noise, AdmmPenalty::l1);
    case Algo::admmhalf: return fit_admm(data, budget, spec, noise, AdmmPenalty::l_half);
    case Algo::dpight: return fit_dpight(data, budget, spec, noise);
    case Algo::dpslkt: return fit_dpslkt(data, budget, spec, noise);
    case Algo::htsl: return fit_htsl(data, budget, spec, noise);
    case Algo::htso: return fit_htso(data, budget, spec, noise);
    case Algo::gcdgsq: return fit_gcd(data, budget, spec, noise, GcdRule::gsq);
    case Algo::gcdgsr: return fit_gcd(data, budget, spec, noise, GcdRule::gsr);
    case Algo::gcdgss: return fit_gcd(data, budget, spec, noise, GcdRule::gss);
    case Algo::nm: return fit_nm(data, budget, spec, noise);
    case Algo::dpsgd: return fit_dpsgd(data, budget, spec, noise);
  }
  throw std::invalid_argument("unknown algorithm");
}

}  // namespace dphd
