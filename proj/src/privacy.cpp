#include "dphd/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dphd {

void Accountant::spend(const PrivacyBudget& step) {
  if (step.epsilon < 0.0 || step.delta < 0.0) throw std::invalid_argument("negative spend");
  ledger_.push_back(step);
}

void Accountant::spend_rho(double rho) {
  if (rho < 0.0) throw std::invalid_argument("negative rho");
  rho_ += rho;
  ledger_.push_back(PrivacyBudget{0.0, 0.0});
}

PrivacyBudget Accountant::total(double conversion_delta) const {
  switch (mode_) {
    case AccountingMode::basic: {
      PrivacyBudget t;
      for (const auto& s : ledger_) {
        t.epsilon += s.epsilon;
        t.delta += s.delta;
      }
      return t;
    }
    case AccountingMode::advanced: {
      if (ledger_.empty()) return {};
      double eps_max = 0.0, delta_sum = 0.0;
      for (const auto& s : ledger_) {
        eps_max = std::max(eps_max, s.epsilon);
        delta_sum += s.delta;
      }
      PrivacyBudget t = advanced_composition(eps_max, static_cast<int>(ledger_.size()), delta_prime_);
      t.delta = delta_sum + delta_prime_;
      return t;
    }
    case AccountingMode::zcdp:
      return PrivacyBudget{zcdp_to_approx_dp(rho_, conversion_delta), conversion_delta};
  }
  return {};
}

Eigen::VectorXd laplace_mechanism(const Eigen::VectorXd& values, double sensitivity_l1,
                                  double epsilon, NoiseSource& noise) {
  if (sensitivity_l1 <= 0.0) throw std::invalid_argument("laplace_mechanism: sensitivity must be positive");
  if (epsilon <= 0.0) throw std::invalid_argument("laplace_mechanism: epsilon must be positive");
  if (noise.disabled()) return values;
  const double b = sensitivity_l1 / epsilon;
  Eigen::VectorXd out = values;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += noise.laplace(b);
  return out;
}

double gaussian_sigma(double sensitivity_l2, const PrivacyBudget& budget) {
  if (sensitivity_l2 <= 0.0) throw std::invalid_argument("gaussian_sigma: sensitivity must be positive");
  if (budget.delta <= 0.0) throw std::invalid_argument("gaussian mechanism requires delta > 0");
  if (budget.epsilon <= 0.0) throw std::invalid_argument("gaussian_sigma: epsilon must be positive");
  return sensitivity_l2 * std::sqrt(2.0 * std::log(1.25 / budget.delta)) / budget.epsilon;
}

Eigen::VectorXd gaussian_noise(const Eigen::VectorXd& values, double sigma, NoiseSource& noise) {
  if (noise.disabled() || sigma == 0.0) return values;
  Eigen::VectorXd out = values;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += noise.normal(sigma);
  return out;
}

Eigen::VectorXd gaussian_mechanism(const Eigen::VectorXd& values, double sensitivity_l2,
                                   const PrivacyBudget& budget, NoiseSource& noise) {
  const double sigma = gaussian_sigma(sensitivity_l2, budget);
  return gaussian_noise(values, sigma, noise);
}

Eigen::Index report_noisy_max(const Eigen::VectorXd& scores, double sensitivity, double epsilon,
                              NoiseSource& noise) {
  if (scores.size() == 0) throw std::invalid_argument("report_noisy_max: empty scores");
  if (sensitivity <= 0.0) throw std::invalid_argument("report_noisy_max: sensitivity must be positive");
  if (epsilon <= 0.0) throw std::invalid_argument("report_noisy_max: epsilon must be positive");
  const double b = 2.0 * sensitivity / epsilon;
  Eigen::Index best = 0;
  double best_val = scores[0] + (noise.disabled() ? 0.0 : noise.laplace(b));
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    const double v = scores[i] + (noise.disabled() ? 0.0 : noise.laplace(b));
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  return best;
}

PrivacyBudget advanced_composition(double per_step_epsilon, int k, double delta_prime,
                                   double per_step_delta) {
  if (per_step_epsilon <= 0.0) throw std::invalid_argument("advanced_composition: epsilon must be positive");
  if (k < 1) throw std::invalid_argument("advanced_composition: k must be >= 1");
  if (delta_prime <= 0.0 || delta_prime >= 1.0)
    throw std::invalid_argument("advanced_composition: delta_prime must be in (0,1)");
  PrivacyBudget out;
  out.epsilon = 2.0 * per_step_epsilon * std::sqrt(2.0 * k * std::log(1.0 / delta_prime));
  out.delta = k * per_step_delta + delta_prime;
  return out;
}

double per_step_epsilon_for(double total_epsilon, int k, double delta_prime) {
  if (total_epsilon <= 0.0) throw std::invalid_argument("per_step_epsilon_for: epsilon must be positive");
  if (k < 1) throw std::invalid_argument("per_step_epsilon_for: k must be >= 1");
  if (delta_prime <= 0.0 || delta_prime >= 1.0)
    throw std::invalid_argument("per_step_epsilon_for: delta_prime must be in (0,1)");
  return total_epsilon / (2.0 * std::sqrt(2.0 * k * std::log(1.0 / delta_prime)));
}

double zcdp_compose(double sensitivity_l2, double sigma, int steps) {
  if (sigma <= 0.0) throw std::invalid_argument("zcdp_compose: sigma must be positive");
  if (sensitivity_l2 <= 0.0) throw std::invalid_argument("zcdp_compose: sensitivity must be positive");
  if (steps < 0) throw std::invalid_argument("zcdp_compose: steps must be nonnegative");
  return steps * sensitivity_l2 * sensitivity_l2 / (2.0 * sigma * sigma);
}

double zcdp_to_approx_dp(double rho, double delta) {
  if (rho < 0.0) throw std::invalid_argument("zcdp_to_approx_dp: rho must be nonnegative");
  if (delta <= 0.0 || delta >= 1.0)
    throw std::invalid_argument("zcdp_to_approx_dp: delta must be in (0,1)");
  return rho + 2.0 * std::sqrt(rho * std::log(1.0 / delta));
}

double zcdp_rho_for_budget(const PrivacyBudget& budget) {
  if (budget.epsilon <= 0.0) throw std::invalid_argument("zcdp_rho_for_budget: epsilon must be positive");
  if (budget.delta <= 0.0 || budget.delta >= 1.0)
    throw std::invalid_argument("zcdp_rho_for_budget: delta must be in (0,1)");
  const double L = std::log(1.0 / budget.delta);
  const double r = std::sqrt(L + budget.epsilon) - std::sqrt(L);
  return r * r;
}

double calibrate_sigma_for_budget(const PrivacyBudget& budget, int steps, double sensitivity_l2) {
  if (steps < 1) throw std::invalid_argument("calibrate_sigma_for_budget: steps must be >= 1");
  if (sensitivity_l2 <= 0.0)
    throw std::invalid_argument("calibrate_sigma_for_budget: sensitivity must be positive");
  if (budget.delta <= 0.0) throw std::invalid_argument("calibrate_sigma_for_budget: delta must be > 0");
  auto fits = [&](double sigma) {
    return zcdp_to_approx_dp(zcdp_compose(sensitivity_l2, sigma, steps), budget.delta) <=
           budget.epsilon;
  };
  double lo = 1e-12, hi = 1.0;
  while (!fits(hi)) hi *= 2.0;
  if (fits(lo)) return lo;
  // invariant: fits(hi), !fits(lo)
  while ((hi - lo) / hi > 1e-7) {
    const double mid = 0.5 * (lo + hi);
    if (fits(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace dphd
