#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "dphd/random.hpp"

namespace dphd {

struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;

  bool pure() const { return delta == 0.0; }
};

enum class AccountingMode { basic, advanced, zcdp };

// Ordered ledger of per-step spends. Totals are monotone nondecreasing as
// steps are appended.
class Accountant {
 public:
  explicit Accountant(AccountingMode mode, double delta_prime = 0.0)
      : mode_(mode), delta_prime_(delta_prime) {}

  void spend(const PrivacyBudget& step);
  void spend_rho(double rho);

  AccountingMode mode() const { return mode_; }
  double rho() const { return rho_; }
  std::size_t steps() const { return ledger_.size(); }

  // Composed (epsilon, delta) of everything in the ledger. In zcdp mode the
  // conversion delta must be supplied.
  PrivacyBudget total(double conversion_delta = 0.0) const;

 private:
  AccountingMode mode_;
  double delta_prime_;
  double rho_ = 0.0;
  std::vector<PrivacyBudget> ledger_;
};

// values + i.i.d. Laplace(sensitivity_l1 / epsilon) noise
Eigen::VectorXd laplace_mechanism(const Eigen::VectorXd& values, double sensitivity_l1,
                                  double epsilon, NoiseSource& noise);

// Classic analytic Gaussian calibration for a single release.
double gaussian_sigma(double sensitivity_l2, const PrivacyBudget& budget);

// values + i.i.d. N(0, sigma^2); respects noise.disabled()
Eigen::VectorXd gaussian_noise(const Eigen::VectorXd& values, double sigma, NoiseSource& noise);

Eigen::VectorXd gaussian_mechanism(const Eigen::VectorXd& values, double sensitivity_l2,
                                   const PrivacyBudget& budget, NoiseSource& noise);

// argmax of scores + Laplace(2*sensitivity/epsilon); ties in the noised
// array broken by lowest index. With noise disabled returns the true argmax.
Eigen::Index report_noisy_max(const Eigen::VectorXd& scores, double sensitivity, double epsilon,
                              NoiseSource& noise);

// k-fold adaptive composition of (eps, per_step_delta) steps at slack
// delta_prime: epsilon' = 2 eps sqrt(2 k ln(1/delta')), delta = k delta + delta'.
PrivacyBudget advanced_composition(double per_step_epsilon, int k, double delta_prime,
                                   double per_step_delta = 0.0);

// Inverse of the above in epsilon: the per-step epsilon that composes to
// total_epsilon over k steps.
double per_step_epsilon_for(double total_epsilon, int k, double delta_prime);

// rho = steps * sens^2 / (2 sigma^2)
double zcdp_compose(double sensitivity_l2, double sigma, int steps);

// epsilon = rho + 2 sqrt(rho ln(1/delta))
double zcdp_to_approx_dp(double rho, double delta);

// Largest rho whose conversion at delta stays within epsilon (closed form).
double zcdp_rho_for_budget(const PrivacyBudget& budget);

// Smallest sigma (bisection, relative tolerance 1e-6) such that `steps`
// Gaussian releases at L2 sensitivity compose, via zCDP, to within budget.
double calibrate_sigma_for_budget(const PrivacyBudget& budget, int steps, double sensitivity_l2);

}  // namespace dphd
