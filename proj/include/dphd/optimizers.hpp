#pragma once

#include <string>
#include <vector>

#include "dphd/model.hpp"
#include "dphd/privacy.hpp"
#include "dphd/random.hpp"

namespace dphd {

enum class Algo {
  ts,
  fw,
  polyfw,
  vrfw,
  htfw,
  htpl,
  projerm,
  admm,
  admmhalf,
  dpight,
  dpslkt,
  htsl,
  htso,
  gcdgsq,
  gcdgsr,
  gcdgss,
  nm,
  dpsgd,
};

const std::vector<std::string>& algo_names();
Algo algo_from_name(const std::string& name);
const std::string& algo_name(Algo a);

struct OptimizerSpec {
  Algo algorithm = Algo::fw;
  int iterations = 10;        // T
  int sparsity = 5;           // s
  double l1_radius = 1.0;     // k
  double reg = 0.0;           // lambda
  double admm_penalty = 1.0;  // gamma
  double learning_rate = 0.1;
  double truncation = 1.0;  // K
  int latent_dim = 5;       // m
  double clip_norm = 1.0;   // C
  int batch_size = 32;
  double catoni_scale = 1.0;
  // test hook: constant streaming weight for polyfw (negative = 1/(t+1))
  double polyfw_weight_override = -1.0;
};

struct FitReport {
  Eigen::VectorXd weights;
  PrivacyBudget spent;
  int iterations_run = 0;
  double wall_time = 0.0;
};

// Common contract: data is preprocessed (max row L1 norm <= 1), the returned
// accounted spend is <= budget, non-convergence returns the last iterate, and
// with noise disabled the routine equals its nonprivate counterpart. Every
// fit starts from w = 0.
FitReport fit(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
              NoiseSource& noise);

FitReport fit_ts(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                 NoiseSource& noise);
FitReport fit_fw(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                 NoiseSource& noise);
FitReport fit_polyfw(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                     NoiseSource& noise);
FitReport fit_vrfw(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                   NoiseSource& noise);
FitReport fit_htfw(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                   NoiseSource& noise);
FitReport fit_htpl(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                   NoiseSource& noise);
FitReport fit_projerm(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                      NoiseSource& noise);
enum class AdmmPenalty { l1, l_half };
FitReport fit_admm(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                   NoiseSource& noise, AdmmPenalty penalty);
FitReport fit_dpight(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                     NoiseSource& noise);
FitReport fit_dpslkt(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                     NoiseSource& noise);
FitReport fit_htsl(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                   NoiseSource& noise);
FitReport fit_htso(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                   NoiseSource& noise);
enum class GcdRule { gsq, gsr, gss };
FitReport fit_gcd(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                  NoiseSource& noise, GcdRule rule);
FitReport fit_nm(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                 NoiseSource& noise);
FitReport fit_dpsgd(const Dataset& data, const PrivacyBudget& budget, const OptimizerSpec& spec,
                    NoiseSource& noise);

// min ||theta||_1 s.t. phi theta = target, by ADMM (500 iterations); the
// returned point is exactly feasible (final step is an affine projection).
// Used by fit_projerm to lift the latent solution back to d dimensions.
Eigen::VectorXd basis_pursuit(const Eigen::MatrixXd& phi, const Eigen::VectorXd& target);

// Binary-tree sample partition used by fit_vrfw: depth-l nodes get
// floor(n / ((h+1) 2^l)) contiguous rows each; iteration t touches the
// root-to-leaf-t path. Exposed so the disjointness/size audit can inspect it.
struct VrfwNode {
  int depth = 0;
  int index = 0;
  int start = 0;
  int size = 0;
};
std::vector<VrfwNode> vrfw_tree_blocks(int n, int T);

// Nonprivate iterative gradient hard thresholding, shared by the
// thresholding-family fits and used as a zero-noise oracle in tests.
Eigen::VectorXd ight(const Dataset& data, int iterations, double learning_rate, int sparsity);

// Stage-2 objective-perturbed solve of fit_ts, exposed so the s = d case can
// be checked against it directly.
Eigen::VectorXd ts_objective_perturbed(const Dataset& data, const std::vector<Eigen::Index>& support,
                                       const PrivacyBudget& stage_budget, double l2_reg_scale,
                                       NoiseSource& noise);

}  // namespace dphd
