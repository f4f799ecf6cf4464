#pragma once

#include <Eigen/Core>
#include <vector>

#include "dphd/privacy.hpp"
#include "dphd/random.hpp"

namespace dphd {

enum class Task { linear, logistic };

// Dense design matrix (row = sample) plus targets. Logistic labels live in
// {0, 1}. After the preprocessing pipeline the max row L1 norm is 1.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Task task = Task::linear;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index d() const { return X.cols(); }

  Dataset rows(const std::vector<int>& idx) const {
    Dataset out;
    out.task = task;
    out.X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
    out.y.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.X.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
      out.y[static_cast<Eigen::Index>(i)] = y[idx[i]];
    }
    return out;
  }
};

struct CoordinateConstants {
  Eigen::VectorXd lipschitz;   // L_j
  Eigen::VectorXd smoothness;  // M_j
};

double sigmoid(double z);

// linear:   (1/n) sum (<x_i,w> - y_i)^2 + lambda ||w||_1
// logistic: (1/n) sum [ln(1+e^{<x_i,w>}) - y_i <x_i,w>] + lambda ||w||_1
double loss(const Eigen::VectorXd& w, const Dataset& data, double l1_reg = 0.0);

Eigen::VectorXd gradient(const Eigen::VectorXd& w, const Dataset& data);

// n x d matrix of per-example gradients (row i = gradient of example i's
// unaveraged loss term)
Eigen::MatrixXd per_example_gradients(const Eigen::VectorXd& w, const Dataset& data);

// Per-feature Lipschitz and smoothness bounds. The linear-task Lipschitz
// bound needs a bound on predictions; the L1 ball of the given radius
// supplies it through B_y = max|y| + radius.
CoordinateConstants coordinate_constants(const Dataset& data, double l1_radius = 1.0);

// Rows scaled by min(1, C/||row||_2), then summed. L2 sensitivity of the
// returned sum is C.
Eigen::VectorXd clip_per_example_gradients(const Eigen::MatrixXd& per_example, double clip_norm);

// Every entry of X and y clamped into [-K, K]
Dataset truncate_dataset(const Dataset& data, double K);

// Coordinate-wise Catoni robust mean: (s/n) sum_i psi(g_ij / s), with
// psi(x) = sgn(x) ln(1 + |x| + x^2/2)
double catoni_psi(double x);
Eigen::VectorXd catoni_robust_gradient(const Eigen::MatrixXd& per_example, double scale);

// Keep the s largest-|w_j| entries, zero the rest; ties keep the lowest index
Eigen::VectorXd hard_threshold(const Eigen::VectorXd& w, int s);

// s rounds of peeling, each a report_noisy_max at epsilon/s over the
// still-unselected indices
std::vector<Eigen::Index> private_top_s(const Eigen::VectorXd& scores, int s, double sensitivity,
                                        double epsilon, NoiseSource& noise);

double soft_threshold(double w, double lambda);
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& w, double lambda);

// Proximal operator of v -> lambda |v|^{1/2} under the (1/2)(v-w)^2 coupling,
// via the closed-form half-thresholding rule
double half_threshold(double w, double lambda);
Eigen::VectorXd half_threshold(const Eigen::VectorXd& w, double lambda);

// linear -> test MSE; logistic -> accuracy with ties at margin 0 predicting 1
double evaluate(const Eigen::VectorXd& w, const Dataset& data);

}  // namespace dphd
