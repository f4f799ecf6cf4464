#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "dphd/model.hpp"

namespace dphd {

// Sparse rows in libsvm convention: 1-based indices, strictly increasing
// within a row.
struct RawDataset {
  std::vector<std::vector<std::pair<int, double>>> rows;
  std::vector<double> labels;
  std::string source;

  int max_index() const;
};

struct SplitIndices {
  std::vector<int> train, val, test;
};

RawDataset parse_libsvm(const std::string& text);
std::string serialize_libsvm(const RawDataset& raw);

// Densify; logistic label values are mapped so the smaller raw label becomes 0
Dataset densify(const RawDataset& raw, Task task, int dim = 0);

// Each column shifted to mean zero
Dataset demean(const Dataset& data);

// All rows divided by the max row L1 norm
Dataset rescale_l1(const Dataset& data);

// demean then rescale_l1
Dataset preprocess(const Dataset& data);

// Seeded permutation split into floor(0.6 n) / floor(0.2 n) / remainder
SplitIndices split(int n, std::uint64_t seed);

// Projection onto the top principal components, computed by power iteration
// with deflation (tol 1e-8, max 1000 iterations per component)
Dataset pca_reduce(const Dataset& data, int target_dim);

// d x target_dim orthonormal component matrix used by pca_reduce
Eigen::MatrixXd pca_components(const Dataset& data, int target_dim);

// Sparse ground-truth instance: w* has s_true entries of +-1 at seeded
// positions; rows standard normal then pipeline-preprocessed.
std::pair<Dataset, Eigen::VectorXd> synthetic_sparse(int n, int d, int s_true, double noise_sd,
                                                     Task task, std::uint64_t seed);

// "synthetic:n=..,d=..,s=..,sd=..,task=.." pseudo-path, a named benchmark dataset
// id resolved under data_dir, or a libsvm file path (task_hint required).
Dataset load_dataset(const std::string& spec, const std::string& data_dir,
                     const std::string& task_hint = "");

}  // namespace dphd
