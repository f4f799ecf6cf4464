#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "dphd/data_io.hpp"

using namespace dphd;

TEST_CASE("libsvm parsing") {
  const RawDataset raw = parse_libsvm("1 3:2.5 7:-1\n0\n");
  REQUIRE(raw.rows.size() == 2);
  CHECK(raw.labels[0] == 1.0);
  CHECK(raw.labels[1] == 0.0);
  REQUIRE(raw.rows[0].size() == 2);
  CHECK(raw.rows[0][0] == std::pair<int, double>{3, 2.5});
  CHECK(raw.rows[0][1] == std::pair<int, double>{7, -1.0});
  CHECK(raw.rows[1].empty());  // label-only line is an all-zero row
  CHECK(raw.max_index() == 7);
}

TEST_CASE("libsvm parse errors carry line numbers") {
  CHECK_THROWS_WITH_AS(parse_libsvm("1 3:2.5\n2 5:1 4:2\n"), doctest::Contains("line 2"),
                       std::runtime_error);
  CHECK_THROWS(parse_libsvm("1 0:3\n"));      // indices are 1-based
  CHECK_THROWS(parse_libsvm("1 3:abc\n"));    // bad value
}

TEST_CASE("libsvm round trip") {
  const std::string text = "1 1:0.25 4:-3.5 9:1e-3\n-1 2:7\n1\n";
  const RawDataset a = parse_libsvm(text);
  const RawDataset b = parse_libsvm(serialize_libsvm(a));
  CHECK(a.labels == b.labels);
  CHECK(a.rows == b.rows);
}

TEST_CASE("densify maps the smaller logistic label to 0") {
  const RawDataset raw = parse_libsvm("-1 1:1\n+1 2:1\n-1 1:2\n");
  const Dataset data = densify(raw, Task::logistic);
  CHECK(data.n() == 3);
  CHECK(data.d() == 2);
  CHECK(data.y[0] == 0.0);
  CHECK(data.y[1] == 1.0);
  CHECK(data.y[2] == 0.0);
  CHECK(data.X(0, 0) == 1.0);
  CHECK(data.X(1, 1) == 1.0);
}

TEST_CASE("demean") {
  Dataset data;
  data.task = Task::linear;
  data.X.resize(2, 2);
  data.X << 1.0, 5.0, 3.0, 5.0;
  data.y.resize(2);
  data.y << 0.0, 1.0;
  const Dataset out = demean(data);
  CHECK(out.X(0, 0) == doctest::Approx(-1.0));
  CHECK(out.X(1, 0) == doctest::Approx(1.0));
  CHECK(out.X(0, 1) == 0.0);  // constant column becomes zero
  CHECK(out.X(1, 1) == 0.0);

  NoiseSource rng(3);
  Dataset rnd;
  rnd.task = Task::linear;
  rnd.X.resize(30, 6);
  rnd.y = Eigen::VectorXd::Zero(30);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 6; ++j) rnd.X(i, j) = rng.normal(2.0);
  const Dataset dm = demean(rnd);
  const double bound = 1e-10 * 30 * rnd.X.cwiseAbs().maxCoeff();
  CHECK(dm.X.colwise().mean().cwiseAbs().maxCoeff() <= bound);
}

TEST_CASE("L1 rescale") {
  Dataset data;
  data.task = Task::linear;
  data.X.resize(2, 2);
  data.X << 1.0, 1.0, 2.0, 2.0;
  data.y.resize(2);
  data.y << 1.0, 1.0;
  const Dataset out = rescale_l1(data);
  CHECK(out.X(0, 0) == doctest::Approx(0.25));
  CHECK(out.X(1, 1) == doctest::Approx(0.5));

  CHECK(rescale_l1(out).X == out.X);  // already max-norm 1

  Dataset zero;
  zero.task = Task::linear;
  zero.X = Eigen::MatrixXd::Zero(2, 2);
  zero.y = Eigen::VectorXd::Zero(2);
  CHECK_THROWS(rescale_l1(zero));
}

TEST_CASE("pipeline yields max row L1 norm exactly 1") {
  NoiseSource rng(11);
  Dataset data;
  data.task = Task::linear;
  data.X.resize(40, 7);
  data.y.resize(40);
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 7; ++j) data.X(i, j) = rng.normal(3.0);
    data.y[i] = rng.normal(1.0);
  }
  const Dataset out = preprocess(data);
  double max_l1 = 0.0;
  for (int i = 0; i < 40; ++i) max_l1 = std::max(max_l1, out.X.row(i).lpNorm<1>());
  CHECK(std::abs(max_l1 - 1.0) <= 1e-12);
}

TEST_CASE("split sizes and bijection") {
  const SplitIndices ten = split(10, 1);
  CHECK(ten.train.size() == 6);
  CHECK(ten.val.size() == 2);
  CHECK(ten.test.size() == 2);

  const SplitIndices bodyfat = split(252, 7);
  CHECK(bodyfat.train.size() == 151);
  CHECK(bodyfat.val.size() == 50);
  CHECK(bodyfat.test.size() == 51);

  for (int n : {5, 17, 101}) {
    const SplitIndices s = split(n, 99);
    std::vector<int> all;
    all.insert(all.end(), s.train.begin(), s.train.end());
    all.insert(all.end(), s.val.begin(), s.val.end());
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    std::vector<int> expected(n);
    std::iota(expected.begin(), expected.end(), 0);
    CHECK(all == expected);
  }
  CHECK_THROWS(split(4, 0));
  CHECK(split(20, 5).train == split(20, 5).train);  // seeded determinism
}

TEST_CASE("pca component orthonormality and isometry") {
  NoiseSource rng(21);
  Dataset data;
  data.task = Task::linear;
  data.X.resize(25, 6);
  data.y = Eigen::VectorXd::Zero(25);
  for (int i = 0; i < 25; ++i)
    for (int j = 0; j < 6; ++j) data.X(i, j) = rng.normal(1.0);

  const Eigen::MatrixXd Q = pca_components(data, 6);
  CHECK((Q.transpose() * Q - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-6);

  // full-dimension projection preserves pairwise distances
  const Dataset proj = pca_reduce(data, 6);
  for (int i = 0; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j) {
      const double orig = (data.X.row(i) - data.X.row(j)).norm();
      const double red = (proj.X.row(i) - proj.X.row(j)).norm();
      CHECK(std::abs(orig - red) <= 1e-6 * std::max(1.0, orig));
    }
}

TEST_CASE("pca on rank-1 data reconstructs with one component") {
  NoiseSource rng(22);
  Eigen::VectorXd dir(5);
  for (int j = 0; j < 5; ++j) dir[j] = rng.normal(1.0);
  Dataset data;
  data.task = Task::linear;
  data.X.resize(12, 5);
  data.y = Eigen::VectorXd::Zero(12);
  for (int i = 0; i < 12; ++i) data.X.row(i) = rng.normal(1.0) * dir.transpose();

  const Eigen::MatrixXd Q = pca_components(data, 1);
  const Eigen::MatrixXd recon = (data.X * Q) * Q.transpose();
  CHECK((recon - data.X).cwiseAbs().maxCoeff() <= 1e-6 * data.X.cwiseAbs().maxCoeff());
}

TEST_CASE("synthetic sparse instances") {
  const auto [data, w_true] = synthetic_sparse(60, 12, 3, 0.0, Task::linear, 5);
  CHECK(data.n() == 60);
  CHECK(data.d() == 12);
  int nnz = 0;
  for (int j = 0; j < 12; ++j) {
    if (w_true[j] != 0.0) {
      ++nnz;
      CHECK(std::abs(w_true[j]) == 1.0);
    }
  }
  CHECK(nnz == 3);

  // seeded reproducibility
  const auto [again, w_again] = synthetic_sparse(60, 12, 3, 0.0, Task::linear, 5);
  CHECK(again.X == data.X);
  CHECK(again.y == data.y);
  CHECK(w_again == w_true);
  const auto [other, w_other] = synthetic_sparse(60, 12, 3, 0.0, Task::linear, 6);
  CHECK(other.X != data.X);

  // noiseless targets: least squares on the true support recovers w*
  std::vector<int> support;
  for (int j = 0; j < 12; ++j)
    if (w_true[j] != 0.0) support.push_back(j);
  Eigen::MatrixXd Xs(60, 3);
  for (int c = 0; c < 3; ++c) Xs.col(c) = data.X.col(support[c]);
  const Eigen::VectorXd ls = Xs.colPivHouseholderQr().solve(data.y);
  for (int c = 0; c < 3; ++c) CHECK(std::abs(ls[c] - w_true[support[c]]) <= 1e-6);
}

TEST_CASE("synthetic pseudo-path loading") {
  const Dataset a = load_dataset("synthetic:n=50,d=8,s=2,sd=0.1,task=linear", "/nonexistent");
  CHECK(a.n() == 50);
  CHECK(a.d() == 8);
  CHECK(a.task == Task::linear);

  const Dataset b = load_dataset("synthetic:n=30,d=4,s=1,sd=0.0,task=logistic,seed=9", "/nonexistent");
  CHECK(b.task == Task::logistic);
  for (int i = 0; i < 30; ++i) CHECK((b.y[i] == 0.0 || b.y[i] == 1.0));

  CHECK_THROWS(load_dataset("synthetic:n=50", "/nonexistent"));
  CHECK_THROWS(load_dataset("no_such_dataset", "/nonexistent"));
}
