#pragma once

// Truthfulness-direction geometry of hidden states: the mean-difference
// direction, how much of the total variance lies along it, how well
// directions from different sets agree, and 2-D PCA views for plotting.
//
// All sums are accumulated in double regardless of the stored precision.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prism/corpus.hpp"
#include "prism/rows.hpp"

namespace prism {

struct TruthDirection {
  std::vector<double> theta;  // mean(label 1) - mean(label 0)
  std::string source_set;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;

  double norm() const;
};

struct GeometryReport {
  double total_variance = 0.0;        // trace of the sample covariance
  double directional_variance = 0.0;  // sample variance of projections on theta/|theta|
  double ratio = 0.0;                 // directional / total
  std::vector<double> mean_vector;
};

struct CosineMatrix {
  std::vector<std::string> set_ids;
  std::vector<double> values;  // k*k row-major

  std::size_t size() const noexcept { return set_ids.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * size() + j]; }
};

template <typename T>
TruthDirection truth_direction(RowsView<T> rows, std::span<const std::uint8_t> labels,
                               std::string source_set = {});
TruthDirection truth_direction(const EmbeddingSet& set);

// Streams over rows twice (mean, then deviations); never forms the d x d
// covariance.
template <typename T>
GeometryReport variance_ratio(RowsView<T> rows, const TruthDirection& dir);
GeometryReport variance_ratio(const EmbeddingSet& set, const TruthDirection& dir);

CosineMatrix cosine_matrix(std::span<const TruthDirection> dirs);

// Column mean over all k entries, self-similarity diagonal included.
double column_average_with_diagonal(const CosineMatrix& m, std::size_t col);
// Column mean over the k-1 off-diagonal entries.
double column_average_off_diagonal(const CosineMatrix& m, std::size_t col);

struct PcaOptions {
  double tolerance = 1e-9;  // relative change of the eigenvalue estimate
  int max_iterations = 1000;
};

struct Pca2Result {
  std::vector<double> projections;  // count x 2, row-major
  std::array<std::vector<double>, 2> components;
  std::array<double, 2> explained{};  // variance along each component
  std::array<int, 2> iterations{};
};

// Top two principal components by matrix-free power iteration with Hotelling
// deflation. Components are unit-norm and orthogonal; the largest-magnitude
// coordinate of each is made positive.
template <typename T>
Pca2Result pca2(RowsView<T> rows, const PcaOptions& options = {});
Pca2Result pca2(const EmbeddingSet& set, const PcaOptions& options = {});

struct LogisticOptions {
  int iterations = 2000;
  double step = 0.1;
  double l2 = 1e-4;  // penalty (l2/2)|w|^2, bias unpenalized
};

struct LogisticBoundary {
  std::array<double, 2> w{};
  double b = 0.0;

  // 1 when w.x + b >= 0
  std::uint8_t predict(double x, double y) const { return w[0] * x + w[1] * y + b >= 0.0; }
};

// Full-batch gradient descent on mean cross-entropy, starting from zero.
// `points` is n x 2 row-major.
LogisticBoundary fit_logistic_boundary(std::span<const double> points,
                                       std::span<const std::uint8_t> labels,
                                       const LogisticOptions& options = {});

}  // namespace prism
