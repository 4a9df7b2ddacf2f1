#pragma once

// Shared helpers for tests: random set builders and independent oracles.
// Oracles avoid the library code they check.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>

#include <unistd.h>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prism/corpus.hpp"

namespace testing_support {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("prism_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline prism::EmbeddingSet make_set(std::vector<float> vectors, std::vector<std::uint8_t> labels, std::size_t dim,
                                    std::string name = "set") {
  prism::EmbeddingMeta m;
  m.dataset = name;
  m.domain = name;
  m.model_id = "test";
  m.dim = dim;
  m.count = labels.size();
  m.created_utc = "2000-01-01T00:00:00Z";
  std::vector<prism::StatementRecord> st;
  for (std::size_t i = 0; i < labels.size(); ++i) st.push_back({i, "s" + std::to_string(i), labels[i], name});
  return prism::EmbeddingSet(std::move(m), std::move(vectors), std::move(labels), std::move(st));
}

// Gaussian rows with a planted class offset along `direction`; labels have
// both classes guaranteed when n >= 2.
inline prism::EmbeddingSet random_set(std::mt19937_64& gen, std::size_t n, std::size_t d, double offset = 1.0,
                                      std::string name = "set") {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> dir(d);
  for (auto& x : dir) x = z(gen);
  std::vector<float> v;
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t y = i < 2 ? static_cast<std::uint8_t>(i) : static_cast<std::uint8_t>(gen() & 1u);
    labels.push_back(y);
    for (std::size_t k = 0; k < d; ++k) v.push_back(static_cast<float>(z(gen) + (y ? offset : -offset) * dir[k]));
  }
  return make_set(std::move(v), std::move(labels), d, std::move(name));
}

inline Eigen::MatrixXd to_matrix(const prism::EmbeddingSet& s) {
  Eigen::MatrixXd X(s.count(), s.dim());
  for (std::size_t i = 0; i < s.count(); ++i) {
    for (std::size_t k = 0; k < s.dim(); ++k) X(i, k) = s.row(i)[k];
  }
  return X;
}

// Per-coordinate mean difference, computed row by row in long double.
inline std::vector<double> oracle_theta(const prism::EmbeddingSet& s) {
  std::vector<long double> pos(s.dim(), 0.0L), neg(s.dim(), 0.0L);
  long double np = 0, nn = 0;
  for (std::size_t i = 0; i < s.count(); ++i) {
    auto& acc = s.labels()[i] ? pos : neg;
    (s.labels()[i] ? np : nn) += 1;
    for (std::size_t k = 0; k < s.dim(); ++k) acc[k] += s.row(i)[k];
  }
  std::vector<double> out(s.dim());
  for (std::size_t k = 0; k < s.dim(); ++k) out[k] = static_cast<double>(pos[k] / np - neg[k] / nn);
  return out;
}

struct CovOracle {
  double trace = 0.0;
  double along = 0.0;  // theta' Sigma theta / |theta|^2
};

// Builds the explicit d x d covariance with Eigen.
inline CovOracle oracle_covariance(const Eigen::MatrixXd& X, const std::vector<double>& theta) {
  const Eigen::RowVectorXd mu = X.colwise().mean();
  const Eigen::MatrixXd C = X.rowwise() - mu;
  const Eigen::MatrixXd sigma = C.transpose() * C / static_cast<double>(X.rows() - 1);
  const Eigen::Map<const Eigen::VectorXd> t(theta.data(), static_cast<Eigen::Index>(theta.size()));
  return {sigma.trace(), t.dot(sigma * t) / t.squaredNorm()};
}

}  // namespace testing_support
