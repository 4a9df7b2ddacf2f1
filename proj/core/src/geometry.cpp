#include "prism/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "prism/error.hpp"

namespace prism {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

template <typename T>
double dot_row(std::span<const T> row, std::span<const double> w) {
  double s = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) s += static_cast<double>(row[k]) * w[k];
  return s;
}

void normalize(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  for (double& x : v) x /= n;
}

template <typename T>
std::vector<double> column_mean(RowsView<T> rows) {
  std::vector<double> mean(rows.dim(), 0.0);
  for (std::size_t i = 0; i < rows.count(); ++i) {
    const auto r = rows.row(i);
    for (std::size_t k = 0; k < r.size(); ++k) mean[k] += static_cast<double>(r[k]);
  }
  const double n = static_cast<double>(rows.count());
  for (double& m : mean) m /= n;
  return mean;
}

// Sample covariance operator w -> X^T X w / (N-1) on de-centered rows.
template <typename T>
class CovarianceOperator {
 public:
  CovarianceOperator(RowsView<T> rows, std::span<const double> mean)
      : rows_(rows), mean_(mean) {}

  std::vector<double> apply(std::span<const double> w) const {
    std::vector<double> out(rows_.dim(), 0.0);
    const double mean_dot = dot(mean_, w);
    for (std::size_t i = 0; i < rows_.count(); ++i) {
      const auto r = rows_.row(i);
      const double proj = dot_row(r, w) - mean_dot;
      for (std::size_t k = 0; k < r.size(); ++k) {
        out[k] += (static_cast<double>(r[k]) - mean_[k]) * proj;
      }
    }
    const double denom = static_cast<double>(rows_.count() - 1);
    for (double& x : out) x /= denom;
    return out;
  }

 private:
  RowsView<T> rows_;
  std::span<const double> mean_;
};

void orthogonalize(std::vector<double>& v, std::span<const double> against) {
  const double c = dot(v, against);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] -= c * against[k];
}

void fix_sign(std::vector<double>& v) {
  std::size_t arg = 0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (std::abs(v[k]) > std::abs(v[arg])) arg = k;
  }
  if (v[arg] < 0.0) {
    for (double& x : v) x = -x;
  }
}

// Deterministic start: all ones with a small low-discrepancy ripple, so data
// that is exactly antisymmetric across coordinates cannot hide the leading
// eigenvector from the iteration.
std::vector<double> start_vector(std::size_t dim) {
  constexpr double kGolden = 0.6180339887498949;
  std::vector<double> v(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const double frac = std::fmod(static_cast<double>(k + 1) * kGolden, 1.0);
    v[k] = 1.0 + 0.01 * frac;
  }
  normalize(v);
  return v;
}

struct EigenPair {
  std::vector<double> vector;
  double value = 0.0;
  int iterations = 0;
};

template <typename T>
EigenPair power_iterate(const CovarianceOperator<T>& op, std::vector<double> v,
                        const EigenPair* deflate, double scale, const PcaOptions& opt,
                        int which) {
  double previous = -1.0;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    std::vector<double> y = op.apply(v);
    if (deflate != nullptr) {
      const double c = deflate->value * dot(deflate->vector, v);
      for (std::size_t k = 0; k < y.size(); ++k) y[k] -= c * deflate->vector[k];
      orthogonalize(y, deflate->vector);
    }
    const double lambda = dot(v, y);
    const double norm = std::sqrt(dot(y, y));
    // Remaining spectrum is numerically zero: any unit vector in the
    // complement is an eigenvector.
    if (norm <= 1e-14 * scale) return {std::move(v), 0.0, it};
    for (std::size_t k = 0; k < y.size(); ++k) v[k] = y[k] / norm;
    if (deflate != nullptr) {
      orthogonalize(v, deflate->vector);
      normalize(v);
    }
    if (it > 1 && std::abs(lambda - previous) <= opt.tolerance * std::max(std::abs(lambda), 1e-300)) {
      const std::vector<double> fv = op.apply(v);
      double value = dot(v, fv);
      if (deflate != nullptr) value -= deflate->value * dot(deflate->vector, v) * dot(deflate->vector, v);
      return {std::move(v), std::max(value, 0.0), it};
    }
    previous = lambda;
  }
  throw ConvergenceError("power iteration for component " + std::to_string(which) +
                             " did not converge after " + std::to_string(opt.max_iterations) +
                             " iterations",
                         opt.max_iterations);
}

}  // namespace

double TruthDirection::norm() const { return std::sqrt(dot(theta, theta)); }

template <typename T>
TruthDirection truth_direction(RowsView<T> rows, std::span<const std::uint8_t> labels,
                               std::string source_set) {
  if (labels.size() != rows.count()) {
    throw DataError("label count " + std::to_string(labels.size()) + " != row count " +
                    std::to_string(rows.count()));
  }
  TruthDirection out;
  out.source_set = std::move(source_set);
  std::vector<double> pos(rows.dim(), 0.0);
  std::vector<double> neg(rows.dim(), 0.0);
  for (std::size_t i = 0; i < rows.count(); ++i) {
    auto& acc = labels[i] ? pos : neg;
    (labels[i] ? out.n_pos : out.n_neg) += 1;
    const auto r = rows.row(i);
    for (std::size_t k = 0; k < r.size(); ++k) acc[k] += static_cast<double>(r[k]);
  }
  if (out.n_pos == 0 || out.n_neg == 0) {
    throw DataError("degenerate class balance: " + std::to_string(out.n_pos) + " true, " +
                    std::to_string(out.n_neg) + " false rows");
  }
  out.theta.resize(rows.dim());
  for (std::size_t k = 0; k < rows.dim(); ++k) {
    out.theta[k] = pos[k] / static_cast<double>(out.n_pos) - neg[k] / static_cast<double>(out.n_neg);
  }
  return out;
}

TruthDirection truth_direction(const EmbeddingSet& set) {
  return truth_direction(set.view(), set.labels(), set.id());
}

template <typename T>
GeometryReport variance_ratio(RowsView<T> rows, const TruthDirection& dir) {
  if (rows.count() < 2) throw DataError("variance ratio needs at least 2 rows");
  if (dir.theta.size() != rows.dim()) {
    throw DataError("direction dim " + std::to_string(dir.theta.size()) + " != set dim " +
                    std::to_string(rows.dim()));
  }
  const double theta_norm = dir.norm();
  if (!(theta_norm > 0.0)) throw DataError("zero truthfulness direction");
  std::vector<double> unit(dir.theta);
  for (double& x : unit) x /= theta_norm;

  GeometryReport rep;
  rep.mean_vector = column_mean(rows);
  const double mean_proj = dot(rep.mean_vector, unit);
  double total = 0.0;
  double along = 0.0;
  for (std::size_t i = 0; i < rows.count(); ++i) {
    const auto r = rows.row(i);
    for (std::size_t k = 0; k < r.size(); ++k) {
      const double d = static_cast<double>(r[k]) - rep.mean_vector[k];
      total += d * d;
    }
    const double p = dot_row(r, unit) - mean_proj;
    along += p * p;
  }
  const double denom = static_cast<double>(rows.count() - 1);
  rep.total_variance = total / denom;
  rep.directional_variance = along / denom;
  if (!(rep.total_variance > 0.0)) throw DataError("degenerate spread: all rows identical");
  rep.ratio = rep.directional_variance / rep.total_variance;
  return rep;
}

GeometryReport variance_ratio(const EmbeddingSet& set, const TruthDirection& dir) {
  return variance_ratio(set.view(), dir);
}

CosineMatrix cosine_matrix(std::span<const TruthDirection> dirs) {
  CosineMatrix m;
  const std::size_t k = dirs.size();
  std::vector<double> norms(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (dirs[i].theta.size() != dirs.front().theta.size()) {
      throw DataError("direction '" + dirs[i].source_set + "' has dim " +
                      std::to_string(dirs[i].theta.size()) + ", expected " +
                      std::to_string(dirs.front().theta.size()));
    }
    norms[i] = dirs[i].norm();
    if (!(norms[i] > 0.0)) throw DataError("zero truthfulness direction for '" + dirs[i].source_set + "'");
    m.set_ids.push_back(dirs[i].source_set);
  }
  m.values.assign(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    m.values[i * k + i] = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      const double c = std::clamp(dot(dirs[i].theta, dirs[j].theta) / (norms[i] * norms[j]), -1.0, 1.0);
      m.values[i * k + j] = c;
      m.values[j * k + i] = c;
    }
  }
  return m;
}

double column_average_with_diagonal(const CosineMatrix& m, std::size_t col) {
  if (col >= m.size()) throw DataError("column " + std::to_string(col) + " out of range");
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += m.at(i, col);
  return s / static_cast<double>(m.size());
}

double column_average_off_diagonal(const CosineMatrix& m, std::size_t col) {
  if (col >= m.size()) throw DataError("column " + std::to_string(col) + " out of range");
  if (m.size() < 2) throw DataError("off-diagonal average needs at least 2 directions");
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i != col) s += m.at(i, col);
  }
  return s / static_cast<double>(m.size() - 1);
}

template <typename T>
Pca2Result pca2(RowsView<T> rows, const PcaOptions& options) {
  if (rows.count() < 3) throw DataError("PCA needs at least 3 rows");
  if (rows.dim() < 2) throw DataError("PCA to 2 components needs dim >= 2");
  const std::vector<double> mean = column_mean(rows);
  double trace = 0.0;
  for (std::size_t i = 0; i < rows.count(); ++i) {
    const auto r = rows.row(i);
    for (std::size_t k = 0; k < r.size(); ++k) {
      const double d = static_cast<double>(r[k]) - mean[k];
      trace += d * d;
    }
  }
  trace /= static_cast<double>(rows.count() - 1);
  if (!(trace > 0.0)) throw DataError("degenerate spread: all rows identical");

  const CovarianceOperator<T> op(rows, mean);
  EigenPair first = power_iterate(op, start_vector(rows.dim()), nullptr, trace, options, 1);

  std::vector<double> start = start_vector(rows.dim());
  orthogonalize(start, first.vector);
  if (std::sqrt(dot(start, start)) < 1e-6) {
    std::size_t k_min = 0;
    for (std::size_t k = 1; k < rows.dim(); ++k) {
      if (std::abs(first.vector[k]) < std::abs(first.vector[k_min])) k_min = k;
    }
    start.assign(rows.dim(), 0.0);
    start[k_min] = 1.0;
    orthogonalize(start, first.vector);
  }
  normalize(start);
  EigenPair second = power_iterate(op, std::move(start), &first, trace, options, 2);

  fix_sign(first.vector);
  fix_sign(second.vector);

  Pca2Result out;
  out.explained = {first.value, second.value};
  out.iterations = {first.iterations, second.iterations};
  out.projections.resize(rows.count() * 2);
  const double m1 = dot(mean, first.vector);
  const double m2 = dot(mean, second.vector);
  for (std::size_t i = 0; i < rows.count(); ++i) {
    const auto r = rows.row(i);
    out.projections[2 * i] = dot_row(r, first.vector) - m1;
    out.projections[2 * i + 1] = dot_row(r, second.vector) - m2;
  }
  out.components = {std::move(first.vector), std::move(second.vector)};
  return out;
}

Pca2Result pca2(const EmbeddingSet& set, const PcaOptions& options) {
  return pca2(set.view(), options);
}

LogisticBoundary fit_logistic_boundary(std::span<const double> points,
                                       std::span<const std::uint8_t> labels,
                                       const LogisticOptions& options) {
  const std::size_t n = labels.size();
  if (points.size() != 2 * n) throw DataError("points must be n x 2 with one label per point");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0 || positives == n) throw DataError("degenerate class balance for logistic fit");

  LogisticBoundary fit;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int it = 0; it < options.iterations; ++it) {
    double g0 = 0.0, g1 = 0.0, gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = points[2 * i];
      const double y = points[2 * i + 1];
      const double z = fit.w[0] * x + fit.w[1] * y + fit.b;
      const double p = 1.0 / (1.0 + std::exp(-z));
      const double err = p - static_cast<double>(labels[i]);
      g0 += err * x;
      g1 += err * y;
      gb += err;
    }
    fit.w[0] -= options.step * (g0 * inv_n + options.l2 * fit.w[0]);
    fit.w[1] -= options.step * (g1 * inv_n + options.l2 * fit.w[1]);
    fit.b -= options.step * gb * inv_n;
  }
  return fit;
}

template TruthDirection truth_direction<float>(RowsView<float>, std::span<const std::uint8_t>, std::string);
template TruthDirection truth_direction<double>(RowsView<double>, std::span<const std::uint8_t>, std::string);
template GeometryReport variance_ratio<float>(RowsView<float>, const TruthDirection&);
template GeometryReport variance_ratio<double>(RowsView<double>, const TruthDirection&);
template Pca2Result pca2<float>(RowsView<float>, const PcaOptions&);
template Pca2Result pca2<double>(RowsView<double>, const PcaOptions&);

}  // namespace prism
