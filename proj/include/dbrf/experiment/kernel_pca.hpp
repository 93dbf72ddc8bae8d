#pragma once

#include "dbrf/core/common.hpp"

#include <numeric>

namespace dbrf {

struct KernelPcaOptions {
  double bandwidth = 0.0;  // <= 0: median pairwise distance
  std::size_t max_rows = 2000;
  std::size_t components = 2;
  std::size_t max_iterations = 5000;
  double tolerance = 1e-9;  // residual, relative to the top eigenvalue
  std::uint64_t seed = 0;
};

struct KernelPcaResult {
  Matrix coordinates;             // rows x components
  std::vector<std::size_t> rows;  // source row of each coordinate row
  Vector eigenvalues;
  double bandwidth = 0.0;
  std::vector<std::size_t> iterations;
};

/// Up to `max_rows` row indices, sorted, drawn without replacement.
inline std::vector<std::size_t> subsample_rows(std::size_t n, std::size_t max_rows, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n <= max_rows) return idx;
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(max_rows);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline Matrix squared_distances(const Matrix& x) {
  const Vector sq = x.rowwise().squaredNorm();
  Matrix d = (-2.0 * x * x.transpose()).colwise() + sq;
  d.rowwise() += sq.transpose();
  return d.cwiseMax(0.0);
}

inline double median_pairwise_distance(const Matrix& sq_dist) {
  std::vector<double> v;
  const Index m = sq_dist.rows();
  v.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (Index j = 0; j < m; ++j)
    for (Index i = j + 1; i < m; ++i) v.push_back(std::sqrt(sq_dist(i, j)));
  if (v.empty()) return 1.0;
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid > 0.0 ? *mid : 1.0;
}

/// H K H with H = I - 11'/m.
inline Matrix double_center(const Matrix& k) {
  const Vector row_mean = k.rowwise().mean();
  const Vector col_mean = k.colwise().mean().transpose();
  const double all = k.mean();
  Matrix c = k;
  c.colwise() -= row_mean;
  c.rowwise() -= col_mean.transpose();
  c.array() += all;
  return c;
}

/// RBF kernel PCA by block subspace iteration with Rayleigh-Ritz
/// extraction. Iterates stay orthogonal to the constant vector, so the
/// coordinates have zero column mean.
inline KernelPcaResult kernel_pca(const Matrix& x, const KernelPcaOptions& opt = {}) {
  require(x.rows() >= 2, "kernel_pca: need at least two rows");
  require(opt.components >= 1, "kernel_pca: at least one component");
  KernelPcaResult out;
  out.rows = subsample_rows(static_cast<std::size_t>(x.rows()), opt.max_rows, opt.seed);
  const auto m = static_cast<Index>(out.rows.size());
  require(static_cast<std::size_t>(m) > opt.components, "kernel_pca: more components than rows");
  Matrix xs(m, x.cols());
  for (Index i = 0; i < m; ++i) xs.row(i) = x.row(static_cast<Index>(out.rows[static_cast<std::size_t>(i)]));
  require(xs.allFinite(), "kernel_pca: non-finite input");

  const Matrix d2 = squared_distances(xs);
  out.bandwidth = opt.bandwidth > 0.0 ? opt.bandwidth : median_pairwise_distance(d2);
  const Matrix k = (-d2 / (2.0 * out.bandwidth * out.bandwidth)).array().exp().matrix();
  const Matrix kc = double_center(k);

  const auto c = static_cast<Index>(opt.components);
  const Index p = std::min<Index>(c + 8, m - 1);
  const Vector ones = Vector::Constant(m, 1.0 / std::sqrt(static_cast<double>(m)));
  auto orthonormalize = [&](Matrix& q) {
    q -= ones * (ones.transpose() * q);
    Eigen::HouseholderQR<Matrix> qr(q);
    q = qr.householderQ() * Matrix::Identity(m, q.cols());
    q -= ones * (ones.transpose() * q);
  };
  Rng rng(mix_seed(opt.seed, 1));
  Matrix q = standard_normal(m, p, rng);
  orthonormalize(q);
  Matrix ritz_vectors;
  Vector ritz_values;
  bool converged = false;
  std::size_t it = 0;
  for (; it < opt.max_iterations && !converged; ++it) {
    Matrix kq = kc * q;
    // Rayleigh-Ritz on span(q).
    Eigen::SelfAdjointEigenSolver<Matrix> small(q.transpose() * kq);
    ritz_values = small.eigenvalues().reverse();
    ritz_vectors = q * small.eigenvectors().rowwise().reverse();
    const Matrix k_ritz = kq * small.eigenvectors().rowwise().reverse();
    const double scale = std::max(std::abs(ritz_values[0]), 1e-300);
    converged = true;
    for (Index j = 0; j < c; ++j)
      if ((k_ritz.col(j) - ritz_values[j] * ritz_vectors.col(j)).norm() > opt.tolerance * scale) converged = false;
    if (ritz_values[0] <= 1e-300) converged = true;  // centered kernel is zero
    q = kq;
    orthonormalize(q);
  }
  if (!converged)
    throw NumericError("kernel_pca", "kernel_pca: eigensolver did not converge after " +
                                         std::to_string(opt.max_iterations) + " iterations");
  out.iterations.push_back(it);
  out.coordinates.resize(m, c);
  out.eigenvalues.resize(c);
  for (Index j = 0; j < c; ++j) {
    const double lambda = std::max(ritz_values[j], 0.0);
    // One more kernel product: row i then depends on row i of the kernel
    // alone, so duplicate inputs get bit-identical coordinates.
    Vector v = lambda > 0.0 ? Vector(kc * ritz_vectors.col(j) / lambda) : Vector(ritz_vectors.col(j));
    v -= ones * ones.dot(v);
    v.normalize();
    // Sign convention: largest-magnitude entry positive.
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    out.eigenvalues[j] = lambda;
    out.coordinates.col(j) = v * std::sqrt(lambda);
  }
  return out;
}

/// Distance between the two group centroids divided by the mean (over the
/// two groups) of the average distance from a point to its group centroid.
inline double group_separation_score(const Matrix& points, const std::vector<std::uint8_t>& group) {
  require(static_cast<std::size_t>(points.rows()) == group.size(), "separation: one group bit per row");
  Eigen::RowVectorXd centroid[2] = {Eigen::RowVectorXd::Zero(points.cols()), Eigen::RowVectorXd::Zero(points.cols())};
  std::size_t count[2] = {0, 0};
  for (Index i = 0; i < points.rows(); ++i) {
    const int g = group[static_cast<std::size_t>(i)] ? 1 : 0;
    centroid[g] += points.row(i);
    ++count[g];
  }
  require(count[0] > 0 && count[1] > 0, "separation: both groups must be non-empty");
  for (int g = 0; g < 2; ++g) centroid[g] /= static_cast<double>(count[g]);
  double spread[2] = {0.0, 0.0};
  for (Index i = 0; i < points.rows(); ++i) {
    const int g = group[static_cast<std::size_t>(i)] ? 1 : 0;
    spread[g] += (points.row(i) - centroid[g]).norm();
  }
  const double within = 0.5 * (spread[0] / static_cast<double>(count[0]) + spread[1] / static_cast<double>(count[1]));
  require(within > 0.0, "separation: zero within-group spread");
  return (centroid[1] - centroid[0]).norm() / within;
}

}  // namespace dbrf
