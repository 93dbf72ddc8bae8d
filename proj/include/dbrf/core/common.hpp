#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dbrf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Error hierarchy. Every failure in the library surfaces as one of these.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shape mismatch or out-of-range setting.
struct ConfigError : Error {
  using Error::Error;
};

/// A loss term or gradient became NaN/Inf. `term` names the offender.
struct NumericError : Error {
  NumericError(std::string term_name, const std::string& what)
      : Error(what), term(std::move(term_name)) {}
  std::string term;
};

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

using Rng = std::mt19937_64;

inline Matrix standard_normal(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  return out;
}

inline Matrix uniform01(Index rows, Index cols, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = uniform(rng);
  return out;
}

// SplitMix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline std::span<double> as_span(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<double> as_span(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

inline void collect_tensors(Vector& v, std::vector<std::span<double>>& out) { out.push_back(as_span(v)); }
inline void collect_tensors(Matrix& m, std::vector<std::span<double>>& out) { out.push_back(as_span(m)); }

/// Copy of `params` with every tensor entry set to zero (gradient container).
template <class Params>
Params zeroed_copy(const Params& params) {
  Params out = params;
  std::vector<std::span<double>> views;
  collect_tensors(out, views);
  for (auto s : views) std::fill(s.begin(), s.end(), 0.0);
  return out;
}

}  // namespace dbrf
