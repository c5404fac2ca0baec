#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace embrec::transfer {

using Matrix = std::vector<std::vector<double>>;  // one row per sample

// Per-dimension zero mean / unit variance from training statistics. Constant
// dimensions keep scale 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& rows);
  std::vector<double> apply(std::span<const double> row) const;
  Matrix apply(const Matrix& rows) const;
};

struct PcaProjection {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> mean;
  std::vector<double> components;  // out_dim x in_dim, row-major, orthonormal rows
  std::vector<double> variances;   // eigenvalues, non-increasing

  // components * (x - mean); DimensionError on a width mismatch.
  std::vector<double> apply(std::span<const double> x) const;
  Matrix apply(const Matrix& rows) const;
  // mean + components^T * z
  std::vector<double> inverse(std::span<const double> z) const;
};

// Top out_dim eigenvectors of the sample covariance (denominator n - 1). Each
// component's largest-magnitude entry is made positive. ContractError when
// there are fewer samples or dimensions than out_dim.
PcaProjection pca_fit(const Matrix& rows, std::size_t out_dim);

}  // namespace embrec::transfer
