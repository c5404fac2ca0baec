#include "embrec/transfer/pca.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "embrec/errors.hpp"

namespace embrec::transfer {

namespace {

std::size_t width_of(const Matrix& rows, const char* what) {
  if (rows.empty()) throw ContractError(std::string(what) + ": no samples");
  const std::size_t d = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != d) throw DimensionError(std::string(what) + ": rows differ in width");
  }
  return d;
}

}  // namespace

Standardizer Standardizer::fit(const Matrix& rows) {
  const std::size_t d = width_of(rows, "standardize");
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j];
  for (double& m : s.mean) m /= double(rows.size());
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) s.scale[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
  for (double& v : s.scale) {
    v = std::sqrt(v / double(rows.size()));
    if (!(v > 1e-12)) v = 1.0;
  }
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> row) const {
  if (row.size() != mean.size()) throw DimensionError("standardize: feature width mismatch");
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean[j]) / scale[j];
  return out;
}

Matrix Standardizer::apply(const Matrix& rows) const {
  Matrix out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(apply(r));
  return out;
}

PcaProjection pca_fit(const Matrix& rows, std::size_t out_dim) {
  const std::size_t d = width_of(rows, "pca_fit");
  const std::size_t n = rows.size();
  if (out_dim == 0) throw ContractError("pca_fit: out_dim must be positive");
  if (n < out_dim || d < out_dim) {
    throw ContractError("pca_fit: need at least " + std::to_string(out_dim) +
                        " samples and dimensions, got " + std::to_string(n) + " x " +
                        std::to_string(d));
  }
  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, j) = rows[i][j];
  const Eigen::RowVectorXd mu = x.colwise().mean();
  x.rowwise() -= mu;
  const Eigen::MatrixXd cov = (x.transpose() * x) / double(n > 1 ? n - 1 : 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw DegenerateInputError("pca_fit: eigensolver failed");

  PcaProjection p;
  p.in_dim = d;
  p.out_dim = out_dim;
  p.mean.assign(mu.data(), mu.data() + d);
  p.components.resize(out_dim * d);
  p.variances.resize(out_dim);
  // eigenvalues come back ascending
  for (std::size_t k = 0; k < out_dim; ++k) {
    const Eigen::Index col = static_cast<Eigen::Index>(d - 1 - k);
    Eigen::VectorXd v = eig.eigenvectors().col(col);
    Eigen::Index peak = 0;
    v.cwiseAbs().maxCoeff(&peak);
    if (v(peak) < 0) v = -v;
    for (std::size_t j = 0; j < d; ++j) p.components[k * d + j] = v(static_cast<Eigen::Index>(j));
    p.variances[k] = std::max(0.0, eig.eigenvalues()(col));
  }
  return p;
}

std::vector<double> PcaProjection::apply(std::span<const double> x) const {
  if (x.size() != in_dim) {
    throw DimensionError("pca_apply: expected " + std::to_string(in_dim) + " features, got " +
                         std::to_string(x.size()));
  }
  std::vector<double> z(out_dim, 0.0);
  for (std::size_t k = 0; k < out_dim; ++k) {
    const double* c = components.data() + k * in_dim;
    double s = 0.0;
    for (std::size_t j = 0; j < in_dim; ++j) s += c[j] * (x[j] - mean[j]);
    z[k] = s;
  }
  return z;
}

Matrix PcaProjection::apply(const Matrix& rows) const {
  Matrix out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(apply(r));
  return out;
}

std::vector<double> PcaProjection::inverse(std::span<const double> z) const {
  if (z.size() != out_dim) throw DimensionError("pca_inverse: width mismatch");
  std::vector<double> x = mean;
  for (std::size_t k = 0; k < out_dim; ++k)
    for (std::size_t j = 0; j < in_dim; ++j) x[j] += components[k * in_dim + j] * z[k];
  return x;
}

}  // namespace embrec::transfer
