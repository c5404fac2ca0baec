#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "embrec/transfer/pca.hpp"

namespace embrec::transfer {

struct SvmParams {
  double gamma = 1.0 / 128.0;
  double C = 1.0;
  double tolerance = 1e-3;  // maximal KKT violation at exit
  std::size_t max_iterations = 10'000'000;
};

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

// Binary soft-margin machine, labels +1/-1. f(x) = sum_i coef_i k(sv_i, x) - rho.
struct BinarySvm {
  Matrix support;
  std::vector<double> coef;  // alpha_i * y_i for alpha_i > 0
  double rho = 0.0;
  double gamma = 1.0 / 128.0;
  std::vector<double> alpha;  // full dual vector, in input order
  std::size_t iterations = 0;
  double kkt_gap = 0.0;  // m(alpha) - M(alpha) at exit

  double decision(std::span<const double> x) const;
};

// SMO with second-order working-set selection on a precomputed kernel.
BinarySvm train_binary_svm(const Matrix& x, std::span<const int> y, const SvmParams& params);

struct SvmModel {
  SvmParams params;
  std::size_t dim = 0;
  std::vector<int> classes;  // ascending
  // machines[k] separates classes[a] (+1) from classes[b] (-1), pairs ordered (0,1),(0,2)...
  std::vector<BinarySvm> machines;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

// One-vs-one; binary problems are fitted in parallel.
SvmModel svm_fit(const Matrix& x, std::span<const int> labels, const SvmParams& params = {});

// Majority vote over pairwise machines; a machine with |f| <= tolerance splits
// its vote. Ties go to the lowest class id.
int svm_predict(const SvmModel& model, std::span<const double> x);

}  // namespace embrec::transfer
