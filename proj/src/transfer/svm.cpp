#include "embrec/transfer/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "embrec/errors.hpp"
#include "embrec/parallel.hpp"

namespace embrec::transfer {

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d2 += t * t;
  }
  return std::exp(-gamma * d2);
}

double BinarySvm::decision(std::span<const double> x) const {
  if (!support.empty() && x.size() != support.front().size()) {
    throw DimensionError("svm: feature width mismatch");
  }
  double f = -rho;
  for (std::size_t i = 0; i < support.size(); ++i) f += coef[i] * rbf_kernel(support[i], x, gamma);
  return f;
}

BinarySvm train_binary_svm(const Matrix& x, std::span<const int> y, const SvmParams& params) {
  const std::size_t n = x.size();
  if (n != y.size()) throw DimensionError("svm: sample and label counts differ");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1) pos = true;
    else if (v == -1) neg = true;
    else throw ContractError("svm: binary labels must be +1 or -1");
  }
  if (!pos || !neg) throw ContractError("svm: binary problem needs both labels");
  if (!(params.C > 0.0) || !(params.gamma > 0.0)) throw ContractError("svm: C and gamma must be positive");

  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    k[i * n + i] = 1.0;
    for (std::size_t j = 0; j < i; ++j) k[i * n + j] = k[j * n + i] = rbf_kernel(x[i], x[j], params.gamma);
  }
  const double C = params.C;
  std::vector<double> a(n, 0.0), g(n, -1.0);  // g = Q a - e
  auto upper = [&](std::size_t t) { return a[t] >= C; };
  auto lower = [&](std::size_t t) { return a[t] <= 0.0; };
  auto q = [&](std::size_t i, std::size_t j) { return double(y[i] * y[j]) * k[i * n + j]; };

  BinarySvm out;
  out.gamma = params.gamma;
  std::size_t iter = 0;
  for (; iter < params.max_iterations; ++iter) {
    double gmax = -kInf;
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] == 1) {
        if (!upper(t) && -g[t] >= gmax) gmax = -g[t], i = t;
      } else if (!lower(t) && g[t] >= gmax) {
        gmax = g[t], i = t;
      }
    }
    double gmax2 = -kInf, best = kInf;
    std::size_t j = n;
    for (std::size_t t = 0; t < n && i < n; ++t) {
      double diff, quad;
      if (y[t] == 1) {
        if (lower(t)) continue;
        gmax2 = std::max(gmax2, g[t]);
        diff = gmax + g[t];
        quad = 2.0 - 2.0 * y[i] * q(i, t);
      } else {
        if (upper(t)) continue;
        gmax2 = std::max(gmax2, -g[t]);
        diff = gmax - g[t];
        quad = 2.0 + 2.0 * y[i] * q(i, t);
      }
      if (diff > 0.0) {
        const double obj = -(diff * diff) / std::max(quad, kTau);
        if (obj <= best) best = obj, j = t;
      }
    }
    out.kkt_gap = gmax + gmax2;
    if (i == n || j == n || gmax + gmax2 < params.tolerance) break;

    const double ai = a[i], aj = a[j];
    if (y[i] != y[j]) {
      const double quad = std::max(2.0 + 2.0 * q(i, j), kTau);
      const double delta = (-g[i] - g[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0) {
        if (a[j] < 0) a[j] = 0, a[i] = diff;
      } else if (a[i] < 0) {
        a[i] = 0, a[j] = -diff;
      }
      if (diff > 0) {
        if (a[i] > C) a[i] = C, a[j] = C - diff;
      } else if (a[j] > C) {
        a[j] = C, a[i] = C + diff;
      }
    } else {
      const double quad = std::max(2.0 - 2.0 * q(i, j), kTau);
      const double delta = (g[i] - g[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > C) {
        if (a[i] > C) a[i] = C, a[j] = sum - C;
        if (a[j] > C) a[j] = C, a[i] = sum - C;
      } else {
        if (a[j] < 0) a[j] = 0, a[i] = sum;
        if (a[i] < 0) a[i] = 0, a[j] = sum;
      }
    }
    const double di = a[i] - ai, dj = a[j] - aj;
    for (std::size_t t = 0; t < n; ++t) g[t] += q(i, t) * di + q(j, t) * dj;
  }
  out.iterations = iter;
  if (iter == params.max_iterations) {
    throw DegenerateInputError("svm: SMO did not reach KKT tolerance in " +
                               std::to_string(iter) + " iterations");
  }

  double ub = kInf, lb = -kInf, free_sum = 0.0;
  std::size_t free_n = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * g[t];
    if (upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++free_n;
      free_sum += yg;
    }
  }
  out.rho = free_n > 0 ? free_sum / double(free_n) : 0.5 * (ub + lb);
  out.alpha = a;
  for (std::size_t t = 0; t < n; ++t) {
    if (a[t] > 0.0) {
      out.support.push_back(x[t]);
      out.coef.push_back(a[t] * y[t]);
    }
  }
  return out;
}

SvmModel svm_fit(const Matrix& x, std::span<const int> labels, const SvmParams& params) {
  if (x.size() != labels.size()) throw DimensionError("svm_fit: sample and label counts differ");
  if (x.empty()) throw ContractError("svm_fit: no samples");
  SvmModel m;
  m.params = params;
  m.dim = x.front().size();
  for (const auto& r : x) {
    if (r.size() != m.dim) throw DimensionError("svm_fit: rows differ in width");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  if (by_class.size() < 2) throw ContractError("svm_fit: at least two classes required");
  for (const auto& [c, rows] : by_class) m.classes.push_back(c);
  for (std::size_t a = 0; a < m.classes.size(); ++a)
    for (std::size_t b = a + 1; b < m.classes.size(); ++b) m.pairs.emplace_back(a, b);

  m.machines.resize(m.pairs.size());
  parallel_for(m.pairs.size(), [&](std::size_t p) {
    const auto [a, b] = m.pairs[p];
    Matrix sub;
    std::vector<int> y;
    for (std::size_t i : by_class.at(m.classes[a])) sub.push_back(x[i]), y.push_back(1);
    for (std::size_t i : by_class.at(m.classes[b])) sub.push_back(x[i]), y.push_back(-1);
    m.machines[p] = train_binary_svm(sub, y, params);
  });
  return m;
}

int svm_predict(const SvmModel& model, std::span<const double> x) {
  if (x.size() != model.dim) {
    throw DimensionError("svm_predict: expected " + std::to_string(model.dim) + " features, got " +
                         std::to_string(x.size()));
  }
  // votes in halves; a machine whose decision is within the solver tolerance
  // of zero cannot call the pair and splits its vote
  std::vector<int> votes(model.classes.size(), 0);
  for (std::size_t p = 0; p < model.pairs.size(); ++p) {
    const auto [a, b] = model.pairs[p];
    const double f = model.machines[p].decision(x);
    if (std::abs(f) <= model.params.tolerance) {
      ++votes[a];
      ++votes[b];
    } else {
      votes[f > 0.0 ? a : b] += 2;
    }
  }
  // max_element keeps the first maximum, i.e. the lowest class id
  return model.classes[std::size_t(std::max_element(votes.begin(), votes.end()) - votes.begin())];
}

}  // namespace embrec::transfer
