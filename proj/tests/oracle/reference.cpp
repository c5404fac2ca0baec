#include "reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

Vec conv2d(const Vec& x, std::size_t c, std::size_t h, std::size_t w, const Vec& k,
           std::size_t out_channels, std::size_t kh, std::size_t kw, std::size_t stride,
           std::size_t pad, std::size_t& oh, std::size_t& ow) {
  oh = (h + 2 * pad - kh) / stride + 1;
  ow = (w + 2 * pad - kw) / stride + 1;
  Vec out(out_channels * oh * ow, 0.0);
  // one kernel tap at a time over the whole output plane
  for (std::size_t o = 0; o < out_channels; ++o)
    for (std::size_t ci = 0; ci < c; ++ci)
      for (std::size_t i = 0; i < kh; ++i)
        for (std::size_t j = 0; j < kw; ++j) {
          const double kv = k[((o * c + ci) * kh + i) * kw + j];
          for (std::size_t y = 0; y < oh; ++y) {
            const long iy = long(y * stride + i) - long(pad);
            if (iy < 0 || iy >= long(h)) continue;
            const double* row = x.data() + (ci * h + std::size_t(iy)) * w;
            double* dst = out.data() + (o * oh + y) * ow;
            // valid xo: 0 <= xo*stride + j - pad < w
            const std::size_t lo = j >= pad ? 0 : (pad - j + stride - 1) / stride;
            const std::size_t hi = std::min(ow, (w + pad - j + stride - 1) / stride);
            for (std::size_t xo = lo; xo < hi; ++xo) dst[xo] += kv * row[xo * stride + j - pad];
          }
        }
  return out;
}

Vec add_channel_bias(Vec x, const Vec& b) {
  const std::size_t plane = x.size() / b.size();
  for (std::size_t c = 0; c < b.size(); ++c)
    for (std::size_t i = 0; i < plane; ++i) x[c * plane + i] += b[c];
  return x;
}

Vec maxpool(const Vec& x, std::size_t c, std::size_t h, std::size_t w, std::size_t wh,
            std::size_t ww, Trace* trace) {
  const std::size_t oh = h / wh, ow = w / ww;
  Vec out(c * oh * ow);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xo = 0; xo < ow; ++xo) {
        std::size_t arg = 0;
        double best = -INFINITY;
        for (std::size_t i = 0; i < wh; ++i)
          for (std::size_t j = 0; j < ww; ++j) {
            const double v = x[(ch * h + y * wh + i) * w + xo * ww + j];
            if (v > best) {
              best = v;
              arg = i * ww + j;
            }
          }
        out[(ch * oh + y) * ow + xo] = best;
        if (trace) trace->pattern.push_back(static_cast<std::int64_t>(arg));
      }
  return out;
}

Vec leaky(const Vec& x, double slope, Trace* trace) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] > 0 ? x[i] : slope * x[i];
    if (trace) trace->pattern.push_back(x[i] > 0);
  }
  return out;
}

Vec global_avg(const Vec& x, std::size_t c, std::size_t h, std::size_t w) {
  Vec out(c, 0.0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < h * w; ++i) out[ch] += x[ch * h * w + i];
    out[ch] /= double(h * w);
  }
  return out;
}

Vec dense(const Vec& x, const Vec& w, const Vec& b, std::size_t m, std::size_t n) {
  Vec out(b);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += w[i * n + j] * x[j];
  return out;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double cosine(const Vec& u, const Vec& r) {
  return dot(u, r) / (std::sqrt(dot(u, u)) * std::sqrt(dot(r, r)));
}

double hinge(double pos, const Vec& negs, double margin, Trace* trace) {
  double total = 0.0;
  for (double n : negs) {
    const double t = margin - pos + n;
    if (trace) trace->pattern.push_back(t > 0);
    total += std::max(0.0, t);
  }
  return total;
}

double softmax_xent(const Vec& logits, std::size_t target) {
  double peak = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double z : logits) s += std::exp(z - peak);
  return -(logits[target] - peak - std::log(s));
}

double sigmoid_xent(double z, double label) {
  const double p = 1.0 / (1.0 + std::exp(-z));
  return -(label * std::log(p) + (1.0 - label) * std::log(1.0 - p));
}

Vec cnn_forward(const CnnWeights& w, const Vec& input, std::size_t h, std::size_t width,
                Trace* trace) {
  Vec x = input;
  std::size_t c = 1;
  for (std::size_t s = 0; s < w.kernels.size(); ++s) {
    std::size_t oh = 0, ow = 0;
    const std::size_t co = w.channels[s];
    x = conv2d(x, c, h, width, w.kernels[s], co, 3, 3, 1, 1, oh, ow);
    x = add_channel_bias(std::move(x), w.biases[s]);
    x = leaky(x, 0.0, trace);
    x = maxpool(x, co, oh, ow, 2, 2, trace);
    c = co;
    h = oh / 2;
    width = ow / 2;
  }
  const Vec pooled = global_avg(x, c, h, width);
  return dense(pooled, w.proj_w, w.proj_b, w.out_dim, c);
}

Vec mean_rows(const Vec& table, std::size_t cols, const std::vector<std::uint32_t>& ids) {
  Vec out(cols, 0.0);
  for (std::uint32_t r : ids)
    for (std::size_t j = 0; j < cols; ++j) out[j] += table[r * cols + j];
  for (double& v : out) v /= double(ids.size());
  return out;
}

Vec user_tower(const std::map<std::string, Vec>& p, const TowerIds& ids, std::size_t lookup_dim,
               std::size_t hidden1, std::size_t hidden2, std::size_t out_dim, double slope,
               Trace* trace) {
  Vec x;
  for (const auto& [name, rows] : {std::pair{"lookup.track", &ids.tracks},
                                   std::pair{"lookup.album", &ids.albums},
                                   std::pair{"lookup.artist", &ids.artists},
                                   std::pair{"lookup.demographic", &ids.demographics}}) {
    const Vec m = mean_rows(p.at(name), lookup_dim, *rows);
    x.insert(x.end(), m.begin(), m.end());
  }
  x = leaky(dense(x, p.at("hidden1.weight"), p.at("hidden1.bias"), hidden1, 4 * lookup_dim), slope,
            trace);
  x = leaky(dense(x, p.at("hidden2.weight"), p.at("hidden2.bias"), hidden2, hidden1), slope, trace);
  return dense(x, p.at("ue.weight"), p.at("ue.bias"), out_dim, hidden2);
}

std::optional<double> central_difference(const Objective& f, Vec theta, std::size_t index,
                                         double step, const Trace* known_base) {
  Trace base, plus, minus;
  if (known_base) {
    base = *known_base;
  } else {
    f(theta, &base);
  }
  const double original = theta[index];
  theta[index] = original + step;
  const double fp = f(theta, &plus);
  theta[index] = original - step;
  const double fm = f(theta, &minus);
  if (plus.pattern != base.pattern || minus.pattern != base.pattern) return std::nullopt;
  return (fp - fm) / (2.0 * step);
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

Eigen jacobi_eigen(Vec a, std::size_t n, double tol) {
  Vec v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  double total = 0.0;
  for (double x : a) total += x * x;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off <= tol * tol * total) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {  // columns p, q
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {  // rows p, q
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p], vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a[x * n + x] > a[y * n + y]; });
  Eigen e;
  for (std::size_t i : order) {
    e.values.push_back(a[i * n + i]);
    Vec col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = v[k * n + i];
    e.vectors.push_back(std::move(col));
  }
  return e;
}

namespace {

double rbf(const Vec& a, const Vec& b, double gamma) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return std::exp(-gamma * d);
}

// argmin ||z - v|| over 0 <= z <= C, y'z = 0
Vec project_dual(const Vec& v, const std::vector<int>& y, double C) {
  auto at = [&](double lambda, Vec* out) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double z = std::clamp(v[i] - lambda * y[i], 0.0, C);
      if (out) (*out)[i] = z;
      s += y[i] * z;
    }
    return s;  // non-increasing in lambda
  };
  double lo = -1.0, hi = 1.0;
  while (at(lo, nullptr) < 0) lo *= 2;
  while (at(hi, nullptr) > 0) hi *= 2;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (at(mid, nullptr) > 0 ? lo : hi) = mid;
  }
  Vec z(v.size());
  at(0.5 * (lo + hi), &z);
  return z;
}

}  // namespace

DualSolution svm_dual_qp(const std::vector<Vec>& x, const std::vector<int>& y, double gamma, double C,
                         std::size_t iterations) {
  const std::size_t n = x.size();
  Vec q(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) q[i * n + j] = y[i] * y[j] * rbf(x[i], x[j], gamma);
  // Lipschitz bound: largest absolute row sum
  double lip = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < n; ++j) r += std::abs(q[i * n + j]);
    lip = std::max(lip, r);
  }
  auto grad = [&](const Vec& a) {
    Vec g(n, -1.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i] += q[i * n + j] * a[j];
    return g;
  };
  Vec a(n, 0.0), z = a;
  double t = 1.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    const Vec g = grad(z);
    Vec step(n);
    for (std::size_t i = 0; i < n; ++i) step[i] = z[i] - g[i] / lip;
    const Vec next = project_dual(step, y, C);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t i = 0; i < n; ++i) z[i] = next[i] + (t - 1.0) / tn * (next[i] - a[i]);
    a = next;
    t = tn;
  }
  DualSolution s;
  s.alpha = a;
  // bias from margin support vectors, y_i f(x_i) = 1
  const Vec g = grad(a);
  double sum = 0.0, lo = -1e300, hi = 1e300;
  std::size_t free_n = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double b_i = -y[i] * g[i];  // y_i - sum_j a_j y_j k_ij
    if (a[i] > 1e-6 * C && a[i] < C * (1 - 1e-6)) {
      sum += b_i;
      ++free_n;
    } else if ((a[i] <= 1e-6 * C) == (y[i] == 1)) {
      lo = std::max(lo, b_i);  // a = 0, y = 1 or a = C, y = -1
    } else {
      hi = std::min(hi, b_i);
    }
  }
  s.bias = free_n ? sum / double(free_n) : 0.5 * (lo + hi);
  return s;
}

double svm_dual_decision(const DualSolution& s, const std::vector<Vec>& x, const std::vector<int>& y,
                         double gamma, const Vec& query) {
  double f = s.bias;
  for (std::size_t j = 0; j < x.size(); ++j) f += s.alpha[j] * y[j] * rbf(x[j], query, gamma);
  return f;
}

}  // namespace oracle
