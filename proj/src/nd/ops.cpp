#include "embrec/nd/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "embrec/errors.hpp"
#include "embrec/nd/linalg.hpp"
#include "embrec/simd/kernels.hpp"

namespace embrec::nd {
namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " +
                         std::to_string(rank) + ", got " + to_string(t.shape()));
  }
}

void im2col(const float* x, std::size_t channels, std::size_t h, std::size_t w,
            std::size_t kh, std::size_t kw, std::size_t stride, std::size_t pad,
            std::size_t oh, std::size_t ow, float* col) {
  const std::size_t plane = oh * ow;
  for (std::size_t c = 0; c < channels; ++c) {
    const float* xc = x + c * h * w;
    for (std::size_t i = 0; i < kh; ++i) {
      for (std::size_t j = 0; j < kw; ++j) {
        float* row = col + ((c * kh + i) * kw + j) * plane;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * stride + i) -
                          static_cast<std::ptrdiff_t>(pad);
          float* dst = row + oy * ow;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
            std::fill(dst, dst + ow, 0.0f);
            continue;
          }
          const float* src = xc + static_cast<std::size_t>(iy) * w;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + j) -
                            static_cast<std::ptrdiff_t>(pad);
            dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w))
                          ? 0.0f
                          : src[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

void col2im_add(const float* col, std::size_t channels, std::size_t h, std::size_t w,
                std::size_t kh, std::size_t kw, std::size_t stride, std::size_t pad,
                std::size_t oh, std::size_t ow, float* x) {
  const std::size_t plane = oh * ow;
  for (std::size_t c = 0; c < channels; ++c) {
    float* xc = x + c * h * w;
    for (std::size_t i = 0; i < kh; ++i) {
      for (std::size_t j = 0; j < kw; ++j) {
        const float* row = col + ((c * kh + i) * kw + j) * plane;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * stride + i) -
                          static_cast<std::ptrdiff_t>(pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          float* dst = xc + static_cast<std::size_t>(iy) * w;
          const float* src = row + oy * ow;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + j) -
                            static_cast<std::ptrdiff_t>(pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(w)) {
              dst[static_cast<std::size_t>(ix)] += src[ox];
            }
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(Var input, Var kernel, std::size_t stride, std::size_t padding) {
  const Tensor& x = input.value();
  const Tensor& k = kernel.value();
  require_rank(x, 3, "conv2d", "input");
  require_rank(k, 4, "conv2d", "kernel");
  if (stride == 0) throw ContractError("conv2d: stride must be >= 1");
  const std::size_t cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t cout = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  if (k.dim(1) != cin) {
    throw DimensionError("conv2d: kernel expects " + std::to_string(k.dim(1)) +
                         " input channels, input has " + std::to_string(cin));
  }
  if (kh > h + 2 * padding || kw > w + 2 * padding) {
    throw DimensionError("conv2d: kernel " + to_string(k.shape()) +
                         " larger than padded input " + to_string(x.shape()));
  }
  const std::size_t oh = (h + 2 * padding - kh) / stride + 1;
  const std::size_t ow = (w + 2 * padding - kw) / stride + 1;
  const std::size_t depth = cin * kh * kw;
  const std::size_t plane = oh * ow;

  std::vector<float> col(depth * plane);
  im2col(x.data(), cin, h, w, kh, kw, stride, padding, oh, ow, col.data());
  Tensor out({cout, oh, ow});
  gemm(Trans::no, Trans::no, cout, plane, depth, k.data(), col.data(), out.data(), false);

  return input.graph().record(
      std::move(out), {input, kernel},
      [=, col = std::move(col)](Graph& g, const Tensor& dy) {
        if (g.needs_grad(kernel)) {
          // dk[o, :] += col . dy[o, :], one long contiguous dot per tap
          Tensor& dk = g.accumulate(kernel);
          std::vector<float> row(depth);
          for (std::size_t o = 0; o < cout; ++o) {
            simd::active().dot_rows(col.data(), depth, plane, dy.data() + o * plane, plane,
                                    row.data());
            for (std::size_t p = 0; p < depth; ++p) dk[o * depth + p] += row[p];
          }
        }
        if (g.needs_grad(input)) {
          std::vector<float> dcol(depth * plane);
          gemm(Trans::yes, Trans::no, depth, plane, cout, kernel.value().data(), dy.data(),
               dcol.data(), false);
          col2im_add(dcol.data(), cin, h, w, kh, kw, stride, padding, oh, ow,
                     g.accumulate(input).data());
        }
      });
}

Var add_channel_bias(Var input, Var bias) {
  const Tensor& x = input.value();
  const Tensor& b = bias.value();
  require_rank(b, 1, "add_channel_bias", "bias");
  if (x.rank() < 1 || x.dim(0) != b.dim(0)) {
    throw DimensionError("add_channel_bias: bias " + to_string(b.shape()) +
                         " does not match input " + to_string(x.shape()));
  }
  const std::size_t channels = b.dim(0);
  const std::size_t plane = x.size() / channels;
  Tensor out = x;
  for (std::size_t c = 0; c < channels; ++c) {
    float* row = out.data() + c * plane;
    const float bc = b[c];
    for (std::size_t i = 0; i < plane; ++i) row[i] += bc;
  }
  return input.graph().record(std::move(out), {input, bias},
                              [=](Graph& g, const Tensor& dy) {
                                if (g.needs_grad(input)) {
                                  simd::active().axpy(1.0f, dy.data(), g.accumulate(input).data(),
                                                      dy.size());
                                }
                                if (g.needs_grad(bias)) {
                                  Tensor& db = g.accumulate(bias);
                                  for (std::size_t c = 0; c < channels; ++c) {
                                    float s = 0.0f;
                                    const float* row = dy.data() + c * plane;
                                    for (std::size_t i = 0; i < plane; ++i) s += row[i];
                                    db[c] += s;
                                  }
                                }
                              });
}

Var maxpool2d(Var input, PoolWindow window) {
  const Tensor& x = input.value();
  require_rank(x, 3, "maxpool2d", "input");
  const std::size_t channels = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (window.height == 0 || window.width == 0) {
    throw ContractError("maxpool2d: window must be positive");
  }
  if (window.height > h || window.width > w) {
    throw DimensionError("maxpool2d: window larger than input " + to_string(x.shape()));
  }
  const std::size_t oh = h / window.height;
  const std::size_t ow = w / window.width;
  Tensor out({channels, oh, ow});
  std::vector<std::uint32_t> argmax(out.size());
  for (std::size_t c = 0; c < channels; ++c) {
    const float* xc = x.data() + c * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = (oy * window.height) * w + ox * window.width;
        float best_value = xc[best];
        for (std::size_t i = 0; i < window.height; ++i) {
          const std::size_t row = (oy * window.height + i) * w + ox * window.width;
          for (std::size_t j = 0; j < window.width; ++j) {
            if (xc[row + j] > best_value) {
              best_value = xc[row + j];
              best = row + j;
            }
          }
        }
        const std::size_t o = (c * oh + oy) * ow + ox;
        out[o] = best_value;
        argmax[o] = static_cast<std::uint32_t>(c * h * w + best);
      }
    }
  }
  return input.graph().record(std::move(out), {input},
                              [=, argmax = std::move(argmax)](Graph& g, const Tensor& dy) {
                                Tensor& dx = g.accumulate(input);
                                for (std::size_t o = 0; o < argmax.size(); ++o) {
                                  dx[argmax[o]] += dy[o];
                                }
                              });
}

Var global_avg_pool(Var input) {
  const Tensor& x = input.value();
  require_rank(x, 3, "global_avg_pool", "input");
  const std::size_t channels = x.dim(0);
  const std::size_t plane = x.dim(1) * x.dim(2);
  const float inv = 1.0f / static_cast<float>(plane);
  Tensor out({channels});
  for (std::size_t c = 0; c < channels; ++c) {
    const float* row = x.data() + c * plane;
    float s = 0.0f;
    for (std::size_t i = 0; i < plane; ++i) s += row[i];
    out[c] = s * inv;
  }
  return input.graph().record(std::move(out), {input}, [=](Graph& g, const Tensor& dy) {
    Tensor& dx = g.accumulate(input);
    for (std::size_t c = 0; c < channels; ++c) {
      float* row = dx.data() + c * plane;
      const float v = dy[c] * inv;
      for (std::size_t i = 0; i < plane; ++i) row[i] += v;
    }
  });
}

Var dense(Var input, Var weight, Var bias) {
  const Tensor& x = input.value();
  const Tensor& wt = weight.value();
  const Tensor& b = bias.value();
  require_rank(x, 1, "dense", "input");
  require_rank(wt, 2, "dense", "weight");
  require_rank(b, 1, "dense", "bias");
  const std::size_t m = wt.dim(0), n = wt.dim(1);
  if (x.dim(0) != n || b.dim(0) != m) {
    throw DimensionError("dense: weight " + to_string(wt.shape()) + ", input " +
                         to_string(x.shape()) + ", bias " + to_string(b.shape()));
  }
  Tensor out = b;
  out.set_requires_grad(false);
  const auto& kernels = simd::active();
  for (std::size_t i = 0; i < m; ++i) out[i] += kernels.dot(wt.data() + i * n, x.data(), n);
  return input.graph().record(std::move(out), {input, weight, bias},
                              [=](Graph& g, const Tensor& dy) {
                                const auto& k = simd::active();
                                if (g.needs_grad(weight)) {
                                  Tensor& dw = g.accumulate(weight);
                                  const float* xv = input.value().data();
                                  for (std::size_t i = 0; i < m; ++i) {
                                    if (dy[i] != 0.0f) k.axpy(dy[i], xv, dw.data() + i * n, n);
                                  }
                                }
                                if (g.needs_grad(input)) {
                                  Tensor& dx = g.accumulate(input);
                                  const float* wv = weight.value().data();
                                  for (std::size_t i = 0; i < m; ++i) {
                                    if (dy[i] != 0.0f) k.axpy(dy[i], wv + i * n, dx.data(), n);
                                  }
                                }
                                if (g.needs_grad(bias)) {
                                  k.axpy(1.0f, dy.data(), g.accumulate(bias).data(), m);
                                }
                              });
}

Var activation(Var input, Activation kind) {
  const Tensor& x = input.value();
  const float slope = kind.kind == ActivationKind::relu ? 0.0f : kind.slope;
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const float v = x[i];
    out[i] = v > 0.0f ? v : slope * v;
  }
  return input.graph().record(std::move(out), {input}, [=](Graph& g, const Tensor& dy) {
    Tensor& dx = g.accumulate(input);
    const Tensor& xv = input.value();
    for (std::size_t i = 0; i < dy.size(); ++i) {
      dx[i] += xv[i] > 0.0f ? dy[i] : slope * dy[i];
    }
  });
}

Var cosine_similarity(Var u, Var r) {
  const Tensor& a = u.value();
  const Tensor& b = r.value();
  if (a.size() != b.size()) {
    throw DimensionError("cosine_similarity: sizes " + to_string(a.shape()) + " and " +
                         to_string(b.shape()));
  }
  double dot = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    aa += static_cast<double>(a[i]) * a[i];
    bb += static_cast<double>(b[i]) * b[i];
  }
  if (!(aa > 0.0) || !(bb > 0.0)) {
    throw DegenerateInputError("cosine_similarity: zero-norm embedding");
  }
  const double na = std::sqrt(aa), nb = std::sqrt(bb);
  const double cos = std::clamp(dot / (na * nb), -1.0, 1.0);
  return u.graph().record(
      Tensor::scalar(static_cast<float>(cos)), {u, r}, [=](Graph& g, const Tensor& dy) {
        const double scale = dy[0];
        const Tensor& av = u.value();
        const Tensor& bv = r.value();
        if (g.needs_grad(u)) {
          Tensor& du = g.accumulate(u);
          for (std::size_t i = 0; i < av.size(); ++i) {
            du[i] += static_cast<float>(scale * (bv[i] / (na * nb) - cos * av[i] / aa));
          }
        }
        if (g.needs_grad(r)) {
          Tensor& dr = g.accumulate(r);
          for (std::size_t i = 0; i < bv.size(); ++i) {
            dr[i] += static_cast<float>(scale * (av[i] / (na * nb) - cos * bv[i] / bb));
          }
        }
      });
}

Var sum(Var input) {
  const Tensor& x = input.value();
  double s = 0.0;
  for (float v : x.values()) s += v;
  return input.graph().record(Tensor::scalar(static_cast<float>(s)), {input},
                              [=](Graph& g, const Tensor& dy) {
                                Tensor& dx = g.accumulate(input);
                                for (float& v : dx.values()) v += dy[0];
                              });
}

Var reshape(Var input, Shape shape) {
  const Tensor& x = input.value();
  if (element_count(shape) != x.size()) {
    throw DimensionError("reshape: " + to_string(x.shape()) + " to " + to_string(shape));
  }
  Tensor out(std::move(shape), std::vector<float>(x.values().begin(), x.values().end()));
  return input.graph().record(std::move(out), {input}, [=](Graph& g, const Tensor& dy) {
    simd::active().axpy(1.0f, dy.data(), g.accumulate(input).data(), dy.size());
  });
}

Var embedding_mean(Var table, std::span<const std::uint32_t> ids) {
  const Tensor& t = table.value();
  require_rank(t, 2, "embedding_mean", "table");
  const std::size_t rows = t.dim(0), d = t.dim(1);
  for (std::uint32_t id : ids) {
    if (id >= rows) {
      throw DimensionError("embedding_mean: row " + std::to_string(id) + " outside table of " +
                           std::to_string(rows) + " rows");
    }
  }
  Tensor out({d});
  const float inv = ids.empty() ? 0.0f : 1.0f / static_cast<float>(ids.size());
  for (std::uint32_t id : ids) simd::active().axpy(1.0f, t.data() + id * d, out.data(), d);
  for (float& v : out.values()) v *= inv;
  std::vector<std::uint32_t> kept(ids.begin(), ids.end());
  return table.graph().record(std::move(out), {table},
                              [=, kept = std::move(kept)](Graph& g, const Tensor& dy) {
                                Tensor& dt = g.accumulate(table);
                                for (std::uint32_t id : kept) {
                                  simd::active().axpy(inv, dy.data(), dt.data() + id * d, d);
                                }
                              });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_rank(p.value(), 1, "concat", "part");
    total += p.value().size();
  }
  Tensor out({total});
  std::vector<std::size_t> offsets;
  std::size_t at = 0;
  for (const Var& p : parts) {
    offsets.push_back(at);
    std::copy(p.value().data(), p.value().data() + p.value().size(), out.data() + at);
    at += p.value().size();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts.front().graph().record(
      std::move(out), inputs, [=](Graph& g, const Tensor& dy) {
        for (std::size_t i = 0; i < inputs.size(); ++i) {
          if (!g.needs_grad(inputs[i])) continue;
          Tensor& dp = g.accumulate(inputs[i]);
          for (std::size_t j = 0; j < dp.size(); ++j) dp[j] += dy[offsets[i] + j];
        }
      });
}

Var stack(std::span<const Var> scalars) {
  if (scalars.empty()) throw ContractError("stack: no inputs");
  Tensor out({scalars.size()});
  for (std::size_t i = 0; i < scalars.size(); ++i) out[i] = scalars[i].value().item();
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return scalars.front().graph().record(std::move(out), inputs,
                                        [=](Graph& g, const Tensor& dy) {
                                          for (std::size_t i = 0; i < inputs.size(); ++i) {
                                            if (g.needs_grad(inputs[i])) {
                                              g.accumulate(inputs[i])[0] += dy[i];
                                            }
                                          }
                                        });
}

Var gather_dot(Var table, std::span<const std::uint32_t> ids, Var query) {
  const Tensor& t = table.value();
  const Tensor& q = query.value();
  require_rank(t, 2, "gather_dot", "table");
  const std::size_t rows = t.dim(0), d = t.dim(1);
  if (q.size() != d) {
    throw DimensionError("gather_dot: query " + to_string(q.shape()) + " vs table " +
                         to_string(t.shape()));
  }
  if (ids.empty()) throw ContractError("gather_dot: empty id list");
  Tensor out({ids.size()});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= rows) {
      throw DimensionError("gather_dot: row " + std::to_string(ids[i]) + " out of range");
    }
    out[i] = simd::active().dot(t.data() + ids[i] * d, q.data(), d);
  }
  std::vector<std::uint32_t> kept(ids.begin(), ids.end());
  return table.graph().record(std::move(out), {table, query},
                              [=, kept = std::move(kept)](Graph& g, const Tensor& dy) {
                                const auto& k = simd::active();
                                const Tensor& tv = table.value();
                                const Tensor& qv = query.value();
                                if (g.needs_grad(table)) {
                                  Tensor& dt = g.accumulate(table);
                                  for (std::size_t i = 0; i < kept.size(); ++i) {
                                    k.axpy(dy[i], qv.data(), dt.data() + kept[i] * d, d);
                                  }
                                }
                                if (g.needs_grad(query)) {
                                  Tensor& dq = g.accumulate(query);
                                  for (std::size_t i = 0; i < kept.size(); ++i) {
                                    k.axpy(dy[i], tv.data() + kept[i] * d, dq.data(), d);
                                  }
                                }
                              });
}

Var softmax_cross_entropy(Var logits, std::size_t target) {
  const Tensor& z = logits.value();
  require_rank(z, 1, "softmax_cross_entropy", "logits");
  if (target >= z.size()) throw ContractError("softmax_cross_entropy: target out of range");
  double peak = -std::numeric_limits<double>::infinity();
  for (float v : z.values()) peak = std::max(peak, static_cast<double>(v));
  double rest = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (i != target) rest += std::exp(z[i] - peak);
  }
  const double shift = z[target] - peak;
  // log(sum exp(z - peak)) written so that a dominant target keeps full precision.
  const double loss = -shift + std::log1p(std::expm1(shift) + rest);
  const double total = std::exp(shift) + rest;
  std::vector<double> prob(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) prob[i] = std::exp(z[i] - peak) / total;
  return logits.graph().record(Tensor::scalar(static_cast<float>(loss)), {logits},
                               [=, prob = std::move(prob)](Graph& g, const Tensor& dy) {
                                 Tensor& dz = g.accumulate(logits);
                                 for (std::size_t i = 0; i < prob.size(); ++i) {
                                   const double p = prob[i] - (i == target ? 1.0 : 0.0);
                                   dz[i] += static_cast<float>(dy[0] * p);
                                 }
                               });
}

Var margin_ranking(Var positive, Var negatives, float margin) {
  const Tensor& pos = positive.value();
  const Tensor& neg = negatives.value();
  if (pos.size() != 1) throw DimensionError("margin_ranking: positive must be a scalar");
  if (neg.size() == 0) throw ContractError("margin_ranking: no negatives");
  double loss = 0.0;
  std::vector<std::uint8_t> active(neg.size());
  for (std::size_t i = 0; i < neg.size(); ++i) {
    const double term = static_cast<double>(margin) - pos[0] + static_cast<double>(neg[i]);
    if (term > 0.0) {
      loss += term;
      active[i] = 1;
    }
  }
  return positive.graph().record(
      Tensor::scalar(static_cast<float>(loss)), {positive, negatives},
      [=, active = std::move(active)](Graph& g, const Tensor& dy) {
        std::size_t count = 0;
        for (auto a : active) count += a;
        if (g.needs_grad(positive)) g.accumulate(positive)[0] -= dy[0] * static_cast<float>(count);
        if (g.needs_grad(negatives)) {
          Tensor& dn = g.accumulate(negatives);
          for (std::size_t i = 0; i < active.size(); ++i) {
            if (active[i]) dn[i] += dy[0];
          }
        }
      });
}

Var sigmoid_cross_entropy(Var logit, float label) {
  const Tensor& z = logit.value();
  if (z.size() != 1) throw DimensionError("sigmoid_cross_entropy: logit must be a scalar");
  if (label != 0.0f && label != 1.0f) {
    throw ContractError("sigmoid_cross_entropy: label must be 0 or 1");
  }
  const double x = z[0];
  // softplus(x) - label * x, stable for both signs
  const double softplus = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  const double loss = softplus - label * x;
  const double sig = 1.0 / (1.0 + std::exp(-x));
  return logit.graph().record(Tensor::scalar(static_cast<float>(loss)), {logit},
                              [=](Graph& g, const Tensor& dy) {
                                g.accumulate(logit)[0] += static_cast<float>(dy[0] * (sig - label));
                              });
}

}  // namespace embrec::nd
