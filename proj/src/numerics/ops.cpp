#include "hyperinv/numerics/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <spdlog/spdlog.h>
#include <string>

#include "hyperinv/errors.hpp"

namespace hyperinv {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()) + " differ");
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                         ", got " + shape_to_string(t.shape()));
  }
}

std::span<double> grad_of(const Tensor& t) { return t.node()->grad_buffer(); }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  const auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [a, b](std::span<const double> g) {
    for (const Tensor* t : {&a, &b}) {
      if (!t->requires_grad()) continue;
      auto dst = grad_of(*t);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  const auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [a, b](std::span<const double> g) {
    if (a.requires_grad()) {
      auto dst = grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }
    if (b.requires_grad()) {
      auto dst = grad_of(b);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] -= g[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  const auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [a, b](std::span<const double> g) {
    if (a.requires_grad()) {
      auto dst = grad_of(a);
      const auto y = b.data();
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * y[i];
    }
    if (b.requires_grad()) {
      auto dst = grad_of(b);
      const auto x = a.data();
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * x[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= factor;
  return Tensor::make_result(a.shape(), std::move(out), {a}, [a, factor](std::span<const double> g) {
    auto dst = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * factor;
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return Tensor::make_result(Shape{}, {s}, {a}, [a](std::span<const double> g) {
    auto dst = grad_of(a);
    for (auto& d : dst) d += g[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw ContractError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor average(const std::vector<Tensor>& items) {
  if (items.empty()) throw ContractError("average of zero tensors");
  if (items.size() == 1) return items.front();
  Tensor acc = items.front();
  for (std::size_t i = 1; i < items.size(); ++i) acc = add(acc, items[i]);
  return scale(acc, 1.0 / static_cast<double>(items.size()));
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return Tensor::make_result(x.shape(), std::move(out), {x}, [x](std::span<const double> g) {
    auto dst = grad_of(x);
    const auto in = x.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (in[i] > 0.0) dst[i] += g[i];
    }
  });
}

Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x.numel());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-in[i]));
  auto saved = out;
  return Tensor::make_result(x.shape(), std::move(out), {x},
                             [x, s = std::move(saved)](std::span<const double> g) {
                               auto dst = grad_of(x);
                               for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * s[i] * (1.0 - s[i]);
                             });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (auto& v : out) v = std::clamp(v, lo, hi);
  return Tensor::make_result(x.shape(), std::move(out), {x}, [x, lo, hi](std::span<const double> g) {
    auto dst = grad_of(x);
    const auto in = x.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (in[i] >= lo && in[i] <= hi) dst[i] += g[i];
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_to_string(x.shape()) + " as " +
                         shape_to_string(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return Tensor::make_result(std::move(shape), std::move(out), {x}, [x](std::span<const double> g) {
    auto dst = grad_of(x);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  });
}

Tensor flatten(const Tensor& x) {
  if (x.rank() < 1) throw DimensionError("flatten: scalar input");
  const std::size_t batch = x.dim(0);
  return reshape(x, Shape{batch, batch == 0 ? 0 : x.numel() / batch});
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul", "lhs");
  require_rank(b, 2, "matmul", "rhs");
  if (a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()));
  }
  const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  MapMat(out.data(), m, n).noalias() =
      ConstMapMat(a.data().data(), m, k) * ConstMapMat(b.data().data(), k, n);
  return Tensor::make_result(Shape{m, n}, std::move(out), {a, b}, [a, b, m, k, n](std::span<const double> g) {
    ConstMapMat gm(g.data(), m, n);
    if (a.requires_grad()) {
      MapMat(grad_of(a).data(), m, k).noalias() += gm * ConstMapMat(b.data().data(), k, n).transpose();
    }
    if (b.requires_grad()) {
      MapMat(grad_of(b).data(), k, n).noalias() += ConstMapMat(a.data().data(), m, k).transpose() * gm;
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "linear", "input");
  require_rank(weight, 2, "linear", "weight");
  if (x.dim(1) != weight.dim(0)) {
    throw DimensionError("linear: input " + shape_to_string(x.shape()) + " incompatible with weight " +
                         shape_to_string(weight.shape()));
  }
  Tensor out = matmul(x, weight);
  if (!bias.defined()) return out;
  const auto rows = out.dim(0), cols = out.dim(1);
  if (bias.numel() != cols) {
    throw DimensionError("linear: bias " + shape_to_string(bias.shape()) + " does not match " +
                         std::to_string(cols) + " outputs");
  }
  std::vector<double> values(out.data().begin(), out.data().end());
  const auto bv = bias.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) values[r * cols + c] += bv[c];
  return Tensor::make_result(out.shape(), std::move(values), {out, bias},
                             [out, bias, rows, cols](std::span<const double> g) {
                               if (out.requires_grad()) {
                                 auto dst = grad_of(out);
                                 for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
                               }
                               if (bias.requires_grad()) {
                                 auto dst = grad_of(bias);
                                 for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t c = 0; c < cols; ++c) dst[c] += g[r * cols + c];
                               }
                             });
}

namespace {

struct ConvGeometry {
  std::size_t batch, channels, height, width;
  std::size_t filters, kh, kw, stride, padding;
  std::size_t out_h, out_w;

  std::size_t patch() const { return channels * kh * kw; }
  std::size_t positions() const { return out_h * out_w; }
};

// Images per im2col block; bounds scratch memory for large batches.
constexpr std::size_t kConvBlock = 8;

// Output columns [lo, hi) whose input column ox*stride + k - padding lies inside [0, extent).
std::pair<std::size_t, std::size_t> valid_range(std::size_t k, std::size_t stride, std::size_t padding,
                                                std::size_t extent, std::size_t out) {
  std::size_t lo = 0;
  if (padding > k) lo = (padding - k + stride - 1) / stride;
  std::size_t hi = 0;
  if (extent + padding > k) hi = std::min(out, (extent + padding - k - 1) / stride + 1);
  return {std::min(lo, hi), hi};
}

// cols[p][j*Q + q] for images first..first+count of the batch.
void im2col(const ConvGeometry& g, const double* input, std::size_t first, std::size_t count,
            std::vector<double>& cols) {
  const std::size_t q_total = g.positions();
  const std::size_t width = count * q_total;
  cols.assign(g.patch() * width, 0.0);
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      const auto [oy_lo, oy_hi] = valid_range(ky, g.stride, g.padding, g.height, g.out_h);
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const auto [ox_lo, ox_hi] = valid_range(kx, g.stride, g.padding, g.width, g.out_w);
        double* row = cols.data() + ((c * g.kh + ky) * g.kw + kx) * width;
        for (std::size_t j = 0; j < count; ++j) {
          const double* img = input + ((first + j) * g.channels + c) * g.height * g.width;
          double* dst = row + j * q_total;
          for (std::size_t oy = oy_lo; oy < oy_hi; ++oy) {
            const double* src = img + (oy * g.stride + ky - g.padding) * g.width;
            double* out = dst + oy * g.out_w;
            for (std::size_t ox = ox_lo; ox < ox_hi; ++ox) out[ox] = src[ox * g.stride + kx - g.padding];
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeometry& g, const std::vector<double>& cols, std::size_t first, std::size_t count,
                double* input_grad) {
  const std::size_t q_total = g.positions();
  const std::size_t width = count * q_total;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      const auto [oy_lo, oy_hi] = valid_range(ky, g.stride, g.padding, g.height, g.out_h);
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const auto [ox_lo, ox_hi] = valid_range(kx, g.stride, g.padding, g.width, g.out_w);
        const double* row = cols.data() + ((c * g.kh + ky) * g.kw + kx) * width;
        for (std::size_t j = 0; j < count; ++j) {
          double* img = input_grad + ((first + j) * g.channels + c) * g.height * g.width;
          const double* src = row + j * q_total;
          for (std::size_t oy = oy_lo; oy < oy_hi; ++oy) {
            double* dst = img + (oy * g.stride + ky - g.padding) * g.width;
            const double* in = src + oy * g.out_w;
            for (std::size_t ox = ox_lo; ox < ox_hi; ++ox) dst[ox * g.stride + kx - g.padding] += in[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  require_rank(input, 4, "conv2d", "input");
  require_rank(kernel, 4, "conv2d", "kernel");
  if (stride == 0) throw ContractError("conv2d: stride must be positive");
  if (input.dim(1) != kernel.dim(1)) {
    throw DimensionError("conv2d: input " + shape_to_string(input.shape()) + " has " +
                         std::to_string(input.dim(1)) + " channels but kernel " +
                         shape_to_string(kernel.shape()) + " expects " + std::to_string(kernel.dim(1)));
  }
  ConvGeometry g{};
  g.batch = input.dim(0);
  g.channels = input.dim(1);
  g.height = input.dim(2);
  g.width = input.dim(3);
  g.filters = kernel.dim(0);
  g.kh = kernel.dim(2);
  g.kw = kernel.dim(3);
  g.stride = stride;
  g.padding = padding;
  if (g.kh > g.height + 2 * padding || g.kw > g.width + 2 * padding) {
    throw DimensionError("conv2d: kernel " + shape_to_string(kernel.shape()) + " larger than padded input " +
                         shape_to_string(input.shape()));
  }
  if (bias.defined() && bias.numel() != g.filters) {
    throw DimensionError("conv2d: bias " + shape_to_string(bias.shape()) + " does not match " +
                         std::to_string(g.filters) + " filters");
  }
  g.out_h = (g.height + 2 * padding - g.kh) / stride + 1;
  g.out_w = (g.width + 2 * padding - g.kw) / stride + 1;

  const std::size_t q_total = g.positions();
  const std::size_t P = g.patch();
  std::vector<double> out(g.batch * g.filters * q_total);
  std::vector<double> cols, block_out;
  ConstMapMat kmat(kernel.data().data(), g.filters, P);
  for (std::size_t first = 0; first < g.batch; first += kConvBlock) {
    const std::size_t count = std::min(kConvBlock, g.batch - first);
    im2col(g, input.data().data(), first, count, cols);
    block_out.resize(g.filters * count * q_total);
    MapMat(block_out.data(), g.filters, count * q_total).noalias() =
        kmat * ConstMapMat(cols.data(), P, count * q_total);
    for (std::size_t j = 0; j < count; ++j) {
      for (std::size_t f = 0; f < g.filters; ++f) {
        const double b = bias.defined() ? bias.data()[f] : 0.0;
        const double* src = block_out.data() + f * count * q_total + j * q_total;
        double* dst = out.data() + ((first + j) * g.filters + f) * q_total;
        for (std::size_t q = 0; q < q_total; ++q) dst[q] = src[q] + b;
      }
    }
  }

  return Tensor::make_result(
      Shape{g.batch, g.filters, g.out_h, g.out_w}, std::move(out), {input, kernel, bias},
      [input, kernel, bias, g](std::span<const double> grad) {
        const std::size_t q_total = g.positions();
        const std::size_t P = g.patch();
        std::vector<double> cols, gblock, gcols;
        ConstMapMat kmat(kernel.data().data(), g.filters, P);
        for (std::size_t first = 0; first < g.batch; first += kConvBlock) {
          const std::size_t count = std::min(kConvBlock, g.batch - first);
          const std::size_t width = count * q_total;
          gblock.resize(g.filters * width);
          for (std::size_t j = 0; j < count; ++j)
            for (std::size_t f = 0; f < g.filters; ++f)
              std::copy_n(grad.data() + ((first + j) * g.filters + f) * q_total, q_total,
                          gblock.data() + f * width + j * q_total);
          ConstMapMat gm(gblock.data(), g.filters, width);
          if (kernel.requires_grad()) {
            im2col(g, input.data().data(), first, count, cols);
            MapMat(grad_of(kernel).data(), g.filters, P).noalias() +=
                gm * ConstMapMat(cols.data(), P, width).transpose();
          }
          if (input.requires_grad()) {
            gcols.resize(P * width);
            MapMat(gcols.data(), P, width).noalias() = kmat.transpose() * gm;
            col2im_add(g, gcols, first, count, grad_of(input).data());
          }
        }
        if (bias.defined() && bias.requires_grad()) {
          auto dst = grad_of(bias);
          for (std::size_t b = 0; b < g.batch; ++b)
            for (std::size_t f = 0; f < g.filters; ++f) {
              const double* src = grad.data() + (b * g.filters + f) * q_total;
              double s = 0.0;
              for (std::size_t q = 0; q < q_total; ++q) s += src[q];
              dst[f] += s;
            }
        }
      });
}

Tensor batchnorm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta, RunningStats& stats,
                   BnMode mode, double momentum, double epsilon) {
  require_rank(input, 4, "batchnorm2d", "input");
  const std::size_t B = input.dim(0), C = input.dim(1), HW = input.dim(2) * input.dim(3);
  if (B == 0) throw ContractError("batchnorm2d: empty batch");
  if (gamma.numel() != C || beta.numel() != C || stats.mean.size() != C || stats.var.size() != C) {
    throw DimensionError("batchnorm2d: parameters do not match " + std::to_string(C) + " channels of " +
                         shape_to_string(input.shape()));
  }
  const std::size_t n = B * HW;
  if (mode == BnMode::train && n < 2) {
    throw ContractError("batchnorm2d: train mode needs at least 2 values per channel, got " + std::to_string(n));
  }
  const auto x = input.data();
  const auto gv = gamma.data(), bv = beta.data();
  std::vector<double> xhat(x.size()), inv_std(C), out(x.size());
  for (std::size_t c = 0; c < C; ++c) {
    double mu, var;
    if (mode == BnMode::train) {
      double s = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const double* p = x.data() + (b * C + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) s += p[i];
      }
      mu = s / static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const double* p = x.data() + (b * C + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) ss += (p[i] - mu) * (p[i] - mu);
      }
      var = ss / static_cast<double>(n);
      stats.mean[c] = (1.0 - momentum) * stats.mean[c] + momentum * mu;
      stats.var[c] = (1.0 - momentum) * stats.var[c] +
                     momentum * var * static_cast<double>(n) / static_cast<double>(n - 1);
    } else {
      mu = stats.mean[c];
      var = stats.var[c];
    }
    inv_std[c] = 1.0 / std::sqrt(var + epsilon);
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t off = (b * C + c) * HW;
      for (std::size_t i = 0; i < HW; ++i) {
        xhat[off + i] = (x[off + i] - mu) * inv_std[c];
        out[off + i] = gv[c] * xhat[off + i] + bv[c];
      }
    }
  }
  return Tensor::make_result(
      input.shape(), std::move(out), {input, gamma, beta},
      [input, gamma, beta, mode, B, C, HW, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          std::span<const double> g) {
        const double n = static_cast<double>(B * HW);
        const auto gv = gamma.data();
        for (std::size_t c = 0; c < C; ++c) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (std::size_t b = 0; b < B; ++b) {
            const std::size_t off = (b * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) {
              sum_g += g[off + i];
              sum_gx += g[off + i] * xhat[off + i];
            }
          }
          if (gamma.requires_grad()) grad_of(gamma)[c] += sum_gx;
          if (beta.requires_grad()) grad_of(beta)[c] += sum_g;
          if (!input.requires_grad()) continue;
          auto dx = grad_of(input);
          const double k = gv[c] * inv_std[c];
          for (std::size_t b = 0; b < B; ++b) {
            const std::size_t off = (b * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) {
              if (mode == BnMode::train) {
                dx[off + i] += k * (g[off + i] - sum_g / n - xhat[off + i] * sum_gx / n);
              } else {
                dx[off + i] += k * g[off + i];
              }
            }
          }
        }
      });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "softmax_cross_entropy", "logits");
  const std::size_t B = logits.dim(0), O = logits.dim(1);
  if (labels.size() != B) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(B) + " rows");
  }
  if (B == 0) throw ContractError("softmax_cross_entropy: empty batch");
  const auto z = logits.data();
  std::vector<double> probs(B * O);
  std::vector<int> y(labels.begin(), labels.end());
  double total = 0.0;
  for (std::size_t r = 0; r < B; ++r) {
    if (y[r] < 0 || static_cast<std::size_t>(y[r]) >= O) {
      throw IndexError("softmax_cross_entropy: label " + std::to_string(y[r]) + " outside [0, " +
                       std::to_string(O) + ")");
    }
    const double* row = z.data() + r * O;
    const double mx = *std::max_element(row, row + O);
    double s = 0.0;
    for (std::size_t c = 0; c < O; ++c) {
      probs[r * O + c] = std::exp(row[c] - mx);
      s += probs[r * O + c];
    }
    for (std::size_t c = 0; c < O; ++c) probs[r * O + c] /= s;
    total += std::log(s) - (row[y[r]] - mx);
  }
  return Tensor::make_result(Shape{}, {total / static_cast<double>(B)}, {logits},
                             [logits, B, O, probs = std::move(probs), y = std::move(y)](std::span<const double> g) {
                               auto dst = grad_of(logits);
                               const double k = g[0] / static_cast<double>(B);
                               for (std::size_t r = 0; r < B; ++r)
                                 for (std::size_t c = 0; c < O; ++c) {
                                   const double onehot = static_cast<int>(c) == y[r] ? 1.0 : 0.0;
                                   dst[r * O + c] += k * (probs[r * O + c] - onehot);
                                 }
                             });
}

Tensor nt_xent_loss(const Tensor& z1, const Tensor& z2, double temperature) {
  require_rank(z1, 2, "nt_xent_loss", "z1");
  require_same_shape(z1, z2, "nt_xent_loss");
  if (!(temperature > 0.0)) throw ContractError("nt_xent_loss: temperature must be positive");
  const std::size_t B = z1.dim(0), D = z1.dim(1);
  if (B < 2) throw ContractError("nt_xent_loss: need at least 2 pairs, got " + std::to_string(B));
  const std::size_t N = 2 * B;

  RowMat z(N, D);
  z.topRows(B) = ConstMapMat(z1.data().data(), B, D);
  z.bottomRows(B) = ConstMapMat(z2.data().data(), B, D);
  Eigen::VectorXd norms(N);
  RowMat zn(N, D);
  for (std::size_t r = 0; r < N; ++r) {
    norms[r] = std::max(z.row(r).norm(), 1e-12);
    zn.row(r) = z.row(r) / norms[r];
  }
  RowMat sim = (zn * zn.transpose()) / temperature;
  RowMat soft = RowMat::Zero(N, N);
  double total = 0.0;
  for (std::size_t a = 0; a < N; ++a) {
    const std::size_t pos = a < B ? a + B : a - B;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < N; ++j)
      if (j != a) mx = std::max(mx, sim(a, j));
    double s = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      if (j == a) continue;
      soft(a, j) = std::exp(sim(a, j) - mx);
      s += soft(a, j);
    }
    soft.row(a) /= s;
    total += mx + std::log(s) - sim(a, pos);
  }

  return Tensor::make_result(
      Shape{}, {total / static_cast<double>(N)}, {z1, z2},
      [z1, z2, B, D, N, temperature, zn = std::move(zn), norms = std::move(norms),
       soft = std::move(soft)](std::span<const double> g) {
        RowMat dsim = soft;
        for (std::size_t a = 0; a < N; ++a) dsim(a, a < B ? a + B : a - B) -= 1.0;
        dsim *= g[0] / static_cast<double>(N);
        const RowMat dzn = ((dsim + dsim.transpose()) * zn) / temperature;
        RowMat dz(N, D);
        for (std::size_t r = 0; r < N; ++r) {
          const double proj = zn.row(r).dot(dzn.row(r));
          dz.row(r) = (dzn.row(r) - proj * zn.row(r)) / norms[r];
        }
        if (z1.requires_grad()) MapMat(grad_of(z1).data(), B, D) += dz.topRows(B);
        if (z2.requires_grad()) MapMat(grad_of(z2).data(), B, D) += dz.bottomRows(B);
      });
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine_similarity: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " differ");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 && nb == 0.0) {
    spdlog::warn("cosine_similarity: both vectors are zero, returning 0");
    return 0.0;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

double cosine_similarity(const Tensor& a, const Tensor& b) { return cosine_similarity(a.data(), b.data()); }

}  // namespace hyperinv
