#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hyperinv/numerics/tensor.hpp"

namespace hyperinv {

// Elementwise and reductions. Binary elementwise ops require equal shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Average of equally shaped tensors.
Tensor average(const std::vector<Tensor>& items);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);

/// Same values, new shape with the same element count.
Tensor reshape(const Tensor& x, Shape shape);
/// [B, ...] -> [B, prod(...)].
Tensor flatten(const Tensor& x);

/// [M,K] x [K,N] -> [M,N].
Tensor matmul(const Tensor& a, const Tensor& b);
/// x[B,D] * weight[D,O] (+ bias[O]). An undefined bias is skipped.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias = Tensor());

/// Cross-correlation of input[B,C,H,W] with kernel[F,C,k,k]. The kernel may
/// itself be the output of other ops; gradients flow into it.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride,
              std::size_t padding);

enum class BnMode { train, eval };

struct RunningStats {
  std::vector<double> mean;
  std::vector<double> var;

  static RunningStats fresh(std::size_t channels) {
    return {std::vector<double>(channels, 0.0), std::vector<double>(channels, 1.0)};
  }
};

/// Train mode normalises by biased batch statistics and folds them into
/// `stats` (unbiased variance); eval mode normalises by `stats`.
Tensor batchnorm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta, RunningStats& stats,
                   BnMode mode, double momentum = 0.1, double epsilon = 1e-5);

/// Mean softmax cross-entropy of logits[B,O] against integer labels.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Normalized-temperature cross-entropy over the 2B x 2B cosine-similarity
/// matrix of two views z1[B,D], z2[B,D]; row r of z1 is the positive of row
/// r of z2.
Tensor nt_xent_loss(const Tensor& z1, const Tensor& z2, double temperature);

/// <a,b>/(|a||b|). Two zero vectors give 0 and log a warning.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_similarity(const Tensor& a, const Tensor& b);

}  // namespace hyperinv
