#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hyperinv/hypernet/architecture.hpp"
#include "hyperinv/hypernet/descriptor.hpp"
#include "hyperinv/numerics/ops.hpp"
#include "hyperinv/numerics/optim.hpp"
#include "hyperinv/numerics/rng.hpp"

namespace hyperinv::hypernet {

enum class HiddenActivation { relu, tanh, identity };

std::string to_string(HiddenActivation activation);
HiddenActivation hidden_activation_from_string(const std::string& name);

/// theta_l = w2_l^T (sigma(w1^T i) + b1) + b2_l for every generated layer l.
struct HyperNetworkParams {
  Tensor w1;               ///< [K, d_h]
  Tensor b1;               ///< [d_h]
  std::vector<Tensor> w2;  ///< per layer [d_h, d_out_l]
  std::vector<Tensor> b2;  ///< per layer [d_out_l]
  HiddenActivation activation = HiddenActivation::relu;

  std::size_t descriptor_dim() const { return w1.dim(0); }
  std::size_t hidden_dim() const { return w1.dim(1); }
  std::size_t layer_count() const { return w2.size(); }
  std::vector<NamedParameter> parameters() const;
};

/// Fan-in uniform initialisation, then each w2_l is rescaled so theta_l at
/// i = all-ones has variance 1/(3 fan_in_l), the spread of a default conv init.
HyperNetworkParams init_hypernet(const EncoderArchitecture& arch, std::size_t descriptor_dim,
                                 std::size_t hidden_dim, Rng& rng,
                                 HiddenActivation activation = HiddenActivation::relu);

/// sigma(w1^T i) + b1 as a [1, d_h] tensor.
Tensor hidden_features(const HyperNetworkParams& params, const Tensor& descriptor);

/// Conv kernels [F_l, C_l, k, k], differentiable in both params and descriptor.
std::vector<Tensor> hyper_forward(const HyperNetworkParams& params, const Tensor& descriptor,
                                  const EncoderArchitecture& arch);
std::vector<Tensor> hyper_forward(const HyperNetworkParams& params, const InvarianceDescriptor& descriptor,
                                  const EncoderArchitecture& arch);

/// Affine batchnorm parameters and running statistics for one conv layer.
/// One set is shared by every descriptor.
struct BatchNormLayer {
  Tensor gamma;
  Tensor beta;
  RunningStats stats;

  static BatchNormLayer fresh(std::size_t channels, bool requires_grad = true);
};

std::vector<BatchNormLayer> fresh_batchnorm(const EncoderArchitecture& arch, bool requires_grad = true);
std::vector<NamedParameter> batchnorm_parameters(const std::vector<BatchNormLayer>& bn);

/// conv -> batchnorm -> ReLU per layer, then flatten to [B, D]. In eval mode
/// `bn` is only read.
Tensor run_encoder(const EncoderArchitecture& arch, const std::vector<Tensor>& kernels,
                   std::vector<BatchNormLayer>& bn, const Tensor& x, BnMode mode);

/// Replaces each layer's running statistics by the exact statistics of `x`
/// propagated through the encoder.
void calibrate_batchnorm(const EncoderArchitecture& arch, const std::vector<Tensor>& kernels,
                         std::vector<BatchNormLayer>& bn, const Tensor& x);

/// Hypernetwork plus the encoder it parameterises.
struct HyperEncoder {
  EncoderArchitecture arch;
  HyperNetworkParams hyper;
  std::vector<BatchNormLayer> bn;

  std::vector<NamedParameter> parameters() const;
  /// Deep copy whose tensors do not require gradients.
  HyperEncoder frozen_copy() const;
};

HyperEncoder make_hyper_encoder(const EncoderArchitecture& arch, std::size_t descriptor_dim, std::size_t hidden_dim,
                                Rng& rng, HiddenActivation activation = HiddenActivation::relu);

Tensor encode(HyperEncoder& encoder, const Tensor& descriptor, const Tensor& x, BnMode mode);
/// Eval-mode encoding; running statistics are left untouched.
Tensor encode(const HyperEncoder& encoder, const Tensor& descriptor, const Tensor& x);
Tensor encode(const HyperEncoder& encoder, const InvarianceDescriptor& descriptor, const Tensor& x);

/// Conventional encoder with its own conv kernels (no hypernetwork).
struct ConvEncoder {
  EncoderArchitecture arch;
  std::vector<Tensor> kernels;
  std::vector<BatchNormLayer> bn;

  std::vector<NamedParameter> parameters() const;
  ConvEncoder frozen_copy() const;
  std::size_t parameter_count() const;
};

/// Kernels uniform in +-1/sqrt(fan_in).
ConvEncoder make_conv_encoder(const EncoderArchitecture& arch, Rng& rng);

Tensor encode(ConvEncoder& encoder, const Tensor& x, BnMode mode);
Tensor encode(const ConvEncoder& encoder, const Tensor& x);

/// Bias-free linear read-out, logits = features * weight.
struct TaskHead {
  Tensor weight;  ///< [D, O]

  std::size_t input_dim() const { return weight.dim(0); }
  std::size_t output_dim() const { return weight.dim(1); }

  static TaskHead zeros(std::size_t input_dim, std::size_t output_dim, bool requires_grad = true);
  /// Uniform in +-1/sqrt(input_dim).
  static TaskHead init(std::size_t input_dim, std::size_t output_dim, Rng& rng, bool requires_grad = true);
};

/// Throws DimensionError when features[B,D] does not match the head.
Tensor apply_head(const TaskHead& head, const Tensor& features);

Tensor predict(const TaskHead& head, HyperEncoder& encoder, const Tensor& descriptor, const Tensor& x, BnMode mode);
Tensor predict(const TaskHead& head, const HyperEncoder& encoder, const Tensor& descriptor, const Tensor& x);

}  // namespace hyperinv::hypernet
