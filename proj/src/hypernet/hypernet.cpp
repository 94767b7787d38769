#include "hyperinv/hypernet/hypernet.hpp"

#include <cmath>

#include "hyperinv/errors.hpp"

namespace hyperinv::hypernet {

namespace {

Tensor uniform_tensor(Shape shape, double bound, Rng& rng, bool requires_grad) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

Tensor activate(const Tensor& x, HiddenActivation activation) {
  switch (activation) {
    case HiddenActivation::relu: return relu(x);
    case HiddenActivation::tanh:
      return add(scale(sigmoid(scale(x, 2.0)), 2.0), Tensor::full(x.shape(), -1.0));
    case HiddenActivation::identity: return x;
  }
  return x;
}

}  // namespace

std::string to_string(HiddenActivation activation) {
  switch (activation) {
    case HiddenActivation::relu: return "relu";
    case HiddenActivation::tanh: return "tanh";
    case HiddenActivation::identity: return "identity";
  }
  return "unknown";
}

HiddenActivation hidden_activation_from_string(const std::string& name) {
  if (name == "relu") return HiddenActivation::relu;
  if (name == "tanh") return HiddenActivation::tanh;
  if (name == "identity") return HiddenActivation::identity;
  throw ContractError("unknown hidden activation '" + name + "' (expected relu, tanh or identity)");
}

std::vector<NamedParameter> HyperNetworkParams::parameters() const {
  std::vector<NamedParameter> out{{"hyper.w1", w1}, {"hyper.b1", b1}};
  for (std::size_t l = 0; l < w2.size(); ++l) {
    out.push_back({"hyper.w2." + std::to_string(l), w2[l]});
    out.push_back({"hyper.b2." + std::to_string(l), b2[l]});
  }
  return out;
}

HyperNetworkParams init_hypernet(const EncoderArchitecture& arch, std::size_t descriptor_dim,
                                 std::size_t hidden_dim, Rng& rng, HiddenActivation activation) {
  arch.validate();
  if (descriptor_dim == 0 || hidden_dim == 0) throw ContractError("hypernetwork dimensions must be positive");
  HyperNetworkParams p;
  p.activation = activation;
  const double b_in = 1.0 / std::sqrt(static_cast<double>(descriptor_dim));
  const double b_hidden = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  p.w1 = uniform_tensor({descriptor_dim, hidden_dim}, b_in, rng, true);
  p.b1 = uniform_tensor({hidden_dim}, b_in, rng, true);
  for (const auto& layer : arch.layers) {
    p.w2.push_back(uniform_tensor({hidden_dim, layer.weight_count()}, b_hidden, rng, true));
    p.b2.push_back(Tensor::zeros({layer.weight_count()}, true));
  }

  NoGradGuard guard;
  const Tensor h = hidden_features(p, Tensor::full({descriptor_dim}, 1.0));
  for (std::size_t l = 0; l < arch.layers.size(); ++l) {
    const Tensor theta = matmul(h, p.w2[l]);
    double ms = 0.0;
    for (double v : theta.data()) ms += v * v;
    ms /= static_cast<double>(theta.numel());
    if (ms <= 0.0) continue;
    const auto& s = arch.layers[l];
    const double fan_in = static_cast<double>(s.in_channels * s.kernel * s.kernel);
    const double factor = std::sqrt(1.0 / (3.0 * fan_in) / ms);
    for (auto& v : p.w2[l].mutable_data()) v *= factor;
  }
  return p;
}

Tensor hidden_features(const HyperNetworkParams& params, const Tensor& descriptor) {
  const std::size_t k = params.descriptor_dim();
  if (descriptor.numel() != k) {
    throw DimensionError("descriptor has " + std::to_string(descriptor.numel()) + " components, hypernetwork expects " +
                         std::to_string(k));
  }
  const Tensor row = reshape(descriptor, {1, k});
  return add(activate(matmul(row, params.w1), params.activation), reshape(params.b1, {1, params.hidden_dim()}));
}

std::vector<Tensor> hyper_forward(const HyperNetworkParams& params, const Tensor& descriptor,
                                  const EncoderArchitecture& arch) {
  if (arch.layers.size() != params.layer_count()) {
    throw DimensionError("hypernetwork generates " + std::to_string(params.layer_count()) + " layers, architecture has " +
                         std::to_string(arch.layers.size()));
  }
  const Tensor h = hidden_features(params, descriptor);
  std::vector<Tensor> kernels;
  for (std::size_t l = 0; l < arch.layers.size(); ++l) {
    const auto& spec = arch.layers[l];
    if (params.w2[l].dim(1) != spec.weight_count()) {
      throw DimensionError("hypernetwork layer " + std::to_string(l) + " emits " + std::to_string(params.w2[l].dim(1)) +
                           " weights, conv layer needs " + std::to_string(spec.weight_count()));
    }
    kernels.push_back(reshape(linear(h, params.w2[l], params.b2[l]), spec.kernel_shape()));
  }
  return kernels;
}

std::vector<Tensor> hyper_forward(const HyperNetworkParams& params, const InvarianceDescriptor& descriptor,
                                  const EncoderArchitecture& arch) {
  descriptor.validate();
  return hyper_forward(params, descriptor.to_tensor(), arch);
}

BatchNormLayer BatchNormLayer::fresh(std::size_t channels, bool requires_grad) {
  return {Tensor::full({channels}, 1.0, requires_grad), Tensor::zeros({channels}, requires_grad),
          RunningStats::fresh(channels)};
}

std::vector<BatchNormLayer> fresh_batchnorm(const EncoderArchitecture& arch, bool requires_grad) {
  std::vector<BatchNormLayer> bn;
  for (const auto& l : arch.layers) bn.push_back(BatchNormLayer::fresh(l.out_channels, requires_grad));
  return bn;
}

std::vector<NamedParameter> batchnorm_parameters(const std::vector<BatchNormLayer>& bn) {
  std::vector<NamedParameter> out;
  for (std::size_t l = 0; l < bn.size(); ++l) {
    out.push_back({"bn." + std::to_string(l) + ".gamma", bn[l].gamma, 0.0});
    out.push_back({"bn." + std::to_string(l) + ".beta", bn[l].beta, 0.0});
  }
  return out;
}

Tensor run_encoder(const EncoderArchitecture& arch, const std::vector<Tensor>& kernels,
                   std::vector<BatchNormLayer>& bn, const Tensor& x, BnMode mode) {
  if (kernels.size() != arch.layers.size() || bn.size() != arch.layers.size()) {
    throw DimensionError("encoder has " + std::to_string(arch.layers.size()) + " layers but got " +
                         std::to_string(kernels.size()) + " kernels and " + std::to_string(bn.size()) +
                         " batchnorm layers");
  }
  if (x.rank() != 4 || x.dim(1) != arch.channels || x.dim(2) != arch.height || x.dim(3) != arch.width) {
    throw DimensionError("encoder input " + shape_to_string(x.shape()) + " does not match [B," +
                         std::to_string(arch.channels) + "," + std::to_string(arch.height) + "," +
                         std::to_string(arch.width) + "]");
  }
  Tensor h = x;
  for (std::size_t l = 0; l < arch.layers.size(); ++l) {
    const auto& s = arch.layers[l];
    h = conv2d(h, kernels[l], Tensor(), s.stride, s.padding);
    h = relu(batchnorm2d(h, bn[l].gamma, bn[l].beta, bn[l].stats, mode));
  }
  return flatten(h);
}

void calibrate_batchnorm(const EncoderArchitecture& arch, const std::vector<Tensor>& kernels,
                         std::vector<BatchNormLayer>& bn, const Tensor& x) {
  if (kernels.size() != arch.layers.size() || bn.size() != arch.layers.size()) {
    throw DimensionError("calibrate_batchnorm: layer count mismatch");
  }
  NoGradGuard guard;
  Tensor h = x;
  for (std::size_t l = 0; l < arch.layers.size(); ++l) {
    const auto& s = arch.layers[l];
    h = relu(batchnorm2d(conv2d(h, kernels[l], Tensor(), s.stride, s.padding), bn[l].gamma, bn[l].beta, bn[l].stats,
                         BnMode::train, 1.0));
  }
}

std::vector<NamedParameter> HyperEncoder::parameters() const {
  auto out = hyper.parameters();
  for (auto& p : batchnorm_parameters(bn)) out.push_back(std::move(p));
  return out;
}

HyperEncoder HyperEncoder::frozen_copy() const {
  HyperEncoder c;
  c.arch = arch;
  c.hyper.activation = hyper.activation;
  c.hyper.w1 = hyper.w1.detach();
  c.hyper.b1 = hyper.b1.detach();
  for (const auto& t : hyper.w2) c.hyper.w2.push_back(t.detach());
  for (const auto& t : hyper.b2) c.hyper.b2.push_back(t.detach());
  for (const auto& layer : bn) c.bn.push_back({layer.gamma.detach(), layer.beta.detach(), layer.stats});
  return c;
}

HyperEncoder make_hyper_encoder(const EncoderArchitecture& arch, std::size_t descriptor_dim, std::size_t hidden_dim,
                                Rng& rng, HiddenActivation activation) {
  HyperEncoder e;
  e.arch = arch;
  e.hyper = init_hypernet(arch, descriptor_dim, hidden_dim, rng, activation);
  e.bn = fresh_batchnorm(arch);
  return e;
}

Tensor encode(HyperEncoder& encoder, const Tensor& descriptor, const Tensor& x, BnMode mode) {
  return run_encoder(encoder.arch, hyper_forward(encoder.hyper, descriptor, encoder.arch), encoder.bn, x, mode);
}

Tensor encode(const HyperEncoder& encoder, const Tensor& descriptor, const Tensor& x) {
  auto bn = encoder.bn;
  return run_encoder(encoder.arch, hyper_forward(encoder.hyper, descriptor, encoder.arch), bn, x, BnMode::eval);
}

Tensor encode(const HyperEncoder& encoder, const InvarianceDescriptor& descriptor, const Tensor& x) {
  descriptor.validate();
  return encode(encoder, descriptor.to_tensor(), x);
}

std::vector<NamedParameter> ConvEncoder::parameters() const {
  std::vector<NamedParameter> out;
  for (std::size_t l = 0; l < kernels.size(); ++l) out.push_back({"conv." + std::to_string(l) + ".weight", kernels[l]});
  for (auto& p : batchnorm_parameters(bn)) out.push_back(std::move(p));
  return out;
}

ConvEncoder ConvEncoder::frozen_copy() const {
  ConvEncoder c;
  c.arch = arch;
  for (const auto& k : kernels) c.kernels.push_back(k.detach());
  for (const auto& layer : bn) c.bn.push_back({layer.gamma.detach(), layer.beta.detach(), layer.stats});
  return c;
}

std::size_t ConvEncoder::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.tensor.numel();
  return n;
}

ConvEncoder make_conv_encoder(const EncoderArchitecture& arch, Rng& rng) {
  arch.validate();
  ConvEncoder e;
  e.arch = arch;
  for (const auto& s : arch.layers) {
    const double fan_in = static_cast<double>(s.in_channels * s.kernel * s.kernel);
    e.kernels.push_back(uniform_tensor(s.kernel_shape(), 1.0 / std::sqrt(fan_in), rng, true));
  }
  e.bn = fresh_batchnorm(arch);
  return e;
}

Tensor encode(ConvEncoder& encoder, const Tensor& x, BnMode mode) {
  return run_encoder(encoder.arch, encoder.kernels, encoder.bn, x, mode);
}

Tensor encode(const ConvEncoder& encoder, const Tensor& x) {
  auto bn = encoder.bn;
  return run_encoder(encoder.arch, encoder.kernels, bn, x, BnMode::eval);
}

TaskHead TaskHead::zeros(std::size_t input_dim, std::size_t output_dim, bool requires_grad) {
  return {Tensor::zeros({input_dim, output_dim}, requires_grad)};
}

TaskHead TaskHead::init(std::size_t input_dim, std::size_t output_dim, Rng& rng, bool requires_grad) {
  return {uniform_tensor({input_dim, output_dim}, 1.0 / std::sqrt(static_cast<double>(input_dim)), rng, requires_grad)};
}

Tensor apply_head(const TaskHead& head, const Tensor& features) {
  if (features.rank() != 2 || features.dim(1) != head.input_dim()) {
    throw DimensionError("head expects features [B," + std::to_string(head.input_dim()) + "], got " +
                         shape_to_string(features.shape()));
  }
  return matmul(features, head.weight);
}

Tensor predict(const TaskHead& head, HyperEncoder& encoder, const Tensor& descriptor, const Tensor& x, BnMode mode) {
  if (head.input_dim() != encoder.arch.feature_dim()) {
    throw DimensionError("head input " + std::to_string(head.input_dim()) + " does not match encoder features " +
                         std::to_string(encoder.arch.feature_dim()));
  }
  return apply_head(head, encode(encoder, descriptor, x, mode));
}

Tensor predict(const TaskHead& head, const HyperEncoder& encoder, const Tensor& descriptor, const Tensor& x) {
  if (head.input_dim() != encoder.arch.feature_dim()) {
    throw DimensionError("head input " + std::to_string(head.input_dim()) + " does not match encoder features " +
                         std::to_string(encoder.arch.feature_dim()));
  }
  return apply_head(head, encode(encoder, descriptor, x));
}

}  // namespace hyperinv::hypernet
