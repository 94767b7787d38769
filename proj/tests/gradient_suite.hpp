#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hyperinv/hypernet/hypernet.hpp"
#include "test_support.hpp"

namespace hyperinv::testing {

struct GraphCheck {
  std::string description;
  double descriptor_error = 0.0;  ///< relative error of dloss/di
  double parameter_error = 0.0;   ///< worst relative error over W, BN and head
};

/// Smallest |input| over every ReLU in the graph: hidden layer of the
/// hypernetwork (when it uses ReLU) and each encoder layer after batchnorm.
inline double relu_margin(const hypernet::HyperEncoder& enc, const Tensor& descriptor, const Tensor& x) {
  NoGradGuard guard;
  double margin = INFINITY;
  auto scan = [&](const Tensor& t) {
    for (double v : t.data()) margin = std::min(margin, std::abs(v));
  };
  const auto& p = enc.hyper;
  if (p.activation == hypernet::HiddenActivation::relu) {
    scan(matmul(reshape(descriptor, {1, p.descriptor_dim()}), p.w1));
  }
  auto bn = enc.bn;
  const auto kernels = hypernet::hyper_forward(p, descriptor, enc.arch);
  Tensor h = x;
  for (std::size_t l = 0; l < enc.arch.layers.size(); ++l) {
    const auto& s = enc.arch.layers[l];
    h = batchnorm2d(conv2d(h, kernels[l], Tensor(), s.stride, s.padding), bn[l].gamma, bn[l].beta, bn[l].stats,
                    BnMode::train);
    scan(h);
    h = relu(h);
  }
  return margin;
}

/// Random small instance of descriptor -> hypernetwork -> conv -> batchnorm
/// (train mode) -> ReLU -> head -> cross-entropy, with every gradient
/// compared against central differences. Inputs and descriptor are redrawn
/// until every ReLU input is at least 1e-3 away from its kink.
inline GraphCheck check_full_graph(std::uint64_t seed) {
  Rng rng(derive_seed(seed, "graph-case"));
  hypernet::EncoderArchitecture arch;
  arch.channels = 1 + rng.uniform_index(3);
  arch.height = 5 + rng.uniform_index(4);
  arch.width = 5 + rng.uniform_index(4);
  const std::size_t layers = 1 + rng.uniform_index(2);
  std::size_t in = arch.channels, h = arch.height, w = arch.width;
  for (std::size_t l = 0; l < layers; ++l) {
    hypernet::ConvLayerSpec s;
    s.in_channels = in;
    s.out_channels = 1 + rng.uniform_index(3);
    s.kernel = 1 + 2 * rng.uniform_index(2);
    if (s.in_channels * s.kernel * s.kernel == 1) s.kernel = 3;  // filters keep at least two weights
    s.stride = 1 + rng.uniform_index(2);
    s.padding = rng.uniform_index(2);
    if (std::min(h, w) + 2 * s.padding < s.kernel) s.padding = 1;
    h = (h + 2 * s.padding - s.kernel) / s.stride + 1;
    w = (w + 2 * s.padding - s.kernel) / s.stride + 1;
    arch.layers.push_back(s);
    in = s.out_channels;
  }
  const std::size_t k = 1 + rng.uniform_index(3);
  const std::size_t hidden = 2 + rng.uniform_index(4);
  const auto activation = static_cast<hypernet::HiddenActivation>(rng.uniform_index(3));
  auto enc = hypernet::make_hyper_encoder(arch, k, hidden, rng, activation);
  for (auto& layer : enc.bn) {
    for (auto& g : layer.gamma.mutable_data()) g = rng.uniform(0.5, 1.5);
    for (auto& b : layer.beta.mutable_data()) b = rng.uniform(-0.5, 0.5);
  }
  const std::size_t batch = 3 + rng.uniform_index(3);
  const std::size_t classes = 2 + rng.uniform_index(3);
  Tensor x, descriptor;
  for (int attempt = 0;; ++attempt) {
    x = random_tensor({batch, arch.channels, arch.height, arch.width}, rng);
    std::vector<double> dv(k);
    for (auto& v : dv) v = rng.uniform(0.1, 0.9);
    descriptor = Tensor::from_data({k}, dv, true);
    if (relu_margin(enc, descriptor, x) >= 1e-3 || attempt == 1000) break;
  }
  std::vector<int> labels;
  for (std::size_t b = 0; b < batch; ++b) labels.push_back(static_cast<int>(rng.uniform_index(classes)));
  auto head = hypernet::TaskHead::init(arch.feature_dim(), classes, rng);

  auto loss = [&] {
    auto bn = enc.bn;
    const auto feats = hypernet::run_encoder(arch, hypernet::hyper_forward(enc.hyper, descriptor, arch), bn, x,
                                             BnMode::train);
    return softmax_cross_entropy(hypernet::apply_head(head, feats), labels);
  };
  std::vector<Tensor> params;
  for (const auto& p : enc.parameters()) params.push_back(p.tensor);
  params.push_back(head.weight);

  GraphCheck out;
  out.description = "K=" + std::to_string(k) + " hidden=" + std::to_string(hidden) + " layers=" +
                    std::to_string(layers) + " activation=" + hypernet::to_string(activation);
  out.descriptor_error = max_fd_error(loss, {descriptor});
  out.parameter_error = max_fd_error(loss, params);
  return out;
}

}  // namespace hyperinv::testing
