#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "hyperinv/numerics/ops.hpp"
#include "hyperinv/numerics/optim.hpp"
#include "hyperinv/training/pretrain.hpp"
#include "test_support.hpp"

namespace hyperinv::testing {

// Direct definition of strided, zero-padded cross-correlation.
inline std::vector<double> conv_oracle(const Tensor& x, const Tensor& k, const Tensor& bias, std::size_t stride,
                                       std::size_t pad) {
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t F = k.dim(0), K = k.dim(2);
  const std::size_t OH = (H + 2 * pad - K) / stride + 1, OW = (W + 2 * pad - K) / stride + 1;
  std::vector<double> out(B * F * OH * OW, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t oy = 0; oy < OH; ++oy)
        for (std::size_t ox = 0; ox < OW; ++ox) {
          double acc = bias.defined() ? bias.at(f) : 0.0;
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t ky = 0; ky < K; ++ky)
              for (std::size_t kx = 0; kx < K; ++kx) {
                const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
                const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(H) || ix >= static_cast<long>(W)) continue;
                acc += x.at(((b * C + c) * H + iy) * W + ix) * k.at(((f * C + c) * K + ky) * K + kx);
              }
          out[((b * F + f) * OH + oy) * OW + ox] = acc;
        }
  return out;
}

/// Largest |conv2d - oracle| over `cases` random shapes; infinity on a size mismatch.
inline double conv_oracle_worst_error(int cases, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < cases; ++trial) {
    const std::size_t B = 1 + rng.uniform_index(3), C = 1 + rng.uniform_index(3), F = 1 + rng.uniform_index(4);
    const std::size_t K = 1 + rng.uniform_index(5), stride = 1 + rng.uniform_index(3), pad = rng.uniform_index(3);
    const std::size_t H = K + rng.uniform_index(9), W = K + rng.uniform_index(9);
    auto x = random_tensor({B, C, H, W}, rng);
    auto k = random_tensor({F, C, K, K}, rng);
    auto bias = trial % 2 ? random_tensor({F}, rng) : Tensor();
    const auto y = conv2d(x, k, bias, stride, pad);
    const auto ref = conv_oracle(x, k, bias, stride, pad);
    if (y.numel() != ref.size()) return INFINITY;
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(y.at(i) - ref[i]));
  }
  return worst;
}

/// Per-step losses of pretrain_multitask on one task next to those of a plain
/// supervised loop (same init, batches and augmentation, constant rate).
inline std::pair<std::vector<double>, std::vector<double>> single_task_curves(const training::PretrainTask& task,
                                                                              training::TrainConfig config) {
  config.schedule = ScheduleKind::constant;
  const std::vector<training::PretrainTask> tasks{task};
  const auto trained = training::pretrain_multitask(tasks, config);

  auto model = training::init_multitask_model(tasks, config, hypernet::EncoderArchitecture::synthetic());
  std::vector<NamedParameter> params = model.encoder.parameters();
  params.push_back({"head", model.heads[0].weight});
  auto state = AdamState::for_parameters(params, {0.9, 0.999, 1e-8, config.weight_decay});
  const auto families = training::synthetic_families();
  const auto descriptor = task.descriptor.to_tensor();
  const std::size_t spe = config.steps_per_epoch(task.data->size());
  const std::size_t steps = config.total_steps(task.data->size());
  std::vector<double> curve;
  for (std::size_t step = 0; step < steps; ++step) {
    zero_grads(params);
    const auto batch = training::make_task_batch(task, 0, config, spe, step, task.descriptor, families);
    const auto feats = hypernet::encode(model.encoder, descriptor, batch.images, BnMode::train);
    const auto loss = softmax_cross_entropy(hypernet::apply_head(model.heads[0], feats), batch.labels);
    curve.push_back(loss.item());
    loss.backward();
    adam_step(params, state, config.lr);
  }
  return {trained.log.step_losses, curve};
}

}  // namespace hyperinv::testing
