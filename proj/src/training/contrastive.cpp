#include "hyperinv/training/contrastive.hpp"

#include <cmath>

#include "hyperinv/errors.hpp"
#include "hyperinv/training/features.hpp"

namespace hyperinv::training {

namespace {

Tensor uniform(Shape shape, double bound, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from_data(std::move(shape), std::move(v), true);
}

}  // namespace

ProjectionHead ProjectionHead::init(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim, Rng& rng) {
  const double a = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double b = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  ProjectionHead p;
  p.w1 = uniform({input_dim, hidden_dim}, a, rng);
  p.b1 = uniform({hidden_dim}, a, rng);
  p.w2 = uniform({hidden_dim, output_dim}, b, rng);
  p.b2 = uniform({output_dim}, b, rng);
  return p;
}

std::vector<NamedParameter> ProjectionHead::parameters() const {
  return {{"projection.w1", w1}, {"projection.b1", b1, 0.0}, {"projection.w2", w2}, {"projection.b2", b2, 0.0}};
}

Tensor ProjectionHead::forward(const Tensor& features) const { return linear(relu(linear(features, w1, b1)), w2, b2); }

std::vector<ContrastiveSetting> default_contrastive_settings() {
  return {{{1.0, 1.0}, data::ViewFamily::standard},
          {{1.0, 0.0}, data::ViewFamily::ventral},
          {{0.0, 1.0}, data::ViewFamily::dorsal}};
}

double contrastive_accuracy(const Tensor& z1, const Tensor& z2) {
  const std::size_t b = z1.dim(0), d = z1.dim(1);
  if (b == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < b; ++r) {
    const auto a = z1.data().subspan(r * d, d);
    std::size_t best = 0;
    double best_sim = -2.0;
    for (std::size_t c = 0; c < b; ++c) {
      const double s = cosine_similarity(a, z2.data().subspan(c * d, d));
      if (s > best_sim) best_sim = s, best = c;
    }
    if (best == r) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(b);
}

PretrainedBundle pretrain_contrastive(const data::ImageStack& images, const TrainConfig& config,
                                      const hypernet::EncoderArchitecture& arch,
                                      const data::ViewParams& view_params,
                                      std::span<const ContrastiveSetting> settings) {
  std::vector<ContrastiveSetting> plan(settings.begin(), settings.end());
  if (plan.empty()) plan = default_contrastive_settings();
  const std::size_t n = images.size();
  if (n < 2) throw ContractError("contrastive pre-training needs at least 2 images");
  const std::size_t batch = config.effective_batch(n);
  if (batch < 2) throw ContractError("contrastive pre-training needs a batch size of at least 2");
  for (const auto& s : plan) {
    if (s.descriptor.size() != plan.front().descriptor.size()) throw DimensionError("descriptor sizes differ");
  }

  Rng rng(derive_seed(config.seed, "init"));
  PretrainedBundle b;
  b.encoder = hypernet::make_hyper_encoder(arch, plan.front().descriptor.size(), config.hidden_dim, rng,
                                           config.activation);
  const auto projection = ProjectionHead::init(arch.feature_dim(), arch.feature_dim() / 4 + 1,
                                               config.projection_dim, rng);
  for (const auto& s : plan) {
    b.task_names.push_back(data::to_string(s.family));
    b.task_descriptors.push_back(s.descriptor);
  }
  std::vector<Tensor> descriptors;
  for (const auto& s : plan) descriptors.push_back(s.descriptor.to_tensor());

  auto params = b.encoder.parameters();
  for (auto& p : projection.parameters()) params.push_back(std::move(p));
  auto state = AdamState::for_parameters(params, {0.9, 0.999, 1e-8, config.weight_decay});
  const std::size_t spe = config.steps_per_epoch(n);
  const auto schedule = config.make_schedule(n);

  std::vector<double> loss_sum(plan.size(), 0.0), acc_sum(plan.size(), 0.0);
  std::vector<std::size_t> counts(plan.size(), 0);
  auto flush = [&](std::size_t epoch) {
    for (std::size_t k = 0; k < plan.size(); ++k) {
      if (counts[k] == 0) continue;
      b.log.records.push_back({epoch, b.task_names[k], "train", loss_sum[k] / static_cast<double>(counts[k]),
                               acc_sum[k] / static_cast<double>(counts[k])});
      loss_sum[k] = acc_sum[k] = 0.0;
      counts[k] = 0;
    }
  };

  for (std::size_t step = 0; step < schedule.total_steps(); ++step) {
    const std::size_t k = step % plan.size();
    const auto rows = batch_indices(n, batch, spe, config.seed, 0, step);
    Rng view_rng(derive_seed(config.seed, "views", step));
    const auto [v1, v2] = data::make_views(images.select(rows), plan[k].family, view_rng, view_params);
    zero_grads(params);
    const Tensor z1 = projection.forward(hypernet::encode(b.encoder, descriptors[k], v1.to_tensor(), BnMode::train));
    const Tensor z2 = projection.forward(hypernet::encode(b.encoder, descriptors[k], v2.to_tensor(), BnMode::train));
    const Tensor loss = nt_xent_loss(z1, z2, config.temperature);
    if (!std::isfinite(loss.item())) {
      throw DivergenceError("contrastive setting '" + b.task_names[k] + "' diverged at step " + std::to_string(step));
    }
    loss_sum[k] += loss.item();
    acc_sum[k] += contrastive_accuracy(z1, z2);
    ++counts[k];
    b.log.step_losses.push_back(loss.item());
    loss.backward();
    if (config.grad_clip > 0.0) clip_grad_norm(params, config.grad_clip);
    adam_step(params, state, schedule.at(step));
    if ((step + 1) % spe == 0) flush(step / spe);
  }
  flush(schedule.total_steps() / spe);
  b.metadata = {{"kind", "contrastive"},
                {"config", config.to_json()},
                {"images", n},
                {"families", {"ventral", "dorsal"}}};
  return b;
}

}  // namespace hyperinv::training
