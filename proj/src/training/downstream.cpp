#include "hyperinv/training/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "hyperinv/errors.hpp"

namespace hyperinv::training {

DescriptorVariable::DescriptorVariable(std::size_t k, double initial, DescriptorParametrization p)
    : parametrization_(p) {
  if (initial < 0.0 || initial > 1.0) throw ContractError("initial descriptor value must lie in [0,1]");
  double raw = initial;
  if (p == DescriptorParametrization::sigmoid) {
    const double c = std::clamp(initial, 1e-12, 1.0 - 1e-12);
    raw = std::log(c / (1.0 - c));
  }
  raw_ = Tensor::full({k}, raw, true);
}

Tensor DescriptorVariable::value() const {
  return parametrization_ == DescriptorParametrization::sigmoid ? sigmoid(raw_) : raw_;
}

hypernet::InvarianceDescriptor DescriptorVariable::current() const {
  NoGradGuard guard;
  const Tensor v = value();
  return hypernet::InvarianceDescriptor(std::vector<double>(v.data().begin(), v.data().end()));
}

void DescriptorVariable::project() {
  if (parametrization_ != DescriptorParametrization::clamp) return;
  for (auto& v : raw_.mutable_data()) v = std::clamp(v, 0.0, 1.0);
}

ContinuousFit downstream_fit(const hypernet::HyperEncoder& encoder, const data::LabeledDataset& data,
                             data::LabelField field, std::size_t head_size, const TrainConfig& config) {
  const std::size_t n = data.size();
  if (n == 0) throw ContractError("downstream training set is empty");
  auto frozen = encoder.frozen_copy();
  if (frozen.arch.channels != data.images.channels() || frozen.arch.height != data.images.height() ||
      frozen.arch.width != data.images.width()) {
    throw DimensionError("downstream images do not match the encoder input");
  }
  const auto& labels = data.labels(field);
  DescriptorVariable descriptor(frozen.hyper.descriptor_dim(), 0.5, config.parametrization);
  Rng init(derive_seed(config.seed, "head-init"));
  auto head = hypernet::TaskHead::init(frozen.arch.feature_dim(), head_size, init);
  std::vector<NamedParameter> params{descriptor.parameter(), {"head.weight", head.weight}};
  auto state = AdamState::for_parameters(params, {0.9, 0.999, 1e-8, config.weight_decay});

  const std::size_t batch = config.effective_batch(n);
  const std::size_t spe = config.steps_per_epoch(n);
  const auto schedule = config.make_schedule(n);
  const Tensor all = batch == n ? data.images.to_tensor() : Tensor();

  ContinuousFit fit;
  for (std::size_t step = 0; step < schedule.total_steps(); ++step) {
    const auto rows = batch_indices(n, batch, spe, config.seed, 0, step);
    const Tensor x = batch == n ? all : data.images.gather(rows);
    const auto y = batch == n ? labels : gather_labels(labels, rows);
    zero_grads(params);
    const Tensor logits = config.batch_statistics
                              ? hypernet::predict(head, frozen, descriptor.value(), x, BnMode::train)
                              : hypernet::predict(head, std::as_const(frozen), descriptor.value(), x);
    const Tensor loss = softmax_cross_entropy(logits, y);
    if (!std::isfinite(loss.item())) throw DivergenceError("downstream fit diverged at step " + std::to_string(step));
    fit.losses.push_back(loss.item());
    loss.backward();
    if (config.grad_clip > 0.0) clip_grad_norm(params, config.grad_clip);
    adam_step(params, state, schedule.at(step));
    descriptor.project();
    fit.trajectory.push_back(descriptor.current());
  }
  fit.descriptor = descriptor.current();
  fit.head = hypernet::TaskHead{head.weight.detach()};
  fit.encoder = config.batch_statistics ? calibrated_encoder(encoder, fit.descriptor, data.images)
                                        : encoder.frozen_copy();
  return fit;
}

DiscreteFit downstream_fit_discrete(const hypernet::HyperEncoder& encoder, const data::LabeledDataset& data,
                                    data::LabelField field, std::size_t head_size,
                                    const hypernet::InvarianceDescriptor& fitted, const TrainConfig& config,
                                    int levels) {
  DiscreteFit fit;
  fit.descriptor = hypernet::round_descriptor(fitted, levels);
  fit.encoder = config.batch_statistics ? calibrated_encoder(encoder, fit.descriptor, data.images)
                                        : encoder.frozen_copy();
  const Tensor features = extract_features(fit.encoder, fit.descriptor, data.images);
  fit.head = fit_head(features, data.labels(field), head_size, config, &fit.losses);
  fit.head.weight = fit.head.weight.detach();
  return fit;
}

nlohmann::json metrics_json(const Metrics& m) {
  return {{"accuracy", m.accuracy}, {"loss", m.loss}, {"count", m.count}};
}

nlohmann::json DownstreamResult::to_json() const {
  return {{"task", task},
          {"n_per_class", n_per_class},
          {"seed", seed},
          {"levels", levels},
          {"descriptor", continuous.values},
          {"rounded_descriptor", rounded.values},
          {"continuous", {{"train", metrics_json(train_continuous)}, {"test", metrics_json(test_continuous)}}},
          {"discrete", {{"train", metrics_json(train_discrete)}, {"test", metrics_json(test_discrete)}}}};
}

DownstreamResult run_downstream(const hypernet::HyperEncoder& encoder, const data::LabeledDataset& train,
                                const data::LabeledDataset& test, data::LabelField field, std::size_t head_size,
                                const TrainConfig& config, int levels) {
  DownstreamResult r;
  r.task = data::to_string(field);
  r.seed = config.seed;
  r.levels = levels;
  const auto counts = train.class_counts(field);
  r.n_per_class = counts.empty() ? 0 : *std::min_element(counts.begin(), counts.end());

  auto cont = downstream_fit(encoder, train, field, head_size, config);
  r.continuous = cont.descriptor;
  r.continuous_head = cont.head;
  r.train_continuous = evaluate(cont.encoder, r.continuous, r.continuous_head, train, field);
  r.test_continuous = evaluate(cont.encoder, r.continuous, r.continuous_head, test, field);

  auto disc = downstream_fit_discrete(encoder, train, field, head_size, r.continuous, config, levels);
  r.rounded = disc.descriptor;
  r.discrete_head = disc.head;
  r.train_discrete = evaluate(disc.encoder, r.rounded, r.discrete_head, train, field);
  r.test_discrete = evaluate(disc.encoder, r.rounded, r.discrete_head, test, field);
  return r;
}

nlohmann::json BaselineResult::to_json() const {
  return {{"task", task},
          {"n_per_class", n_per_class},
          {"seed", seed},
          {"train", metrics_json(train)},
          {"test", metrics_json(test)}};
}

BaselineResult run_mtl_downstream(const hypernet::ConvEncoder& encoder, const data::LabeledDataset& train,
                                  const data::LabeledDataset& test, data::LabelField field, std::size_t head_size,
                                  const TrainConfig& config) {
  BaselineResult r;
  r.task = data::to_string(field);
  r.seed = config.seed;
  const auto counts = train.class_counts(field);
  r.n_per_class = counts.empty() ? 0 : *std::min_element(counts.begin(), counts.end());
  r.encoder = config.batch_statistics ? calibrated_encoder(encoder, train.images) : encoder.frozen_copy();
  const Tensor train_features = extract_features(r.encoder, train.images);
  r.head = fit_head(train_features, train.labels(field), head_size, config);
  r.train = evaluate_features(r.head, train_features, train.labels(field));
  r.test = evaluate(r.encoder, r.head, test, field);
  return r;
}

}  // namespace hyperinv::training
