#include "hyperinv/training/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hyperinv/errors.hpp"

namespace hyperinv::training {

namespace {

template <typename EncodeChunk>
Tensor features_in_chunks(const data::ImageStack& images, std::size_t chunk, std::size_t feature_dim,
                          EncodeChunk&& encode_chunk) {
  if (images.empty()) throw ContractError("cannot extract features of an empty image set");
  if (chunk == 0) chunk = 256;
  NoGradGuard guard;
  std::vector<double> out;
  out.reserve(images.size() * feature_dim);
  std::vector<std::size_t> rows;
  for (std::size_t first = 0; first < images.size(); first += chunk) {
    const std::size_t count = std::min(chunk, images.size() - first);
    rows.resize(count);
    std::iota(rows.begin(), rows.end(), first);
    const Tensor f = encode_chunk(images.gather(rows));
    out.insert(out.end(), f.data().begin(), f.data().end());
  }
  return Tensor::from_data({images.size(), feature_dim}, std::move(out));
}

}  // namespace

Metrics evaluate_logits(const Tensor& logits, std::span<const int> labels) {
  if (labels.empty()) throw ContractError("cannot evaluate on an empty dataset");
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw DimensionError("logits " + shape_to_string(logits.shape()) + " do not match " +
                         std::to_string(labels.size()) + " labels");
  }
  NoGradGuard guard;
  Metrics m;
  m.count = labels.size();
  m.loss = softmax_cross_entropy(logits, labels).item();
  const std::size_t classes = logits.dim(1);
  const auto v = logits.data();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double* row = v.data() + i * classes;
    const auto best = static_cast<int>(std::max_element(row, row + classes) - row);
    if (best == labels[i]) ++correct;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  return m;
}

Tensor extract_features(const hypernet::HyperEncoder& encoder, const hypernet::InvarianceDescriptor& descriptor,
                        const data::ImageStack& images, std::size_t chunk) {
  descriptor.validate();
  const Tensor d = descriptor.to_tensor();
  return features_in_chunks(images, chunk, encoder.arch.feature_dim(),
                            [&](const Tensor& x) { return hypernet::encode(encoder, d, x); });
}

Tensor extract_features(const hypernet::ConvEncoder& encoder, const data::ImageStack& images, std::size_t chunk) {
  return features_in_chunks(images, chunk, encoder.arch.feature_dim(),
                            [&](const Tensor& x) { return hypernet::encode(encoder, x); });
}

hypernet::HyperEncoder calibrated_encoder(const hypernet::HyperEncoder& encoder,
                                          const hypernet::InvarianceDescriptor& descriptor,
                                          const data::ImageStack& images) {
  descriptor.validate();
  if (images.size() == 0) throw ContractError("cannot calibrate batchnorm on an empty image set");
  auto out = encoder.frozen_copy();
  NoGradGuard guard;
  hypernet::calibrate_batchnorm(out.arch, hypernet::hyper_forward(out.hyper, descriptor, out.arch), out.bn,
                                images.to_tensor());
  return out;
}

hypernet::ConvEncoder calibrated_encoder(const hypernet::ConvEncoder& encoder, const data::ImageStack& images) {
  if (images.size() == 0) throw ContractError("cannot calibrate batchnorm on an empty image set");
  auto out = encoder.frozen_copy();
  hypernet::calibrate_batchnorm(out.arch, out.kernels, out.bn, images.to_tensor());
  return out;
}

Metrics evaluate_features(const hypernet::TaskHead& head, const Tensor& features, std::span<const int> labels) {
  NoGradGuard guard;
  return evaluate_logits(hypernet::apply_head(head, features), labels);
}

Metrics evaluate(const hypernet::HyperEncoder& encoder, const hypernet::InvarianceDescriptor& descriptor,
                 const hypernet::TaskHead& head, const data::LabeledDataset& dataset, data::LabelField field) {
  if (dataset.size() == 0) throw ContractError("cannot evaluate on an empty dataset");
  return evaluate_features(head, extract_features(encoder, descriptor, dataset.images), dataset.labels(field));
}

Metrics evaluate(const hypernet::ConvEncoder& encoder, const hypernet::TaskHead& head,
                 const data::LabeledDataset& dataset, data::LabelField field) {
  if (dataset.size() == 0) throw ContractError("cannot evaluate on an empty dataset");
  return evaluate_features(head, extract_features(encoder, dataset.images), dataset.labels(field));
}

std::vector<std::size_t> batch_indices(std::size_t n, std::size_t batch, std::size_t steps_per_epoch,
                                       std::uint64_t seed, std::uint64_t stream, std::size_t step) {
  if (n == 0 || batch == 0 || steps_per_epoch == 0) throw ContractError("batch_indices: empty dataset or batch");
  const std::size_t epoch = step / steps_per_epoch;
  const std::size_t within = step % steps_per_epoch;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(seed, "batch-order-" + std::to_string(stream), epoch));
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
  std::vector<std::size_t> out(batch);
  for (std::size_t k = 0; k < batch; ++k) out[k] = perm[(within * batch + k) % n];
  return out;
}

Tensor gather_rows(const Tensor& matrix, std::span<const std::size_t> rows) {
  if (matrix.rank() != 2) throw DimensionError("gather_rows expects a matrix, got " + shape_to_string(matrix.shape()));
  const std::size_t d = matrix.dim(1);
  std::vector<double> out(rows.size() * d);
  const auto v = matrix.data();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= matrix.dim(0)) throw IndexError("gather_rows: row " + std::to_string(rows[i]) + " out of range");
    std::copy_n(v.data() + rows[i] * d, d, out.data() + i * d);
  }
  return Tensor::from_data({rows.size(), d}, std::move(out));
}

std::vector<int> gather_labels(std::span<const int> labels, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(labels[r]);
  return out;
}

hypernet::TaskHead fit_head(const Tensor& features, std::span<const int> labels, std::size_t head_size,
                            const TrainConfig& config, std::vector<double>* losses) {
  const std::size_t n = labels.size();
  if (features.rank() != 2 || features.dim(0) != n) {
    throw DimensionError("fit_head: features " + shape_to_string(features.shape()) + " for " + std::to_string(n) +
                         " labels");
  }
  Rng init(derive_seed(config.seed, "head-init"));
  auto head = hypernet::TaskHead::init(features.dim(1), head_size, init);
  std::vector<NamedParameter> params{{"head.weight", head.weight}};
  auto state = AdamState::for_parameters(params, {0.9, 0.999, 1e-8, config.weight_decay});
  const std::size_t batch = config.effective_batch(n);
  const std::size_t spe = config.steps_per_epoch(n);
  const auto schedule = config.make_schedule(n);
  for (std::size_t step = 0; step < schedule.total_steps(); ++step) {
    const auto rows = batch_indices(n, batch, spe, config.seed, 0, step);
    const Tensor x = batch == n ? features : gather_rows(features, rows);
    const auto y = batch == n ? std::vector<int>(labels.begin(), labels.end()) : gather_labels(labels, rows);
    zero_grads(params);
    const Tensor loss = softmax_cross_entropy(hypernet::apply_head(head, x), y);
    if (!std::isfinite(loss.item())) throw DivergenceError("head fit diverged at step " + std::to_string(step));
    if (losses) losses->push_back(loss.item());
    loss.backward();
    if (config.grad_clip > 0.0) clip_grad_norm(params, config.grad_clip);
    adam_step(params, state, schedule.at(step));
  }
  return head;
}

}  // namespace hyperinv::training
