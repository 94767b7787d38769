#include "hyperinv/analysis/invariance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hyperinv/errors.hpp"
#include "hyperinv/training/features.hpp"

namespace hyperinv::analysis {

namespace {

std::vector<double> resolve_parameters(std::span<const hypernet::InvarianceDescriptor> sweep,
                                       std::span<const double> parameters) {
  if (!parameters.empty()) {
    if (parameters.size() != sweep.size()) throw DimensionError("one parameter per sweep descriptor expected");
    return {parameters.begin(), parameters.end()};
  }
  std::vector<double> out;
  for (const auto& d : sweep) out.push_back(d.size() == 0 ? 0.0 : d[0]);
  return out;
}

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

std::vector<double> InvarianceCurve::parameters() const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.parameter);
  return out;
}

std::vector<double> InvarianceCurve::series(std::size_t family) const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.mean.at(family));
  return out;
}

std::string InvarianceCurve::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "t";
  const std::size_t k = points.empty() ? 0 : points.front().descriptor.size();
  for (std::size_t c = 0; c < k; ++c) os << ",d" << c;
  for (const auto& f : families) os << ',' << f << "_mean," << f << "_std";
  os << ",samples\n";
  for (const auto& p : points) {
    os << p.parameter;
    for (double v : p.descriptor.values) os << ',' << v;
    for (std::size_t f = 0; f < families.size(); ++f) os << ',' << p.mean[f] << ',' << p.stddev[f];
    os << ',' << samples << '\n';
  }
  return os.str();
}

InvarianceCurve measure_invariance(const hypernet::HyperEncoder& encoder, const data::ImageStack& images,
                                   std::span<const data::TransformFamily> families,
                                   std::span<const hypernet::InvarianceDescriptor> sweep, std::size_t n_aug,
                                   std::uint64_t seed, std::span<const double> parameters) {
  if (images.empty()) throw ContractError("measure_invariance: empty image set");
  if (n_aug == 0) throw ContractError("measure_invariance: n_aug must be at least 1");
  const auto params = resolve_parameters(sweep, parameters);

  // Transformed copies: transformed[f] holds n_aug * N images, draw-major.
  std::vector<data::ImageStack> transformed;
  for (std::size_t f = 0; f < families.size(); ++f) {
    data::ImageStack stack(images.channels(), images.height(), images.width());
    for (std::size_t a = 0; a < n_aug; ++a) {
      for (std::size_t i = 0; i < images.size(); ++i) {
        Rng rng(derive_seed(seed, "measure-" + std::to_string(f), a * images.size() + i));
        stack.push_back(data::apply_random(families[f], images.image(i), rng));
      }
    }
    transformed.push_back(std::move(stack));
  }

  InvarianceCurve curve;
  for (const auto& f : families) curve.families.push_back(f.name());
  curve.samples = images.size() * n_aug;
  for (std::size_t s = 0; s < sweep.size(); ++s) {
    InvariancePoint point;
    point.parameter = params[s];
    point.descriptor = sweep[s];
    const Tensor base = training::extract_features(encoder, sweep[s], images);
    const std::size_t d = base.dim(1);
    for (std::size_t f = 0; f < families.size(); ++f) {
      const Tensor other = training::extract_features(encoder, sweep[s], transformed[f]);
      std::vector<double> sims;
      sims.reserve(curve.samples);
      for (std::size_t a = 0; a < n_aug; ++a) {
        for (std::size_t i = 0; i < images.size(); ++i) {
          sims.push_back(cosine_similarity(base.data().subspan(i * d, d),
                                           other.data().subspan((a * images.size() + i) * d, d)));
        }
      }
      const double mean = std::accumulate(sims.begin(), sims.end(), 0.0) / static_cast<double>(sims.size());
      double var = 0.0;
      for (double v : sims) var += (v - mean) * (v - mean);
      var = sims.size() > 1 ? var / static_cast<double>(sims.size() - 1) : 0.0;
      point.mean.push_back(mean);
      point.stddev.push_back(std::sqrt(var));
    }
    curve.points.push_back(std::move(point));
  }
  return curve;
}

std::vector<SweepPoint> loss_descriptor_sweep(const hypernet::HyperEncoder& encoder, const data::LabeledDataset& data,
                                              data::LabelField field, std::size_t head_size,
                                              std::span<const hypernet::InvarianceDescriptor> sweep,
                                              const training::TrainConfig& config,
                                              std::span<const double> parameters) {
  const auto params = resolve_parameters(sweep, parameters);
  std::vector<SweepPoint> out;
  for (std::size_t s = 0; s < sweep.size(); ++s) {
    const Tensor features =
        config.batch_statistics
            ? training::extract_features(training::calibrated_encoder(encoder, sweep[s], data.images), sweep[s],
                                         data.images)
            : training::extract_features(encoder, sweep[s], data.images);
    const auto head = training::fit_head(features, data.labels(field), head_size, config);
    const auto m = training::evaluate_features(head, features, data.labels(field));
    out.push_back({params[s], sweep[s], m.loss, m.accuracy});
  }
  return out;
}

std::string sweep_to_csv(std::span<const SweepPoint> points) {
  std::ostringstream os;
  os.precision(17);
  os << "t";
  const std::size_t k = points.empty() ? 0 : points.front().descriptor.size();
  for (std::size_t c = 0; c < k; ++c) os << ",d" << c;
  os << ",train_loss,train_accuracy\n";
  for (const auto& p : points) {
    os << p.parameter;
    for (double v : p.descriptor.values) os << ',' << v;
    os << ',' << p.train_loss << ',' << p.train_accuracy << '\n';
  }
  return os.str();
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("spearman: inputs differ in length");
  if (x.size() < 2) return 0.0;
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace hyperinv::analysis
