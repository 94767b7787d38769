#include "hyperinv/analysis/bound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

#include "hyperinv/errors.hpp"
#include "hyperinv/training/features.hpp"

namespace hyperinv::analysis {

double generalization_bound(const BoundInputs& in) {
  if (!(in.delta > 0.0) || in.delta > 1.0) throw ContractError("bound: delta must lie in (0, 1]");
  if (in.n == 0) throw ContractError("bound: n must be at least 1");
  if (in.cardinality == 0) throw ContractError("bound: |I| must be at least 1");
  if (in.X < 0.0 || in.B < 0.0 || in.empirical_risk < 0.0) {
    throw ContractError("bound: risk and norm bounds must be non-negative");
  }
  const double n = static_cast<double>(in.n);
  return in.empirical_risk + 2.0 * in.X * in.B / std::sqrt(n) +
         3.0 * std::sqrt(std::log(static_cast<double>(in.cardinality) / in.delta) / (2.0 * n));
}

NormBounds estimate_norm_bounds(const Tensor& features, const hypernet::TaskHead& head) {
  if (features.rank() != 2) throw DimensionError("features must be [N, D]");
  NormBounds nb;
  const std::size_t d = features.dim(1);
  for (std::size_t i = 0; i < features.dim(0); ++i) {
    double s = 0.0;
    for (double v : features.data().subspan(i * d, d)) s += v * v;
    nb.X = std::max(nb.X, std::sqrt(s));
  }
  double s = 0.0;
  for (double v : head.weight.data()) s += v * v;
  nb.B = std::sqrt(s);
  return nb;
}

NormBounds estimate_norm_bounds(const hypernet::HyperEncoder& encoder, const hypernet::InvarianceDescriptor& descriptor,
                                const data::ImageStack& images, const hypernet::TaskHead& head) {
  return estimate_norm_bounds(training::extract_features(encoder, descriptor, images), head);
}

double clipped_margin_loss(std::span<const double> logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) throw IndexError("label out of range");
  double other = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < logits.size(); ++j)
    if (static_cast<int>(j) != label) other = std::max(other, logits[j]);
  const double margin = logits[static_cast<std::size_t>(label)] - other;
  return std::clamp(1.0 - margin, 0.0, 1.0);
}

double surrogate_risk(const Tensor& logits, std::span<const int> labels) {
  if (labels.empty() || logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw DimensionError("surrogate_risk: logits do not match labels");
  }
  const std::size_t o = logits.dim(1);
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) s += clipped_margin_loss(logits.data().subspan(i * o, o), labels[i]);
  return s / static_cast<double>(labels.size());
}

std::string BoundReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "trial,descriptor,train_risk,test_risk,X,B,bound,violated,fixed_train_risk,fixed_test_risk,fixed_X,fixed_B,"
        "fixed_bound,delta,cardinality,n\n";
  for (const auto& t : trials) {
    os << t.trial << ",\"" << t.descriptor.to_string() << "\"," << t.train_risk << ',' << t.test_risk << ','
       << t.norms.X << ',' << t.norms.B << ',' << t.bound << ',' << (t.violated ? 1 : 0) << ',' << t.fixed_train_risk
       << ',' << t.fixed_test_risk << ',' << t.fixed_norms.X << ',' << t.fixed_norms.B << ',' << t.fixed_bound << ','
       << delta << ',' << cardinality << ',' << n << '\n';
  }
  return os.str();
}

BoundReport bound_sanity_check(const hypernet::HyperEncoder& encoder, const BoundCheckSetup& setup,
                               const training::TrainConfig& config) {
  if (setup.train_pool == nullptr || setup.test_set == nullptr) throw ContractError("bound check needs data");
  const std::size_t k = encoder.hyper.descriptor_dim();
  const auto grid = hypernet::descriptor_grid(k, setup.levels);
  const hypernet::InvarianceDescriptor fixed =
      setup.fixed_descriptor.size() == 0 ? hypernet::InvarianceDescriptor(std::vector<double>(k, 0.0))
                                         : setup.fixed_descriptor;

  // Features of the whole pool and test set, once per candidate descriptor.
  std::vector<Tensor> pool_features, test_features;
  for (const auto& d : grid) {
    pool_features.push_back(training::extract_features(encoder, d, setup.train_pool->images));
    test_features.push_back(training::extract_features(encoder, d, setup.test_set->images));
  }
  const Tensor fixed_pool = training::extract_features(encoder, fixed, setup.train_pool->images);
  const Tensor fixed_test = training::extract_features(encoder, fixed, setup.test_set->images);
  const auto& test_labels = setup.test_set->labels(setup.field);

  BoundReport report;
  report.delta = setup.delta;
  report.cardinality = grid.size();
  report.fixed_descriptor = fixed;

  for (std::size_t t = 0; t < setup.trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(config.seed, "bound-trial", t);
    const auto sample = data::subsample_per_class(*setup.train_pool, setup.n_per_class, setup.field, trial_seed);
    const auto& rows = sample.provenance->indices;
    const auto& labels = sample.labels(setup.field);
    report.n = labels.size();
    training::TrainConfig trial_config = config;
    trial_config.seed = trial_seed;

    auto fit = [&](const Tensor& pool, const Tensor& test) {
      const Tensor x = training::gather_rows(pool, rows);
      const auto head = training::fit_head(x, labels, setup.head_size, trial_config);
      NoGradGuard guard;
      const double train = surrogate_risk(hypernet::apply_head(head, x), labels);
      const double held_out = surrogate_risk(hypernet::apply_head(head, test), test_labels);
      return std::tuple{train, held_out, estimate_norm_bounds(x, head)};
    };

    BoundTrial trial;
    trial.trial = t;
    trial.train_risk = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto [train, held_out, norms] = fit(pool_features[g], test_features[g]);
      if (train < trial.train_risk) {
        trial.descriptor = grid[g];
        trial.train_risk = train;
        trial.test_risk = held_out;
        trial.norms = norms;
      }
    }
    trial.bound = generalization_bound(
        {trial.train_risk, trial.norms.X, trial.norms.B, labels.size(), grid.size(), setup.delta});
    trial.violated = trial.test_risk > trial.bound;

    const auto [ftrain, ftest, fnorms] = fit(fixed_pool, fixed_test);
    trial.fixed_train_risk = ftrain;
    trial.fixed_test_risk = ftest;
    trial.fixed_norms = fnorms;
    trial.fixed_bound = generalization_bound({ftrain, fnorms.X, fnorms.B, labels.size(), 1, setup.delta});
    if (trial.violated) ++report.violations;
    report.trials.push_back(std::move(trial));
  }
  return report;
}

}  // namespace hyperinv::analysis
