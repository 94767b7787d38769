#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hyperinv/data/dataset.hpp"
#include "hyperinv/hypernet/hypernet.hpp"
#include "hyperinv/training/config.hpp"

namespace hyperinv::analysis {

struct BoundInputs {
  double empirical_risk = 0.0;  ///< mean 1-Lipschitz loss on the n training points
  double X = 0.0;               ///< feature norm bound
  double B = 0.0;               ///< head norm bound
  std::size_t n = 1;
  std::size_t cardinality = 1;  ///< |I|, the number of candidate descriptors
  double delta = 0.05;
};

/// empirical_risk + 2XB/sqrt(n) + 3 sqrt(ln(|I|/delta) / (2n)).
/// ContractError unless n >= 1, |I| >= 1 and delta in (0, 1].
double generalization_bound(const BoundInputs& inputs);

struct NormBounds {
  double X = 0.0;  ///< max feature L2 norm over the data
  double B = 0.0;  ///< L2 norm of the flattened head
};

NormBounds estimate_norm_bounds(const Tensor& features, const hypernet::TaskHead& head);
NormBounds estimate_norm_bounds(const hypernet::HyperEncoder& encoder, const hypernet::InvarianceDescriptor& descriptor,
                                const data::ImageStack& images, const hypernet::TaskHead& head);

/// Ramp loss clip(1 - margin, 0, 1), margin = logit of the label minus the
/// largest other logit.
double clipped_margin_loss(std::span<const double> logits, int label);
/// Mean clipped_margin_loss over a batch of logits [B, O].
double surrogate_risk(const Tensor& logits, std::span<const int> labels);

struct BoundTrial {
  std::size_t trial = 0;
  hypernet::InvarianceDescriptor descriptor;  ///< grid descriptor with the lowest training risk
  double train_risk = 0.0;
  double test_risk = 0.0;
  NormBounds norms;
  double bound = 0.0;
  bool violated = false;
  /// Same quantities for one descriptor fixed in advance, with |I| = 1.
  double fixed_train_risk = 0.0;
  double fixed_test_risk = 0.0;
  NormBounds fixed_norms;
  double fixed_bound = 0.0;
};

struct BoundReport {
  double delta = 0.05;
  std::size_t cardinality = 0;
  std::size_t n = 0;
  hypernet::InvarianceDescriptor fixed_descriptor;
  std::vector<BoundTrial> trials;
  std::size_t violations = 0;

  std::string to_csv() const;
};

struct BoundCheckSetup {
  const data::LabeledDataset* train_pool = nullptr;
  const data::LabeledDataset* test_set = nullptr;
  data::LabelField field = data::LabelField::digit;
  std::size_t head_size = 10;
  std::size_t n_per_class = 10;
  std::size_t trials = 20;
  double delta = 0.05;
  int levels = 2;
  hypernet::InvarianceDescriptor fixed_descriptor;  ///< empty: all zeros
};

/// Each trial draws a fresh training sample, fits a head at every grid
/// descriptor, keeps the one with the lowest training surrogate risk and
/// checks test risk <= bound with |I| = levels^K.
BoundReport bound_sanity_check(const hypernet::HyperEncoder& encoder, const BoundCheckSetup& setup,
                               const training::TrainConfig& config);

}  // namespace hyperinv::analysis
