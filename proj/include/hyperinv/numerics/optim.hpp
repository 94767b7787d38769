#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hyperinv/numerics/tensor.hpp"

namespace hyperinv {

/// A trainable leaf with a stable name (used in diagnostics and checkpoints).
struct NamedParameter {
  std::string name;
  Tensor tensor;
  /// Multiplies the optimiser's weight decay for this parameter (0 disables).
  double decay_scale = 1.0;
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Decoupled (AdamW-style) decay; 0 gives plain Adam.
  double weight_decay = 0.0;
};

struct AdamState {
  AdamOptions options;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step_count = 0;

  static AdamState for_parameters(std::span<const NamedParameter> params, AdamOptions options = {});
};

/// One bias-corrected Adam update using each parameter's accumulated
/// gradient. Parameters without a gradient are left untouched. A non-finite
/// gradient aborts the whole step (nothing is modified) with a
/// DivergenceError naming the parameter.
void adam_step(std::span<NamedParameter> params, AdamState& state, double lr);

/// Rescales all gradients so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(std::span<NamedParameter> params, double max_norm);

void zero_grads(std::span<NamedParameter> params);

enum class ScheduleKind { constant, cosine, multi_step };

class LrSchedule {
 public:
  static LrSchedule constant(double base_lr, std::size_t total_steps);
  static LrSchedule cosine(double base_lr, std::size_t total_steps);
  static LrSchedule multi_step(double base_lr, std::size_t total_steps, std::vector<std::size_t> milestones,
                               double gamma);

  /// Learning rate at `step` in [0, total_steps]; ContractError otherwise.
  double at(std::size_t step) const;

  ScheduleKind kind() const { return kind_; }
  double base_lr() const { return base_lr_; }
  std::size_t total_steps() const { return total_steps_; }

 private:
  LrSchedule(ScheduleKind kind, double base_lr, std::size_t total_steps);
  ScheduleKind kind_;
  double base_lr_;
  std::size_t total_steps_;
  std::vector<std::size_t> milestones_;
  double gamma_ = 1.0;
};

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

}  // namespace hyperinv
