#include "hyperinv/numerics/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hyperinv/errors.hpp"

namespace hyperinv {

AdamState AdamState::for_parameters(std::span<const NamedParameter> params, AdamOptions options) {
  AdamState state;
  state.options = options;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.tensor.numel(), 0.0);
    state.second_moment.emplace_back(p.tensor.numel(), 0.0);
  }
  return state;
}

void adam_step(std::span<NamedParameter> params, AdamState& state, double lr) {
  if (state.first_moment.size() != params.size()) {
    throw ContractError("adam_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                        " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (state.first_moment[i].size() != p.tensor.numel()) {
      throw DimensionError("adam_step: moment buffer of '" + p.name + "' does not match its shape " +
                           shape_to_string(p.tensor.shape()));
    }
    for (std::size_t j = 0; j < p.tensor.grad().size(); ++j) {
      if (!std::isfinite(p.tensor.grad()[j])) {
        throw DivergenceError("adam_step: non-finite gradient in parameter '" + p.name + "' at element " +
                              std::to_string(j));
      }
    }
  }

  ++state.step_count;
  const auto& o = state.options;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.tensor.has_grad()) continue;
    auto w = p.tensor.mutable_data();
    const auto g = p.tensor.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    const double decay = o.weight_decay * p.decay_scale;
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g[j];
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      if (decay > 0.0) w[j] -= lr * decay * w[j];
      w[j] -= lr * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  }
}

double clip_grad_norm(std::span<NamedParameter> params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params)
    for (double g : p.tensor.grad()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double k = max_norm / norm;
    for (auto& p : params) {
      if (!p.tensor.has_grad()) continue;
      for (auto& g : p.tensor.mutable_grad()) g *= k;
    }
  }
  return norm;
}

void zero_grads(std::span<NamedParameter> params) {
  for (auto& p : params) p.tensor.zero_grad();
}

LrSchedule::LrSchedule(ScheduleKind kind, double base_lr, std::size_t total_steps)
    : kind_(kind), base_lr_(base_lr), total_steps_(total_steps) {
  if (!(base_lr > 0.0)) throw ContractError("learning rate schedule: base_lr must be positive");
  if (total_steps == 0) throw ContractError("learning rate schedule: total_steps must be positive");
}

LrSchedule LrSchedule::constant(double base_lr, std::size_t total_steps) {
  return LrSchedule(ScheduleKind::constant, base_lr, total_steps);
}

LrSchedule LrSchedule::cosine(double base_lr, std::size_t total_steps) {
  return LrSchedule(ScheduleKind::cosine, base_lr, total_steps);
}

LrSchedule LrSchedule::multi_step(double base_lr, std::size_t total_steps, std::vector<std::size_t> milestones,
                                  double gamma) {
  LrSchedule s(ScheduleKind::multi_step, base_lr, total_steps);
  std::sort(milestones.begin(), milestones.end());
  s.milestones_ = std::move(milestones);
  s.gamma_ = gamma;
  return s;
}

double LrSchedule::at(std::size_t step) const {
  if (step > total_steps_) {
    throw ContractError("learning rate schedule: step " + std::to_string(step) + " beyond total " +
                        std::to_string(total_steps_));
  }
  switch (kind_) {
    case ScheduleKind::constant:
      return base_lr_;
    case ScheduleKind::cosine: {
      if (step == total_steps_) return 0.0;
      const double frac = static_cast<double>(step) / static_cast<double>(total_steps_);
      return base_lr_ * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
    }
    case ScheduleKind::multi_step: {
      const auto passed = std::upper_bound(milestones_.begin(), milestones_.end(), step) - milestones_.begin();
      return base_lr_ * std::pow(gamma_, static_cast<double>(passed));
    }
  }
  return base_lr_;
}

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::cosine: return "cosine";
    case ScheduleKind::multi_step: return "multi_step";
  }
  return "constant";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "constant") return ScheduleKind::constant;
  if (name == "cosine") return ScheduleKind::cosine;
  if (name == "multi_step" || name == "multistep") return ScheduleKind::multi_step;
  throw ContractError("unknown schedule kind '" + name + "'");
}

}  // namespace hyperinv
