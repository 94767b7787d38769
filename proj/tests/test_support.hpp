#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "hyperinv/numerics/rng.hpp"
#include "hyperinv/numerics/tensor.hpp"

namespace hyperinv::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = false, double scale = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = scale * rng.normal();
  return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

/// ||analytic - numeric|| / (||analytic|| + ||numeric||) for the flattened
/// gradient of every leaf, maximised over leaves. Five-point central
/// differences with step h.
inline double max_fd_error(const std::function<Tensor()>& f, std::vector<Tensor> leaves, double h = 1e-5) {
  for (auto& l : leaves) l.zero_grad();
  f().backward();
  double worst = 0.0;
  for (auto& l : leaves) {
    std::vector<double> analytic(l.grad().begin(), l.grad().end());
    if (analytic.empty()) analytic.assign(l.numel(), 0.0);
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < l.numel(); ++i) {
      const double x0 = l.data()[i];
      auto at = [&](double offset) {
        l.mutable_data()[i] = x0 + offset;
        return f().item();
      };
      const double numeric = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
      l.mutable_data()[i] = x0;
      diff += (analytic[i] - numeric) * (analytic[i] - numeric);
      na += analytic[i] * analytic[i];
      nn += numeric * numeric;
    }
    const double denom = std::sqrt(na) + std::sqrt(nn);
    worst = std::max(worst, denom == 0.0 ? 0.0 : std::sqrt(diff) / denom);
  }
  return worst;
}

}  // namespace hyperinv::testing
