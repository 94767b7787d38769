#include "hyperinv/hypernet/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hyperinv/errors.hpp"

namespace hyperinv::hypernet {

bool InvarianceDescriptor::is_binary() const {
  for (double v : values)
    if (v != 0.0 && v != 1.0) return false;
  return true;
}

void InvarianceDescriptor::validate() const {
  if (values.empty()) throw ContractError("invariance descriptor is empty");
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw ContractError("invariance descriptor component outside [0,1]: " + to_string());
  }
}

Tensor InvarianceDescriptor::to_tensor(bool requires_grad) const {
  return Tensor::from_data(Shape{values.size()}, values, requires_grad);
}

InvarianceDescriptor InvarianceDescriptor::from_tensor(const Tensor& t) {
  return InvarianceDescriptor(std::vector<double>(t.data().begin(), t.data().end()));
}

std::string InvarianceDescriptor::to_percent_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) os << ", ";
    os << static_cast<long>(std::lround(values[k] * 100.0));
  }
  os << ']';
  return os.str();
}

std::string InvarianceDescriptor::to_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) os << ", ";
    os << values[k];
  }
  os << ']';
  return os.str();
}

InvarianceDescriptor round_descriptor(const InvarianceDescriptor& d, int levels) {
  if (levels < 2) throw ContractError("round_descriptor: levels must be >= 2");
  const double steps = static_cast<double>(levels - 1);
  InvarianceDescriptor out = d;
  for (auto& v : out.values) {
    const double k = std::clamp(std::floor(v * steps + 0.5), 0.0, steps);
    v = k / steps;
  }
  return out;
}

std::vector<InvarianceDescriptor> descriptor_grid(std::size_t k, int levels) {
  if (levels < 2) throw ContractError("descriptor_grid: levels must be >= 2");
  std::vector<InvarianceDescriptor> grid;
  std::size_t total = 1;
  for (std::size_t i = 0; i < k; ++i) total *= static_cast<std::size_t>(levels);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::vector<double> v(k);
    std::size_t rest = idx;
    for (std::size_t i = k; i-- > 0;) {
      v[i] = static_cast<double>(rest % levels) / static_cast<double>(levels - 1);
      rest /= levels;
    }
    grid.emplace_back(std::move(v));
  }
  return grid;
}

std::vector<InvarianceDescriptor> interpolation_sweep(std::size_t points) {
  if (points == 0) throw ContractError("interpolation_sweep: need at least one point");
  std::vector<InvarianceDescriptor> out;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
    out.push_back({t, 1.0 - t});
  }
  return out;
}

}  // namespace hyperinv::hypernet
