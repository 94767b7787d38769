#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "hyperinv/numerics/tensor.hpp"

namespace hyperinv::hypernet {

/// Requested invariance per transformation family: component k == 1 asks
/// for invariance to family k, 0 for sensitivity. Family order is
/// (rotation, color) for the synthetic tasks and (ventral, dorsal) for the
/// contrastive ones.
struct InvarianceDescriptor {
  std::vector<double> values;

  InvarianceDescriptor() = default;
  explicit InvarianceDescriptor(std::vector<double> v) : values(std::move(v)) {}
  InvarianceDescriptor(std::initializer_list<double> v) : values(v) {}

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t k) const { return values[k]; }
  bool is_binary() const;
  /// Throws ContractError unless every component lies in [0, 1].
  void validate() const;
  Tensor to_tensor(bool requires_grad = false) const;
  static InvarianceDescriptor from_tensor(const Tensor& t);
  /// Components as rounded percentages, e.g. "[61, 65]".
  std::string to_percent_string() const;
  std::string to_string() const;

  friend bool operator==(const InvarianceDescriptor&, const InvarianceDescriptor&) = default;
};

/// Snaps each component to the nearest of {0, 1/(levels-1), ..., 1};
/// ties round up.
InvarianceDescriptor round_descriptor(const InvarianceDescriptor& d, int levels = 2);

/// All levels^K grid descriptors in lexicographic order.
std::vector<InvarianceDescriptor> descriptor_grid(std::size_t k, int levels);

/// [t, 1-t] for t = 0, 1/(points-1), ..., 1.
std::vector<InvarianceDescriptor> interpolation_sweep(std::size_t points);

}  // namespace hyperinv::hypernet
