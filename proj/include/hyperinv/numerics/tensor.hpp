#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hyperinv {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {

using BackwardFn = std::function<void(std::span<const double> out_grad)>;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;

  /// Gradient buffer, zero-initialised on first use.
  std::span<double> grad_buffer();
};

}  // namespace detail

/// Dense row-major float64 array that participates in reverse-mode
/// differentiation.
///
/// A Tensor is a cheap handle; copies share the same node. Op results
/// record their inputs and a backward rule when any input requires a
/// gradient, so the graph lives exactly as long as the handles to it.
/// Leaves (parameters, inputs) may be overwritten in place between graph
/// builds through mutable_data(); op results are never modified.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;

  std::span<const double> data() const;
  /// Write access for leaves only. Throws ContractError on op results.
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t flat_index) const { return data()[flat_index]; }

  bool requires_grad() const;
  bool is_leaf() const;
  bool has_grad() const;
  /// Gradient accumulated by backward(); empty span if none was produced.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  /// Copy of the values with no graph attached.
  Tensor detach(bool requires_grad = false) const;

  /// Reverse-mode sweep from this scalar. Leaf gradients accumulate across
  /// calls; gradients of intermediate results are overwritten.
  void backward() const;

  /// Used by op implementations.
  static Tensor make_result(Shape shape, std::vector<double> value,
                            const std::vector<Tensor>& inputs, detail::BackwardFn backward);
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

/// While alive, ops on the current thread record no graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

}  // namespace hyperinv
