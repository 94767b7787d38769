#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hyperinv {

/// Violated precondition or postcondition of an operation.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Tensor shapes that cannot be combined.
class DimensionError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// Integer index (e.g. a class label) outside its valid range.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Malformed input file. Carries the byte offset (or line number for text
/// formats) at which parsing failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hyperinv
