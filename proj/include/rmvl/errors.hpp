#pragma once

#include <stdexcept>
#include <string>

namespace rmvl {

/// Tensor or grid dimensions disagree with what an operation requires.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A scalar argument or configuration value is outside its valid domain.
class ArgumentError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Filesystem or decode failure.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied callable broke its contract (e.g. a critic that is not differentiable).
class ContractViolation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

}  // namespace rmvl
