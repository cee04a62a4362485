#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsinr {

/// Operand shapes are incompatible (matmul inner extents, broadcasting, ...).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller broke an API precondition (non-scalar loss, empty tape, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid model, training or synthesis configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Failure inside a feature encoder, including the subprocess protocol.
class EncoderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data (CSV parse failures, NaN cells, bad labels).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A metric is undefined for the given input (e.g. single-class truth).
class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Training produced a non-finite loss.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace tsinr
