#pragma once

#include <stdexcept>
#include <string>

namespace chansel {

// Argument outside the operation's mathematical domain (probabilities, indices, empty refs).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Malformed user-facing text: subset labels, CSV cells, config values.
class ParseError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Channel-count or layer-size mismatch between a model and its input.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class LookupError : public std::out_of_range {
public:
  using std::out_of_range::out_of_range;
};

// Reports that cannot be combined (mismatched rows, incomplete sweeps).
class AggregationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss during training.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(const std::string &what, std::size_t epoch, std::size_t batch)
      : std::runtime_error(what), epoch_(epoch), batch_(batch) {}
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

private:
  std::size_t epoch_;
  std::size_t batch_;
};

// Wraps any failure raised while evaluating a channel subset.
class EvaluationError : public std::runtime_error {
public:
  EvaluationError(const std::string &subset_label, const std::string &cause,
                  bool diverged = false)
      : std::runtime_error("evaluation of subset " + subset_label + " failed: " + cause),
        subset_label_(subset_label), diverged_(diverged) {}
  const std::string &subset_label() const noexcept { return subset_label_; }
  /// True when the underlying failure was a DivergenceError.
  bool diverged() const noexcept { return diverged_; }

private:
  std::string subset_label_;
  bool diverged_;
};

class BudgetError : public std::runtime_error {
public:
  BudgetError(const std::string &what, std::size_t required)
      : std::runtime_error(what), required_(required) {}
  std::size_t required() const noexcept { return required_; }

private:
  std::size_t required_;
};

} // namespace chansel
