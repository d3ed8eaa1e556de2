#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace krf {

// Base of every failure raised by the library. Callers that only need a
// message can catch this; the pipeline maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidClass : public Error {
 public:
  using Error::Error;
};

class NonPositiveInitialMetric : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class PositivityLoss : public Error {
 public:
  PositivityLoss(std::size_t fibre_index, std::size_t base_index, double t, const std::string& what)
      : Error(what), fibre_index_(fibre_index), base_index_(base_index), t_(t) {}

  std::size_t fibre_index() const { return fibre_index_; }
  std::size_t base_index() const { return base_index_; }
  double time() const { return t_; }

 private:
  std::size_t fibre_index_;
  std::size_t base_index_;
  double t_;
};

class NormalizationFailure : public Error {
 public:
  using Error::Error;
};

class NonZeroMass : public Error {
 public:
  using Error::Error;
};

class NewtonDivergence : public Error {
 public:
  using Error::Error;
};

class StepSizeUnderflow : public Error {
 public:
  using Error::Error;
};

class MaxStepsExceeded : public Error {
 public:
  using Error::Error;
};

class InsufficientWindow : public Error {
 public:
  using Error::Error;
};

class MissingSeries : public Error {
 public:
  using Error::Error;
};

class VPositivityFailure : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SnapshotFormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace krf
