#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pvpms {

// Base for every model failure raised by the library.
class ModelError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NonConvergence : public ModelError {
public:
  using ModelError::ModelError;
};

class DutyOutOfRange : public ModelError {
public:
  explicit DutyOutOfRange(double duty)
      : ModelError("duty " + std::to_string(duty) + " outside [0, 0.95]"), duty_(duty) {}
  double duty() const noexcept { return duty_; }

private:
  double duty_;
};

class Unreachable : public ModelError {
public:
  using ModelError::ModelError;
};

class SingularFit : public ModelError {
public:
  using ModelError::ModelError;
};

class DegenerateSeries : public ModelError {
public:
  using ModelError::ModelError;
};

class GridMismatch : public ModelError {
public:
  using ModelError::ModelError;
};

// Wraps an error raised while simulating one sample of a day.
class SampleError : public ModelError {
public:
  SampleError(std::size_t index, const std::string& what)
      : ModelError("sample " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

private:
  std::size_t index_;
};

// Malformed input files and configuration.
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace pvpms
