#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace statbonnet {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad axis, inconsistent shapes, unknown names.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Fields that should share a chart or component layout do not.
class ShapeMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// A numerical precondition failed at a specific grid point (singular
/// matrix, non-positive metric, non-finite value, ...).
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, std::optional<std::size_t> point = std::nullopt)
      : Error(what), point_(point) {}

  std::optional<std::size_t> point() const noexcept { return point_; }

 private:
  std::optional<std::size_t> point_;
};

/// An integrability gate (curvature, GCR residual, closedness) was exceeded.
class IntegrabilityError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

}  // namespace statbonnet
