#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spinchain {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Caller broke a precondition (mismatched sizes, out-of-range site, ...).
struct UsageError : Error {
  using Error::Error;
};

/// Physics-level validation failed (non-Hermitian Hamiltonian, invalid
/// state, Kraus set not trace preserving, ...).
struct ValidationError : Error {
  using Error::Error;
};

/// Operator structure outside the supported family (e.g. a term acting on
/// the cut spin other than the two nearest-neighbour bonds).
struct StructureError : Error {
  using Error::Error;
};

/// A configured resource cap was exceeded. For series computations,
/// `order_reached` records the last fully computed order.
struct ResourceError : Error {
  explicit ResourceError(const std::string& msg, int order = -1)
      : Error(msg), order_reached(order) {}
  int order_reached;
};

/// Configuration file could not be parsed or is semantically invalid.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace spinchain
