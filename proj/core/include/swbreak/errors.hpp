#pragma once

#include <stdexcept>
#include <string>

namespace swbreak {

// Base class for all library failures so callers can catch one type.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

// State violates a physical admissibility requirement (vacuum, cavitation).
struct AdmissibilityError : Error {
  using Error::Error;
};

// Constructed data fails its own verification contract.
struct ConstructionError : Error {
  using Error::Error;
};

// Time stepping failed (instability, NaN, vacuum during a run).
struct SolverError : Error {
  using Error::Error;
};

// A measurement cannot be made from the available data.
struct ExtractionError : Error {
  using Error::Error;
};

// Not enough records/samples/range for a statistical estimate.
struct InsufficientDataError : Error {
  using Error::Error;
};

// Bad or inconsistent run configuration.
struct ConfigError : Error {
  using Error::Error;
};

// Filesystem / serialization failure.
struct IoError : Error {
  using Error::Error;
};

}  // namespace swbreak
