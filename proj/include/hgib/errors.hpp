#pragma once

#include <stdexcept>
#include <string>

namespace hgib {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operand shapes are incompatible (ShapeMismatch, DimensionMismatch, NonScalarLoss).
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// A scalar argument is outside its admissible range
// (OutOfDomain, InvalidRate, InvalidAlpha, InvalidEpsilon).
struct DomainError : Error {
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

// A forward pass produced NaN or Inf.
struct NonFiniteError : Error {
    explicit NonFiniteError(const std::string& msg) : Error(msg) {}
};

// Zero vertex/hyperedge degree where the caller asked for strict handling.
struct DegenerateStructureError : Error {
    explicit DegenerateStructureError(const std::string& msg) : Error(msg) {}
};

// Input file could not be parsed at all.
struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Input parsed but violates a documented invariant (mask overlap, label range,
// empty class, insufficient unconnected pairs, unknown mask name, ...).
struct ValidationError : Error {
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

}  // namespace hgib
