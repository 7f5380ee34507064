#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sociocue {

// Base class for every error the engine raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Frames fed to the flow tracker have different dimensions.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Fewer than the minimum number of trackable corners were found.
class InsufficientTexture : public Error {
 public:
  using Error::Error;
};

// Robust motion fit could not reach the required inlier ratio.
class NoConsensus : public Error {
 public:
  using Error::Error;
};

// A pixel maps to a ray angle beyond the camera's half field of view.
class OutOfField : public Error {
 public:
  using Error::Error;
};

// Pose normal equations are rank-deficient.
class DegenerateConfiguration : public Error {
 public:
  using Error::Error;
};

// Pose refinement stalled without reducing the residual.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

// Eye-corner landmarks coincide; no chip geometry can be derived.
class DegenerateLandmarks : public Error {
 public:
  using Error::Error;
};

// A track observation arrived with a non-increasing timestamp.
class StaleTimestamp : public Error {
 public:
  using Error::Error;
};

// A belt frame field does not fit its wire encoding.
class FieldOverflow : public Error {
 public:
  using Error::Error;
};

// A belt frame failed checksum validation. `bytes_consumed` tells the
// caller how far to advance before rescanning for a sync byte.
class BadChecksum : public Error {
 public:
  BadChecksum(const std::string& what, std::size_t bytes_consumed)
      : Error(what), bytes_consumed(bytes_consumed) {}
  std::size_t bytes_consumed;
};

// Not enough bytes for a complete belt frame. `bytes_consumed` is the
// garbage prefix that can safely be discarded.
class Truncated : public Error {
 public:
  Truncated(const std::string& what, std::size_t bytes_consumed)
      : Error(what), bytes_consumed(bytes_consumed) {}
  std::size_t bytes_consumed;
};

// Malformed text input (scenario, config, or log file).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(what + " (line " + std::to_string(line) + ")"), line(line) {}
  int line;
};

// Structurally valid input that violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace sociocue
