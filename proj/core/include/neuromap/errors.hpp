#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace neuromap {

/// Base class for every error raised by the compiler and simulator.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class DegenerateOutput : public Error {
 public:
  using Error::Error;
};

class UnknownPreset : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A layer whose single-neuron fan-in does not fit the axons of one core.
/// Mapping it would require splitting the weight matrix, which is not allowed.
class FanInExceedsCore : public Error {
 public:
  FanInExceedsCore(std::size_t layer, std::size_t fan_in, std::size_t usable_axons)
      : Error("layer " + std::to_string(layer) + ": fan-in " + std::to_string(fan_in) +
              " exceeds " + std::to_string(usable_axons) + " usable axons per core"),
        layer_(layer),
        fan_in_(fan_in),
        usable_axons_(usable_axons) {}

  std::size_t layer() const noexcept { return layer_; }
  std::size_t fan_in() const noexcept { return fan_in_; }
  std::size_t usable_axons() const noexcept { return usable_axons_; }

 private:
  std::size_t layer_;
  std::size_t fan_in_;
  std::size_t usable_axons_;
};

class CapacityViolation : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class MissingActivation : public Error {
 public:
  using Error::Error;
};

}  // namespace neuromap
