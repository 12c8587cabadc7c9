#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "neuromap/net_ir.hpp"

namespace neuromap {

/// Dense side x side x channels activation volume, indexed (row, col, channel)
/// with the channel fastest.
class TensorValue {
 public:
  TensorValue() = default;
  explicit TensorValue(TensorShape shape, double fill = 0.0)
      : shape_(shape), data_(shape.size(), fill) {}
  /// Throws DimensionMismatch when data.size() != shape.size().
  TensorValue(TensorShape shape, std::vector<double> data);

  const TensorShape& shape() const noexcept { return shape_; }
  std::size_t index(std::size_t row, std::size_t col, std::size_t ch) const noexcept {
    return (row * shape_.side + col) * shape_.channels + ch;
  }
  double at(std::size_t row, std::size_t col, std::size_t ch) const noexcept {
    return data_[index(row, col, ch)];
  }
  double& at(std::size_t row, std::size_t col, std::size_t ch) noexcept {
    return data_[index(row, col, ch)];
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  friend bool operator==(const TensorValue&, const TensorValue&) = default;

 private:
  TensorShape shape_{};
  std::vector<double> data_;
};

}  // namespace neuromap
