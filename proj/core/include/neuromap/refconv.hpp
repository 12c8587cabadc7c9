#pragma once

// Dense reference execution by direct summation. This is the ground truth the
// crossbar simulator is checked against, so it favours clarity over speed.

#include <cstdint>
#include <string>
#include <vector>

#include "neuromap/net_ir.hpp"
#include "neuromap/tensor.hpp"

namespace neuromap {

/// Filter bank and per-output-channel bias of one layer. The filter layout is
/// given by ShapedLayer::filter_offset: (kernel row, kernel col, input channel,
/// output channel) with the output channel fastest; grouped layers store G
/// such banks back to back.
struct LayerWeights {
  std::vector<double> filter;
  std::vector<double> bias;

  friend bool operator==(const LayerWeights&, const LayerWeights&) = default;
};

using WeightSet = std::vector<LayerWeights>;

/// Throws DimensionMismatch unless `w` matches the layer's dimensions and is finite.
void check_weights(const ShapedLayer& layer, const LayerWeights& w);

/// Fixed uniform 1/K^2 averaging weights used for GlobalAvgPool layers.
LayerWeights average_pool_weights(const ShapedLayer& layer);

/// Uniform [-amplitude, amplitude] filters and biases from a seeded generator.
/// GlobalAvgPool layers always receive their fixed averaging weights.
WeightSet random_weights(const ShapedNetwork& net, std::uint64_t seed, double amplitude = 0.5);

/// Folds a per-output-channel affine y = scale * conv(x) + shift into the
/// filter and bias (batch normalization folded before mapping).
LayerWeights fold_channel_affine(const ShapedLayer& layer, const LayerWeights& w,
                                 const std::vector<double>& scale,
                                 const std::vector<double>& shift);

/// Uniform [-1, 1] input tensor from a seeded generator.
TensorValue random_input(TensorShape shape, std::uint64_t seed);

double apply_activation(Activation act, double v) noexcept;

/// Zero-padded convolution of the layer's kind plus bias, before activation.
/// Each output sums kernel row, kernel column, input channel, all ascending.
TensorValue layer_potential(const ShapedLayer& layer, const LayerWeights& w, const TensorValue& x);

/// layer_potential followed by the layer's activation.
TensorValue run_layer(const ShapedLayer& layer, const LayerWeights& w, const TensorValue& x);

/// Trace of every layer's output, preceded by the input itself.
std::vector<TensorValue> run_network(const ShapedNetwork& net, const WeightSet& weights,
                                     const TensorValue& x);

// On disk: one little-endian float64 file per layer holding the filter followed
// by the bias, plus "weights.json" naming each file and its dimensions.
void save_weights(const ShapedNetwork& net, const WeightSet& weights, const std::string& dir);
/// Throws IoError / FormatError.
WeightSet load_weights(const ShapedNetwork& net, const std::string& dir);

}  // namespace neuromap
