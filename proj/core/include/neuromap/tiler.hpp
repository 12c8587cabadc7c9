#pragma once

// Axon footprint of neuron tiles and the per-layer tile search that maximizes
// core utilization without splitting any neuron's fan-in across cores.

#include <cstddef>
#include <string>
#include <vector>

#include "neuromap/hardware.hpp"
#include "neuromap/net_ir.hpp"

namespace neuromap {

/// Input neurons per input channel needed by an r x c block of output neurons:
///   K*K + K*S*(c-1) + S*S*(c-1)*(r-1) + K*S*(r-1)
/// which factors as (K + S(r-1)) * (K + S(c-1)). An upper bound on the
/// receptive-field union; exact when S <= K.
std::size_t axon_count(std::size_t k, std::size_t s, std::size_t rows, std::size_t cols) noexcept;

/// A block of output neurons mapped onto one core.
struct TileSpec {
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::size_t features = 1;
  std::size_t axons_per_channel = 1;  // axon_count(K, S, rows, cols)
  std::size_t input_channels = 1;     // input maps feeding the tile

  std::size_t neurons() const noexcept { return rows * cols * features; }
  std::size_t inputs() const noexcept { return axons_per_channel * input_channels; }

  friend bool operator==(const TileSpec&, const TileSpec&) = default;
};

/// Largest number of distinct input channels read by any block of `features`
/// consecutive output maps (blocks aligned at multiples of `features`).
std::size_t block_input_channels(const ShapedLayer& layer, std::size_t features) noexcept;

/// Input neurons a single output neuron reads (window cells x channels).
std::size_t single_neuron_fan_in(const ShapedLayer& layer) noexcept;

/// Feasible tile maximizing mapped neurons. Ties go to the larger
/// rows-used x neurons-used product, then the squarer tile, then fewer axons.
/// Throws FanInExceedsCore (tagged with `layer_index`) when a single neuron's
/// fan-in does not fit.
TileSpec select_tile(const ShapedLayer& layer, const CoreSpec& core,
                     const MappingOptions& options = {}, std::size_t layer_index = 0);

struct LayerUtilization {
  std::size_t layer = 0;
  TileSpec tile;
  std::size_t axons_used = 0;    // physical rows of a full tile, bias included
  std::size_t neurons_used = 0;  // columns of a full tile
  double axon_fraction = 0.0;
  double neuron_fraction = 0.0;
  std::size_t cores = 0;
};

struct UtilizationReport {
  CoreSpec core;
  MappingOptions options;
  std::vector<LayerUtilization> layers;
  std::size_t total_cores = 0;
};

/// Throws FanInExceedsCore naming the first layer that cannot map.
UtilizationReport utilization(const ShapedNetwork& net, const CoreSpec& core,
                              const MappingOptions& options = {});

std::string to_json(const UtilizationReport& report);
std::string to_table(const UtilizationReport& report);

}  // namespace neuromap
