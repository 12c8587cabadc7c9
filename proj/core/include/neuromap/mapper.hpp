#pragma once

// Mapping of a shaped network onto crossbar cores: neuron naming, the
// inter-layer connectivity list, tile-to-core assignment with Toeplitz weight
// blocks, and the placement artifacts handed to the simulator.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "neuromap/hardware.hpp"
#include "neuromap/net_ir.hpp"
#include "neuromap/refconv.hpp"

namespace neuromap {

/// 1-based neuron coordinate, printed as "L{layer}-F{feature}-N[{row},{col}]".
/// Layer 1 is the network input volume; the output of network layer i
/// (0-based) is layer i + 2.
struct NeuronId {
  std::size_t layer = 1;
  std::size_t feature = 1;
  std::size_t row = 1;
  std::size_t col = 1;

  friend auto operator<=>(const NeuronId&, const NeuronId&) = default;
};

/// Throws ParseError when any index is 0.
NeuronId name_neuron(std::size_t layer, std::size_t feature, std::size_t row, std::size_t col);
std::string to_string(const NeuronId& id);
/// Inverse of to_string; throws ParseError on malformed text.
NeuronId parse_neuron(std::string_view text);

/// Visits the in-bounds window of output neuron (orow, ocol, oc) of `layer`
/// in kernel row, kernel column, local input channel order. Padded positions
/// are skipped. fn(in_row, in_col, in_channel, kr, kc, local), 0-based.
template <typename Fn>
void for_each_in_edge(const ShapedLayer& layer, std::size_t orow, std::size_t ocol,
                      std::size_t oc, Fn&& fn) {
  const auto& spec = layer.spec;
  const auto side = static_cast<std::ptrdiff_t>(layer.in.side);
  const std::size_t locals = layer.channels_per_output();
  for (std::size_t kr = 0; kr < spec.K; ++kr) {
    const auto r = static_cast<std::ptrdiff_t>(orow * spec.S + kr) -
                   static_cast<std::ptrdiff_t>(spec.P);
    if (r < 0 || r >= side) continue;
    for (std::size_t kc = 0; kc < spec.K; ++kc) {
      const auto c = static_cast<std::ptrdiff_t>(ocol * spec.S + kc) -
                     static_cast<std::ptrdiff_t>(spec.P);
      if (c < 0 || c >= side) continue;
      for (std::size_t local = 0; local < locals; ++local) {
        fn(static_cast<std::size_t>(r), static_cast<std::size_t>(c),
           layer.input_channel(oc, local), kr, kc, local);
      }
    }
  }
}

struct Edge {
  NeuronId source;
  NeuronId target;
  // Coordinate of the weight inside the target's filter.
  std::size_t kernel_row = 0;
  std::size_t kernel_col = 0;
  std::size_t local_channel = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct ConnectivityList {
  std::vector<Edge> edges;
};

/// Every in-window, in-bounds synapse of the network, grouped by target.
ConnectivityList build_connectivity(const ShapedNetwork& net);

/// One crossbar core: input axons, output columns and the Toeplitz block
/// stored column-wise over the structural (connectivity-derived) entries.
struct CoreBlock {
  std::size_t layer = 0;            // 0-based network layer
  std::vector<NeuronId> axons;      // logical axons, ascending (row, col, feature)
  std::vector<NeuronId> neurons;    // columns
  std::vector<std::size_t> column_start;  // size neurons + 1
  std::vector<std::uint32_t> entry_axon;  // ascending within each column
  std::vector<double> entry_weight;
  std::vector<double> bias;  // per column

  std::size_t entries() const noexcept { return entry_axon.size(); }
  /// Dense axons x neurons block, zeros where no synapse exists.
  std::vector<std::vector<double>> dense() const;

  friend bool operator==(const CoreBlock&, const CoreBlock&) = default;
};

struct Placement {
  ShapedNetwork network;
  CoreSpec core;
  MappingOptions options;
  std::vector<CoreBlock> cores;

  /// Physical crossbar rows used by core `i` (Split doubles, bias axon counted).
  std::size_t rows_used(std::size_t i) const noexcept {
    return options.physical_rows(cores[i].axons.size());
  }

  friend bool operator==(const Placement&, const Placement&) = default;
};

struct NeuronLocation {
  std::size_t core = 0;
  std::size_t column = 0;
};

/// Per-layer lookup from output neuron to its core column.
class PlacementIndex {
 public:
  explicit PlacementIndex(const Placement& p);
  std::optional<NeuronLocation> find(const NeuronId& id) const;

 private:
  const Placement* placement_;
  // slots_[layer][(row * side + col) * channels + feature]
  std::vector<std::vector<NeuronLocation>> slots_;
};

/// Deterministic mapping: layers in order, tiles row-major over space then by
/// feature block, columns in (row, col, feature) order inside a tile.
/// Throws FanInExceedsCore, DimensionMismatch (weights) or CapacityViolation.
Placement map_network(const ShapedNetwork& net, const WeightSet& weights, const CoreSpec& core,
                      const MappingOptions& options = {});

/// Structural checks: capacity per core, no axon duplicated within a core,
/// every network neuron in exactly one column. Throws CapacityViolation.
void check_placement(const Placement& p);

// Artifacts written by export_placement.
inline constexpr std::string_view kManifestFile = "placement.json";
inline constexpr std::string_view kConnectionFile = "connections.csv";
inline constexpr std::string_view kCoreUsageFile = "core_usage.csv";

/// Weight text form used in the connection list (17 significant digits).
std::string format_weight(double w);

/// Writes placement.json, connections.csv and core_usage.csv into `dir`.
/// Throws IoError.
void export_placement(const Placement& p, const std::string& dir);
/// Throws IoError or FormatError.
Placement import_placement(const std::string& dir);

}  // namespace neuromap
