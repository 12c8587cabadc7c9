#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace neuromap {

/// One crossbar core: `axons` input rows by `neurons` output columns.
struct CoreSpec {
  std::size_t axons = 256;
  std::size_t neurons = 256;

  friend bool operator==(const CoreSpec&, const CoreSpec&) = default;
};

/// Parses "AxR" (e.g. "256x256"); throws ParseError.
CoreSpec parse_core_spec(std::string_view text);
std::string to_string(const CoreSpec& core);

/// How signed weights are stored on the crossbar.
///  Split: non-negative W+ and W- matrices, each input presented as +x and -x
///         on two physical rows.
///  Differential: a device pair per synapse holds G+ - G- on a single row.
enum class SynapseScheme { Split, Differential };

/// Where a column's bias lives.
///  NeuronOffset: an offset register in the neuron, no axon consumed.
///  Axon: a constant-one input axon per core carrying each column's bias.
enum class BiasMode { NeuronOffset, Axon };

std::string_view to_string(SynapseScheme scheme) noexcept;
std::string_view to_string(BiasMode mode) noexcept;
SynapseScheme parse_scheme(std::string_view text);
BiasMode parse_bias_mode(std::string_view text);

struct MappingOptions {
  SynapseScheme scheme = SynapseScheme::Differential;
  BiasMode bias = BiasMode::NeuronOffset;

  /// Physical rows one logical input occupies.
  std::size_t rows_per_input() const noexcept { return scheme == SynapseScheme::Split ? 2 : 1; }
  std::size_t bias_inputs() const noexcept { return bias == BiasMode::Axon ? 1 : 0; }
  /// Logical inputs (network neurons) a core can receive.
  std::size_t usable_inputs(const CoreSpec& core) const noexcept {
    const std::size_t inputs = core.axons / rows_per_input();
    return inputs > bias_inputs() ? inputs - bias_inputs() : 0;
  }
  /// Physical rows used by `inputs` logical inputs plus the bias axon, if any.
  std::size_t physical_rows(std::size_t inputs) const noexcept {
    return (inputs + bias_inputs()) * rows_per_input();
  }

  friend bool operator==(const MappingOptions&, const MappingOptions&) = default;
};

}  // namespace neuromap
