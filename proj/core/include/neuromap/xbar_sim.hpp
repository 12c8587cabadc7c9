#pragma once

// Crossbar matrix-vector simulation under the Split and Differential synapse
// schemes, mapped-network execution and verification against the dense
// reference.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neuromap/hardware.hpp"
#include "neuromap/mapper.hpp"
#include "neuromap/refconv.hpp"
#include "neuromap/tensor.hpp"

namespace neuromap {

/// Dense row-major rows x cols matrix of crossbar weights.
struct WeightMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  WeightMatrix() = default;
  WeightMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  double at(std::size_t r, std::size_t c) const noexcept { return values[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) noexcept { return values[r * cols + c]; }

  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;
};

struct SplitWeights {
  WeightMatrix positive;  // max(W, 0)
  WeightMatrix negative;  // max(-W, 0)
};

SplitWeights split_weights(const WeightMatrix& w);

/// Weights resolved for one scheme, stored sparse by column in ascending
/// axon order. Split keeps W+ and W- side by side (two physical rows per
/// axon); Differential keeps the signed G+ - G- value on one row.
class CoreState {
 public:
  CoreState(const WeightMatrix& block, std::vector<double> bias, Activation act,
            SynapseScheme scheme);
  CoreState(const CoreBlock& block, Activation act, SynapseScheme scheme);

  std::size_t inputs() const noexcept { return inputs_; }
  std::size_t outputs() const noexcept { return column_start_.size() - 1; }
  SynapseScheme scheme() const noexcept { return scheme_; }
  /// Non-negative / signed weight rows physically stored (Split = 2 x inputs).
  std::size_t stored_rows() const noexcept {
    return scheme_ == SynapseScheme::Split ? 2 * inputs_ : inputs_;
  }
  /// Checks W+ >= 0, W- >= 0, min(W+, W-) = 0 and W+ - W- equals the source.
  bool split_invariants_hold() const noexcept;

  /// Column sums plus bias, before the activation. Throws LengthMismatch.
  std::vector<double> potentials(std::span<const double> x) const;
  /// Column outputs for input vector x (length inputs()). Throws LengthMismatch.
  std::vector<double> mvm(std::span<const double> x) const;

 private:
  void add_entry(std::size_t axon, double w);

  std::size_t inputs_ = 0;
  SynapseScheme scheme_;
  Activation activation_;
  std::vector<std::size_t> column_start_{0};
  std::vector<std::size_t> axon_;
  std::vector<double> positive_;  // Split: W+, Differential: G+ - G-
  std::vector<double> negative_;  // Split: W-, unused otherwise
  std::vector<double> source_;    // signed weight as lowered
  std::vector<double> bias_;
};

/// One core's matrix-vector product with activation; see CoreState::mvm.
std::vector<double> core_mvm(const CoreState& core, std::span<const double> x);

/// Executes every core of every layer; returns the input followed by each
/// layer's output. Throws MissingActivation / DimensionMismatch.
std::vector<TensorValue> run_mapped(const Placement& p, const TensorValue& x);

struct LayerDeviation {
  std::size_t layer = 0;
  double max_abs = 0.0;  // over outputs and pre-activation potentials
  double max_rel = 0.0;
  double max_potential_abs = 0.0;
  std::size_t weight_mismatches = 0;  // lowered entries that differ from the filter
  std::optional<std::size_t> worst_core;
  bool pass = true;
};

struct VerificationReport {
  double tolerance = 0.0;
  std::size_t inputs = 0;
  std::vector<LayerDeviation> layers;
  bool pass = true;
  std::optional<std::size_t> first_failing_layer;
};

/// Runs each input through the placement and the dense reference and records
/// per-layer deviations of both the outputs and the pre-activation
/// potentials, so faults hidden behind an inactive ReLU are still caught. An
/// element passes when |mapped - ref| <= tolerance or <= tolerance * |ref|.
/// Independently of the inputs, every lowered crossbar entry and bias is
/// audited against the weight its edge names in `weights`.
VerificationReport verify(const Placement& p, const WeightSet& weights,
                          const std::vector<TensorValue>& inputs, double tolerance = 1e-6);

std::string to_json(const VerificationReport& report);

}  // namespace neuromap
