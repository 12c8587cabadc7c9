#include "neuromap/xbar_sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "neuromap/errors.hpp"

namespace neuromap {

SplitWeights split_weights(const WeightMatrix& w) {
  SplitWeights out{WeightMatrix(w.rows, w.cols), WeightMatrix(w.rows, w.cols)};
  for (std::size_t i = 0; i < w.values.size(); ++i) {
    const double v = w.values[i];
    // Explicit comparisons keep -0.0 out of both halves.
    out.positive.values[i] = v > 0.0 ? v : 0.0;
    out.negative.values[i] = v < 0.0 ? -v : 0.0;
  }
  return out;
}

CoreState::CoreState(const WeightMatrix& block, std::vector<double> bias, Activation act,
                     SynapseScheme scheme)
    : inputs_(block.rows), scheme_(scheme), activation_(act), bias_(std::move(bias)) {
  if (bias_.size() != block.cols) {
    throw LengthMismatch("bias has " + std::to_string(bias_.size()) + " values for " +
                         std::to_string(block.cols) + " columns");
  }
  for (std::size_t col = 0; col < block.cols; ++col) {
    for (std::size_t row = 0; row < block.rows; ++row) add_entry(row, block.at(row, col));
    column_start_.push_back(axon_.size());
  }
}

CoreState::CoreState(const CoreBlock& block, Activation act, SynapseScheme scheme)
    : inputs_(block.axons.size()), scheme_(scheme), activation_(act), bias_(block.bias) {
  for (std::size_t col = 0; col < block.neurons.size(); ++col) {
    for (std::size_t e = block.column_start[col]; e < block.column_start[col + 1]; ++e) {
      add_entry(block.entry_axon[e], block.entry_weight[e]);
    }
    column_start_.push_back(axon_.size());
  }
}

void CoreState::add_entry(std::size_t axon, double w) {
  axon_.push_back(axon);
  source_.push_back(w);
  if (scheme_ == SynapseScheme::Split) {
    positive_.push_back(w > 0.0 ? w : 0.0);
    negative_.push_back(w < 0.0 ? -w : 0.0);
  } else {
    positive_.push_back(w);
  }
}

bool CoreState::split_invariants_hold() const noexcept {
  if (scheme_ != SynapseScheme::Split) return true;
  for (std::size_t e = 0; e < source_.size(); ++e) {
    const double p = positive_[e], n = negative_[e];
    if (p < 0.0 || n < 0.0 || std::min(p, n) != 0.0 || p - n != source_[e]) return false;
  }
  return true;
}

std::vector<double> CoreState::potentials(std::span<const double> x) const {
  if (x.size() != inputs_) {
    throw LengthMismatch("core expects " + std::to_string(inputs_) + " inputs, got " +
                         std::to_string(x.size()));
  }
  std::vector<double> y(outputs());
  for (std::size_t col = 0; col < outputs(); ++col) {
    double acc = 0.0;
    if (scheme_ == SynapseScheme::Split) {
      // Physical rows 2a (+x, W+) and 2a+1 (-x, W-), accumulated in row order.
      for (std::size_t e = column_start_[col]; e < column_start_[col + 1]; ++e) {
        const double v = x[axon_[e]];
        acc += v * positive_[e];
        acc += (-v) * negative_[e];
      }
    } else {
      for (std::size_t e = column_start_[col]; e < column_start_[col + 1]; ++e) {
        acc += x[axon_[e]] * positive_[e];
      }
    }
    y[col] = acc + bias_[col];
  }
  return y;
}

std::vector<double> CoreState::mvm(std::span<const double> x) const {
  std::vector<double> y = potentials(x);
  for (double& v : y) v = apply_activation(activation_, v);
  return y;
}

std::vector<double> core_mvm(const CoreState& core, std::span<const double> x) {
  return core.mvm(x);
}

namespace {

struct LoadedCore {
  std::size_t index;
  const CoreBlock* block;
  CoreState state;
};

// Cores grouped by layer with their resolved states, built once per placement.
std::vector<std::vector<LoadedCore>> load_cores(const Placement& p) {
  std::vector<std::vector<LoadedCore>> layers(p.network.layers.size());
  for (std::size_t k = 0; k < p.cores.size(); ++k) {
    const auto& block = p.cores[k];
    if (block.layer >= layers.size()) {
      throw MissingActivation("core " + std::to_string(k) + " references an unknown layer");
    }
    const Activation act = p.network.layers[block.layer].spec.activation;
    layers[block.layer].push_back({k, &block, CoreState(block, act, p.options.scheme)});
  }
  return layers;
}

// Runs every layer; when `potentials` is given it also receives each layer's
// pre-activation values.
std::vector<TensorValue> execute(const Placement& p,
                                 const std::vector<std::vector<LoadedCore>>& layers,
                                 const TensorValue& x,
                                 std::vector<TensorValue>* potentials = nullptr) {
  if (x.shape() != p.network.input) {
    throw DimensionMismatch("input shape " + to_string(x.shape()) + " does not match network input " +
                            to_string(p.network.input));
  }
  std::vector<TensorValue> trace;
  trace.reserve(layers.size() + 1);
  trace.push_back(x);
  std::vector<double> gathered;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const TensorValue& prev = trace.back();
    const auto& in = prev.shape();
    const auto& shape = p.network.layers[i].out;
    TensorValue out(shape);
    TensorValue potential(potentials ? shape : TensorShape{});
    const Activation act = p.network.layers[i].spec.activation;
    std::vector<unsigned char> written(shape.size(), 0);
    // Cores of one layer are independent given the previous layer's trace.
    for (const auto& core : layers[i]) {
      const auto& block = *core.block;
      gathered.resize(block.axons.size());
      for (std::size_t a = 0; a < block.axons.size(); ++a) {
        const auto& src = block.axons[a];
        if (src.layer != i + 1 || src.row < 1 || src.row > in.side || src.col < 1 ||
            src.col > in.side || src.feature < 1 || src.feature > in.channels) {
          throw MissingActivation("layer " + std::to_string(i) + ", core " +
                                  std::to_string(core.index) + ": axon source " + to_string(src) +
                                  " was not produced");
        }
        gathered[a] = prev.at(src.row - 1, src.col - 1, src.feature - 1);
      }
      const std::vector<double> y = core.state.potentials(gathered);
      for (std::size_t col = 0; col < block.neurons.size(); ++col) {
        const auto& id = block.neurons[col];
        const std::size_t slot = out.index(id.row - 1, id.col - 1, id.feature - 1);
        out.data()[slot] = apply_activation(act, y[col]);
        if (potentials) potential.data()[slot] = y[col];
        written[slot] = 1;
      }
    }
    if (std::find(written.begin(), written.end(), 0) != written.end()) {
      throw MissingActivation("layer " + std::to_string(i) + " has neurons no core produced");
    }
    trace.push_back(std::move(out));
    if (potentials) potentials->push_back(std::move(potential));
  }
  return trace;
}

bool within(double got, double want, double tolerance) {
  const double abs_err = std::fabs(got - want);
  return abs_err <= tolerance || abs_err <= tolerance * std::fabs(want);
}

// Compares each core column with the synapses the reference filter defines
// for its neuron: same axons, same weights, same bias.
void audit_weights(const Placement& p, const WeightSet& weights, VerificationReport& report) {
  for (std::size_t k = 0; k < p.cores.size(); ++k) {
    const auto& block = p.cores[k];
    auto& dev = report.layers[block.layer];
    const auto& layer = p.network.layers[block.layer];
    const auto& w = weights[block.layer];
    std::map<NeuronId, std::size_t> axon_of;
    for (std::size_t a = 0; a < block.axons.size(); ++a) axon_of.emplace(block.axons[a], a);

    for (std::size_t col = 0; col < block.neurons.size(); ++col) {
      const auto& id = block.neurons[col];
      if (id.layer != block.layer + 2 || id.row < 1 || id.row > layer.out.side || id.col < 1 ||
          id.col > layer.out.side || id.feature < 1 || id.feature > layer.out.channels) {
        ++dev.weight_mismatches;
        dev.pass = false;
        continue;
      }
      std::map<std::size_t, double> expected;
      bool unplaced = false;
      for_each_in_edge(layer, id.row - 1, id.col - 1, id.feature - 1,
                       [&](std::size_t r, std::size_t c, std::size_t ch, std::size_t kr,
                           std::size_t kc, std::size_t local) {
                         const auto it = axon_of.find({block.layer + 1, ch + 1, r + 1, c + 1});
                         if (it == axon_of.end()) {
                           unplaced = true;
                           return;
                         }
                         expected[it->second] =
                             w.filter[layer.filter_offset(kr, kc, local, id.feature - 1)];
                       });
      std::size_t mismatches = unplaced ? 1 : 0;
      const std::size_t begin = block.column_start[col], end = block.column_start[col + 1];
      if (end - begin != expected.size()) ++mismatches;
      for (std::size_t e = begin; e < end; ++e) {
        const auto it = expected.find(block.entry_axon[e]);
        if (it == expected.end() || !within(block.entry_weight[e], it->second, report.tolerance)) {
          ++mismatches;
        }
      }
      if (!within(block.bias[col], w.bias[id.feature - 1], report.tolerance)) ++mismatches;
      if (mismatches != 0) {
        dev.weight_mismatches += mismatches;
        dev.pass = false;
        if (!dev.worst_core) dev.worst_core = k;
      }
    }
  }
}

}  // namespace

std::vector<TensorValue> run_mapped(const Placement& p, const TensorValue& x) {
  return execute(p, load_cores(p), x);
}

VerificationReport verify(const Placement& p, const WeightSet& weights,
                          const std::vector<TensorValue>& inputs, double tolerance) {
  VerificationReport report;
  report.tolerance = tolerance;
  report.inputs = inputs.size();
  report.layers.resize(p.network.layers.size());
  for (std::size_t i = 0; i < report.layers.size(); ++i) report.layers[i].layer = i;

  const auto cores = load_cores(p);
  const PlacementIndex index(p);
  if (weights.size() != report.layers.size()) {
    throw DimensionMismatch("weight set has " + std::to_string(weights.size()) +
                            " layers, network has " + std::to_string(report.layers.size()));
  }
  for (std::size_t i = 0; i < report.layers.size(); ++i) {
    try {
      check_weights(p.network.layers[i], weights[i]);
    } catch (const Error& e) {
      throw DimensionMismatch("layer " + std::to_string(i) + ": " + e.what());
    }
  }
  audit_weights(p, weights, report);
  for (std::size_t n = 0; n < inputs.size(); ++n) {
    std::vector<TensorValue> mapped, reference, mapped_potential;
    try {
      mapped = execute(p, cores, inputs[n], &mapped_potential);
      reference = run_network(p.network, weights, inputs[n]);
    } catch (const Error& e) {
      throw Error("input " + std::to_string(n) + ": " + e.what());
    }
    for (std::size_t i = 0; i < report.layers.size(); ++i) {
      auto& dev = report.layers[i];
      const TensorValue reference_potential =
          layer_potential(p.network.layers[i], weights[i], reference[i]);
      const auto& shape = reference[i + 1].shape();
      // Records one mapped/reference pair; returns the absolute deviation.
      auto compare = [&](double got, double ref, const NeuronId& id) {
        const double abs_err = std::fabs(got - ref);
        const double rel_err = abs_err / std::max(std::fabs(ref), 1e-12);
        if (!within(got, ref, tolerance)) dev.pass = false;
        if (abs_err > dev.max_abs || (!dev.worst_core && abs_err > 0.0)) {
          dev.max_abs = abs_err;
          if (auto loc = index.find(id)) dev.worst_core = loc->core;
        }
        dev.max_rel = std::max(dev.max_rel, rel_err);
        return abs_err;
      };
      for (std::size_t r = 0; r < shape.side; ++r) {
        for (std::size_t c = 0; c < shape.side; ++c) {
          for (std::size_t f = 0; f < shape.channels; ++f) {
            const NeuronId id{i + 2, f + 1, r + 1, c + 1};
            compare(mapped[i + 1].at(r, c, f), reference[i + 1].at(r, c, f), id);
            dev.max_potential_abs =
                std::max(dev.max_potential_abs, compare(mapped_potential[i].at(r, c, f),
                                                        reference_potential.at(r, c, f), id));
          }
        }
      }
    }
  }
  for (const auto& dev : report.layers) {
    if (!dev.pass && !report.first_failing_layer) report.first_failing_layer = dev.layer;
  }
  report.pass = !report.first_failing_layer.has_value();
  return report;
}

std::string to_json(const VerificationReport& report) {
  nlohmann::json doc;
  doc["tolerance"] = report.tolerance;
  doc["inputs"] = report.inputs;
  doc["pass"] = report.pass;
  doc["first_failing_layer"] =
      report.first_failing_layer ? nlohmann::json(*report.first_failing_layer) : nlohmann::json();
  doc["layers"] = nlohmann::json::array();
  for (const auto& dev : report.layers) {
    doc["layers"].push_back(
        {{"layer", dev.layer},
         {"max_abs", dev.max_abs},
         {"max_rel", dev.max_rel},
         {"max_potential_abs", dev.max_potential_abs},
         {"weight_mismatches", dev.weight_mismatches},
         {"worst_core", dev.worst_core ? nlohmann::json(*dev.worst_core) : nlohmann::json()},
         {"pass", dev.pass}});
  }
  return doc.dump(2);
}

}  // namespace neuromap
