#include "neuromap/tiler.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "neuromap/errors.hpp"

namespace neuromap {

std::size_t axon_count(std::size_t k, std::size_t s, std::size_t rows, std::size_t cols) noexcept {
  return k * k + k * s * (cols - 1) + s * s * (cols - 1) * (rows - 1) + k * s * (rows - 1);
}

std::size_t block_input_channels(const ShapedLayer& layer, std::size_t features) noexcept {
  const auto& spec = layer.spec;
  if (features == 0) return 0;
  std::size_t widest = 0;
  switch (spec.kind) {
    case LayerKind::Depthwise:
    case LayerKind::GlobalAvgPool:
    case LayerKind::Grouped:
      for (std::size_t first = 0; first < spec.N; first += features) {
        const std::size_t last = std::min(spec.N, first + features) - 1;
        // Input channels read by consecutive output maps are contiguous.
        const std::size_t lo = layer.input_channel(first, 0);
        const std::size_t hi = layer.input_channel(last, layer.channels_per_output() - 1);
        widest = std::max(widest, hi - lo + 1);
      }
      return widest;
    default:
      return spec.M;
  }
}

std::size_t single_neuron_fan_in(const ShapedLayer& layer) noexcept { return layer.fan_in(); }

namespace {

struct Candidate {
  TileSpec tile;
  std::uint64_t rows_times_neurons = 0;
};

// True when `a` is strictly preferable to `b`.
bool better(const Candidate& a, const Candidate& b) {
  if (a.tile.neurons() != b.tile.neurons()) return a.tile.neurons() > b.tile.neurons();
  if (a.rows_times_neurons != b.rows_times_neurons) {
    return a.rows_times_neurons > b.rows_times_neurons;
  }
  const auto skew = [](const TileSpec& t) {
    return t.rows > t.cols ? t.rows - t.cols : t.cols - t.rows;
  };
  if (skew(a.tile) != skew(b.tile)) return skew(a.tile) < skew(b.tile);
  return a.tile.axons_per_channel < b.tile.axons_per_channel;
}

}  // namespace

TileSpec select_tile(const ShapedLayer& layer, const CoreSpec& core, const MappingOptions& options,
                     std::size_t layer_index) {
  const std::size_t usable = options.usable_inputs(core);
  const std::size_t fan_in = single_neuron_fan_in(layer);
  if (fan_in > usable) throw FanInExceedsCore(layer_index, fan_in, usable);

  const auto& spec = layer.spec;
  const std::size_t side = layer.out.side;
  bool found = false;
  Candidate best;
  for (std::size_t r = 1; r <= side; ++r) {
    for (std::size_t c = 1; c <= side; ++c) {
      if (r * c > core.neurons) break;
      const std::size_t per_channel = axon_count(spec.K, spec.S, r, c);
      if (per_channel > usable) break;
      const std::size_t max_features = std::min(spec.N, core.neurons / (r * c));
      // For fixed (r, c) the largest feasible F maps the most neurons.
      for (std::size_t f = max_features; f >= 1; --f) {
        const std::size_t channels = block_input_channels(layer, f);
        if (per_channel * channels > usable) continue;
        Candidate cand{{r, c, f, per_channel, channels}, 0};
        cand.rows_times_neurons =
            std::uint64_t{options.physical_rows(cand.tile.inputs())} * cand.tile.neurons();
        if (!found || better(cand, best)) {
          best = cand;
          found = true;
        }
        break;
      }
    }
  }
  if (!found) {
    // Unreachable when the single-neuron check passed: (1, 1, 1) always fits.
    throw CapacityViolation("no feasible tile for layer " + std::to_string(layer_index));
  }
  if (best.tile.inputs() > usable || best.tile.neurons() > core.neurons) {
    throw CapacityViolation("selected tile violates core capacity on layer " +
                            std::to_string(layer_index));
  }
  return best.tile;
}

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

UtilizationReport utilization(const ShapedNetwork& net, const CoreSpec& core,
                              const MappingOptions& options) {
  UtilizationReport report{core, options, {}, 0};
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& layer = net.layers[i];
    LayerUtilization lu;
    lu.layer = i;
    lu.tile = select_tile(layer, core, options, i);
    lu.axons_used = options.physical_rows(lu.tile.inputs());
    lu.neurons_used = lu.tile.neurons();
    lu.axon_fraction = static_cast<double>(lu.axons_used) / static_cast<double>(core.axons);
    lu.neuron_fraction = static_cast<double>(lu.neurons_used) / static_cast<double>(core.neurons);
    lu.cores = ceil_div(layer.out.side, lu.tile.rows) * ceil_div(layer.out.side, lu.tile.cols) *
               ceil_div(layer.spec.N, lu.tile.features);
    report.total_cores += lu.cores;
    report.layers.push_back(lu);
  }
  return report;
}

std::string to_json(const UtilizationReport& report) {
  nlohmann::json doc;
  doc["core"] = {{"axons", report.core.axons}, {"neurons", report.core.neurons}};
  doc["scheme"] = std::string(to_string(report.options.scheme));
  doc["bias"] = std::string(to_string(report.options.bias));
  doc["layers"] = nlohmann::json::array();
  for (const auto& l : report.layers) {
    doc["layers"].push_back({{"layer", l.layer},
                             {"tile",
                              {{"rows", l.tile.rows},
                               {"cols", l.tile.cols},
                               {"features", l.tile.features},
                               {"axons_per_channel", l.tile.axons_per_channel},
                               {"input_channels", l.tile.input_channels}}},
                             {"axons_used", l.axons_used},
                             {"neurons_used", l.neurons_used},
                             {"axon_fraction", l.axon_fraction},
                             {"neuron_fraction", l.neuron_fraction},
                             {"cores", l.cores}});
  }
  doc["total_cores"] = report.total_cores;
  return doc.dump(2);
}

std::string to_table(const UtilizationReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %-14s %-14s %-8s %-7s %-8s %s\n", "layer", "tile r*c*F",
                "N_axons*M_tile", "neurons", "axon%", "neuron%", "cores");
  out << line;
  for (const auto& l : report.layers) {
    const std::string tile = std::to_string(l.tile.rows) + "x" + std::to_string(l.tile.cols) +
                             "x" + std::to_string(l.tile.features);
    const std::string axons =
        std::to_string(l.tile.axons_per_channel) + "*" + std::to_string(l.tile.input_channels);
    std::snprintf(line, sizeof line, "%-6zu %-14s %-14s %-8zu %-7.1f %-8.1f %zu\n", l.layer,
                  tile.c_str(), axons.c_str(), l.neurons_used, 100.0 * l.axon_fraction,
                  100.0 * l.neuron_fraction, l.cores);
    out << line;
  }
  out << "total cores: " << report.total_cores << '\n';
  return out.str();
}

}  // namespace neuromap
