#pragma once

// Test-only oracles. Each one recomputes a quantity by brute force, without
// going through the library code path it is used to check.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "neuromap/net_ir.hpp"

namespace neuromap::oracle {

/// Distinct input coordinates touched by an r x c block of outputs (per
/// channel), ignoring borders: the receptive-field union.
inline std::size_t receptive_field_union(std::size_t k, std::size_t s, std::size_t rows,
                                         std::size_t cols) {
  std::set<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      for (std::size_t kr = 0; kr < k; ++kr)
        for (std::size_t kc = 0; kc < k; ++kc) cells.emplace(r * s + kr, c * s + kc);
  return cells.size();
}

/// MAC count by explicitly walking every output neuron and every synapse
/// (padded positions included, as the closed-form costs do).
inline std::uint64_t counted_macs(const ShapedLayer& layer) {
  const auto& l = layer.spec;
  std::uint64_t count = 0;
  for (std::size_t orow = 0; orow < layer.out.side; ++orow)
    for (std::size_t ocol = 0; ocol < layer.out.side; ++ocol)
      for (std::size_t oc = 0; oc < l.N; ++oc) {
        std::size_t reads = 0;
        switch (l.kind) {
          case LayerKind::Depthwise:
          case LayerKind::GlobalAvgPool:
            reads = 1;
            break;
          case LayerKind::Grouped:
            reads = l.M / l.G;
            break;
          default:
            reads = l.M;
        }
        for (std::size_t kr = 0; kr < l.K; ++kr)
          for (std::size_t kc = 0; kc < l.K; ++kc)
            for (std::size_t ic = 0; ic < reads; ++ic) ++count;
      }
  return count;
}

/// Distinct input channels feeding output maps [first, last) of a layer,
/// derived from the kind's channel wiring.
inline std::size_t channels_feeding(const LayerSpec& l, std::size_t first, std::size_t last) {
  std::set<std::size_t> channels;
  for (std::size_t oc = first; oc < last; ++oc) {
    switch (l.kind) {
      case LayerKind::Depthwise:
        channels.insert(oc / l.D);
        break;
      case LayerKind::GlobalAvgPool:
        channels.insert(oc);
        break;
      case LayerKind::Grouped: {
        const std::size_t mg = l.M / l.G, g = oc / (l.N / l.G);
        for (std::size_t i = 0; i < mg; ++i) channels.insert(g * mg + i);
        break;
      }
      default:
        for (std::size_t i = 0; i < l.M; ++i) channels.insert(i);
    }
  }
  return channels.size();
}

/// Exhaustive search over every (r, c, F): returns the largest mapped-neuron
/// count among tiles whose footprint (K + S(r-1))(K + S(c-1)) x channels fits
/// `usable_inputs` and whose neurons fit `core_neurons`.
inline std::size_t best_neuron_count(const ShapedLayer& layer, std::size_t usable_inputs,
                                     std::size_t core_neurons) {
  const auto& l = layer.spec;
  std::size_t best = 0;
  for (std::size_t r = 1; r <= layer.out.side; ++r)
    for (std::size_t c = 1; c <= layer.out.side; ++c)
      for (std::size_t f = 1; f <= l.N; ++f) {
        const std::size_t per_channel = (l.K + l.S * (r - 1)) * (l.K + l.S * (c - 1));
        std::size_t widest = 0;
        for (std::size_t first = 0; first < l.N; first += f) {
          widest = std::max(widest, channels_feeding(l, first, std::min(l.N, first + f)));
        }
        if (per_channel * widest <= usable_inputs && r * c * f <= core_neurons) {
          best = std::max(best, r * c * f);
        }
      }
  return best;
}

/// Dense y = x * W (+ bias) over a row-major rows x cols matrix.
inline std::vector<double> dense_product(const std::vector<double>& w, std::size_t rows,
                                         std::size_t cols, const std::vector<double>& x,
                                         const std::vector<double>& bias) {
  std::vector<double> y(cols, 0.0);
  for (std::size_t c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) acc += x[r] * w[r * cols + c];
    y[c] = acc + bias[c];
  }
  return y;
}

/// Random small network drawn from every mappable layer kind, with every
/// layer's single-neuron fan-in kept at or below `max_fan_in`.
inline NetworkSpec random_toy_network(std::mt19937_64& rng, std::size_t max_fan_in,
                                      std::size_t max_side = 16, std::size_t max_channels = 8) {
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  auto act = [&] { return pick(0, 3) == 0 ? Activation::None : Activation::ReLU; };
  NetworkSpec net;
  net.name = "toy";
  net.input = {pick(4, max_side), pick(1, 4)};
  std::size_t side = net.input.side, ch = net.input.channels;
  const std::size_t conv_layers = pick(2, 4);
  for (std::size_t i = 0; i < conv_layers; ++i) {
    const std::size_t k = pick(1, 3), s = pick(1, 2), p = std::min<std::size_t>(pick(0, 1), k - 1);
    if (side + 2 * p < k) break;
    LayerSpec l;
    switch (pick(0, 3)) {
      case 0: {
        const std::size_t n = pick(1, max_channels);
        if (k * k * ch > max_fan_in) continue;
        l = LayerSpec::standard(k, s, p, ch, n, act());
        break;
      }
      case 1:
        if (ch > max_fan_in) continue;
        l = LayerSpec::pointwise(ch, pick(1, max_channels), act());
        break;
      case 2: {
        if (k * k > max_fan_in) continue;
        const std::size_t d = pick(1, std::max<std::size_t>(1, max_channels / ch));
        l = LayerSpec::depthwise(k, s, p, ch, d, act());
        break;
      }
      default: {
        std::vector<std::size_t> groups;
        for (std::size_t g = 1; g <= ch; ++g)
          if (ch % g == 0) groups.push_back(g);
        const std::size_t g = groups[pick(0, groups.size() - 1)];
        const std::size_t n = g * pick(1, std::max<std::size_t>(1, max_channels / g));
        if (k * k * (ch / g) > max_fan_in) continue;
        l = LayerSpec::grouped(k, s, p, ch, n, g, act());
        break;
      }
    }
    net.layers.push_back(l);
    side = (side + 2 * l.P - l.K) / l.S + 1;
    ch = l.N;
  }
  // Optional collapsing head.
  switch (pick(0, 2)) {
    case 0:
      if (side * side <= max_fan_in) net.layers.push_back(LayerSpec::global_avg_pool(side, ch));
      break;
    case 1:
      if (side * side * ch <= max_fan_in) {
        net.layers.push_back(LayerSpec::fully_connected(side, ch, pick(1, max_channels), act()));
        ch = net.layers.back().N;
        side = 1;
        net.layers.push_back(LayerSpec::pointwise(ch, pick(1, max_channels), act()));
      }
      break;
    default:
      break;
  }
  return net;
}

}  // namespace neuromap::oracle
