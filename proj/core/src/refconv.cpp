#include "neuromap/refconv.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "neuromap/errors.hpp"

namespace neuromap {

namespace {

// mt19937_64 output is fixed by the standard; the distributions are not, so
// map the raw bits to [0, 1) ourselves to keep seeded runs portable.
double unit_interval(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * unit_interval(rng);
}

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xffu);
    return r;
  }
  return v;
}

}  // namespace

TensorValue::TensorValue(TensorShape shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw DimensionMismatch("tensor data has " + std::to_string(data_.size()) +
                            " values, shape " + to_string(shape_) + " needs " +
                            std::to_string(shape_.size()));
  }
}

void check_weights(const ShapedLayer& layer, const LayerWeights& w) {
  if (w.filter.size() != layer.filter_count()) {
    throw DimensionMismatch(std::string(to_string(layer.spec.kind)) + " layer expects " +
                            std::to_string(layer.filter_count()) + " filter values, got " +
                            std::to_string(w.filter.size()));
  }
  if (w.bias.size() != layer.spec.N) {
    throw DimensionMismatch("expected " + std::to_string(layer.spec.N) + " bias values, got " +
                            std::to_string(w.bias.size()));
  }
  for (double v : w.filter) {
    if (!std::isfinite(v)) throw DimensionMismatch("non-finite filter value");
  }
  for (double v : w.bias) {
    if (!std::isfinite(v)) throw DimensionMismatch("non-finite bias value");
  }
}

LayerWeights average_pool_weights(const ShapedLayer& layer) {
  const double k2 = static_cast<double>(layer.spec.K * layer.spec.K);
  return {std::vector<double>(layer.filter_count(), 1.0 / k2),
          std::vector<double>(layer.spec.N, 0.0)};
}

WeightSet random_weights(const ShapedNetwork& net, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  WeightSet set;
  set.reserve(net.layers.size());
  for (const auto& layer : net.layers) {
    if (layer.spec.kind == LayerKind::GlobalAvgPool) {
      set.push_back(average_pool_weights(layer));
      continue;
    }
    LayerWeights w;
    w.filter.resize(layer.filter_count());
    w.bias.resize(layer.spec.N);
    for (double& v : w.filter) v = uniform(rng, -amplitude, amplitude);
    for (double& v : w.bias) v = uniform(rng, -amplitude, amplitude);
    set.push_back(std::move(w));
  }
  return set;
}

LayerWeights fold_channel_affine(const ShapedLayer& layer, const LayerWeights& w,
                                 const std::vector<double>& scale,
                                 const std::vector<double>& shift) {
  check_weights(layer, w);
  const std::size_t n = layer.spec.N;
  if (scale.size() != n || shift.size() != n) {
    throw DimensionMismatch("affine scale/shift must have one value per output channel");
  }
  LayerWeights folded = w;
  const std::size_t k = layer.spec.K;
  const std::size_t local = layer.channels_per_output();
  for (std::size_t oc = 0; oc < n; ++oc) {
    for (std::size_t kr = 0; kr < k; ++kr) {
      for (std::size_t kc = 0; kc < k; ++kc) {
        for (std::size_t ic = 0; ic < local; ++ic) {
          folded.filter[layer.filter_offset(kr, kc, ic, oc)] *= scale[oc];
        }
      }
    }
    folded.bias[oc] = scale[oc] * w.bias[oc] + shift[oc];
  }
  return folded;
}

TensorValue random_input(TensorShape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TensorValue x(shape);
  for (double& v : x.data()) v = uniform(rng, -1.0, 1.0);
  return x;
}

double apply_activation(Activation act, double v) noexcept {
  return act == Activation::ReLU ? (v > 0.0 ? v : 0.0) : v;
}

TensorValue layer_potential(const ShapedLayer& layer, const LayerWeights& w, const TensorValue& x) {
  if (x.shape() != layer.in) {
    throw DimensionMismatch("input shape " + to_string(x.shape()) + " does not match layer input " +
                            to_string(layer.in));
  }
  check_weights(layer, w);

  const auto& spec = layer.spec;
  const auto in_side = static_cast<std::ptrdiff_t>(layer.in.side);
  const std::size_t local_channels = layer.channels_per_output();
  TensorValue y(layer.out);

  for (std::size_t orow = 0; orow < layer.out.side; ++orow) {
    for (std::size_t ocol = 0; ocol < layer.out.side; ++ocol) {
      for (std::size_t oc = 0; oc < spec.N; ++oc) {
        double acc = 0.0;
        for (std::size_t kr = 0; kr < spec.K; ++kr) {
          const auto r = static_cast<std::ptrdiff_t>(orow * spec.S + kr) -
                         static_cast<std::ptrdiff_t>(spec.P);
          if (r < 0 || r >= in_side) continue;
          for (std::size_t kc = 0; kc < spec.K; ++kc) {
            const auto c = static_cast<std::ptrdiff_t>(ocol * spec.S + kc) -
                           static_cast<std::ptrdiff_t>(spec.P);
            if (c < 0 || c >= in_side) continue;
            for (std::size_t ic = 0; ic < local_channels; ++ic) {
              acc += x.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c),
                          layer.input_channel(oc, ic)) *
                     w.filter[layer.filter_offset(kr, kc, ic, oc)];
            }
          }
        }
        acc += w.bias[oc];
        y.at(orow, ocol, oc) = acc;
      }
    }
  }
  return y;
}

TensorValue run_layer(const ShapedLayer& layer, const LayerWeights& w, const TensorValue& x) {
  TensorValue y = layer_potential(layer, w, x);
  for (double& v : y.data()) v = apply_activation(layer.spec.activation, v);
  return y;
}

std::vector<TensorValue> run_network(const ShapedNetwork& net, const WeightSet& weights,
                                     const TensorValue& x) {
  if (weights.size() != net.layers.size()) {
    throw DimensionMismatch("weight set has " + std::to_string(weights.size()) +
                            " layers, network has " + std::to_string(net.layers.size()));
  }
  std::vector<TensorValue> trace;
  trace.reserve(net.layers.size() + 1);
  trace.push_back(x);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    try {
      trace.push_back(run_layer(net.layers[i], weights[i], trace.back()));
    } catch (const DimensionMismatch& e) {
      throw DimensionMismatch("layer " + std::to_string(i) + ": " + e.what());
    }
  }
  return trace;
}

void save_weights(const ShapedNetwork& net, const WeightSet& weights, const std::string& dir) {
  namespace fs = std::filesystem;
  if (weights.size() != net.layers.size()) {
    throw DimensionMismatch("weight set does not match the network layer count");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());

  nlohmann::json manifest;
  manifest["format"] = "neuromap-weights-v1";
  manifest["network_hash"] = network_hash(net.spec());
  manifest["layers"] = nlohmann::json::array();
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& layer = net.layers[i];
    check_weights(layer, weights[i]);
    const std::string file = "layer_" + std::to_string(i) + ".bin";
    std::ofstream out(fs::path(dir) / file, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + file + "'");
    auto write = [&out](double v) {
      const auto bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    };
    for (double v : weights[i].filter) write(v);
    for (double v : weights[i].bias) write(v);
    if (!out) throw IoError("short write on '" + file + "'");

    manifest["layers"].push_back({{"file", file},
                                  {"kind", std::string(to_string(layer.spec.kind))},
                                  {"K", layer.spec.K},
                                  {"channels_per_output", layer.channels_per_output()},
                                  {"N", layer.spec.N},
                                  {"filter_count", layer.filter_count()},
                                  {"bias_count", layer.spec.N}});
  }
  std::ofstream out(fs::path(dir) / "weights.json", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write weights.json");
  out << manifest.dump(2) << '\n';
}

WeightSet load_weights(const ShapedNetwork& net, const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "weights.json", std::ios::binary);
  if (!in) throw IoError("cannot open weights.json in '" + dir + "'");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weights.json: ") + e.what());
  }
  try {
    if (manifest.at("format") != "neuromap-weights-v1") throw FormatError("unknown weights format");
    const auto& layers = manifest.at("layers");
    if (layers.size() != net.layers.size()) {
      throw FormatError("weights.json lists " + std::to_string(layers.size()) +
                        " layers, network has " + std::to_string(net.layers.size()));
    }
    WeightSet set;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      const auto& entry = layers[i];
      const auto filter_count = entry.at("filter_count").get<std::size_t>();
      const auto bias_count = entry.at("bias_count").get<std::size_t>();
      if (filter_count != net.layers[i].filter_count() || bias_count != net.layers[i].spec.N) {
        throw FormatError("weights for layer " + std::to_string(i) +
                          " do not match the network dimensions");
      }
      const auto file = entry.at("file").get<std::string>();
      std::ifstream bin(fs::path(dir) / file, std::ios::binary);
      if (!bin) throw IoError("cannot open '" + file + "'");
      std::vector<double> values(filter_count + bias_count);
      for (double& v : values) {
        std::uint64_t bits = 0;
        if (!bin.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
          throw FormatError("'" + file + "' is truncated");
        }
        v = std::bit_cast<double>(to_little_endian(bits));
      }
      if (bin.peek() != std::char_traits<char>::eof()) {
        throw FormatError("'" + file + "' has trailing bytes");
      }
      LayerWeights w;
      w.filter.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(filter_count));
      w.bias.assign(values.begin() + static_cast<std::ptrdiff_t>(filter_count), values.end());
      try {
        check_weights(net.layers[i], w);
      } catch (const DimensionMismatch& e) {
        throw FormatError("'" + file + "': " + e.what());
      }
      set.push_back(std::move(w));
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weights.json: ") + e.what());
  }
}

}  // namespace neuromap
