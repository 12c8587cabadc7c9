#include "neuromap/net_ir.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "neuromap/errors.hpp"

namespace neuromap {

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 6> kKindNames{{
    {LayerKind::Standard, "Standard"},
    {LayerKind::Pointwise, "Pointwise"},
    {LayerKind::Depthwise, "Depthwise"},
    {LayerKind::Grouped, "Grouped"},
    {LayerKind::GlobalAvgPool, "GlobalAvgPool"},
    {LayerKind::FullyConnected, "FullyConnected"},
}};

std::string describe(std::size_t index, const LayerSpec& layer) {
  return "layer " + std::to_string(index) + " (" + std::string(to_string(layer.kind)) + ")";
}

}  // namespace

std::string_view to_string(LayerKind kind) noexcept {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::string_view to_string(Activation act) noexcept {
  return act == Activation::ReLU ? "ReLU" : "None";
}

LayerKind parse_layer_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  throw ParseError("unknown layer kind '" + std::string(text) + "'");
}

Activation parse_activation(std::string_view text) {
  if (text == "ReLU") return Activation::ReLU;
  if (text == "None") return Activation::None;
  throw ParseError("unknown activation '" + std::string(text) + "'");
}

LayerSpec LayerSpec::standard(std::size_t k, std::size_t s, std::size_t p, std::size_t m,
                              std::size_t n, Activation act) {
  return {LayerKind::Standard, k, s, p, m, n, 1, 1, act};
}

LayerSpec LayerSpec::pointwise(std::size_t m, std::size_t n, Activation act) {
  return {LayerKind::Pointwise, 1, 1, 0, m, n, 1, 1, act};
}

LayerSpec LayerSpec::depthwise(std::size_t k, std::size_t s, std::size_t p, std::size_t m,
                               std::size_t d, Activation act) {
  return {LayerKind::Depthwise, k, s, p, m, m * d, d, 1, act};
}

LayerSpec LayerSpec::grouped(std::size_t k, std::size_t s, std::size_t p, std::size_t m,
                             std::size_t n, std::size_t g, Activation act) {
  return {LayerKind::Grouped, k, s, p, m, n, 1, g, act};
}

LayerSpec LayerSpec::global_avg_pool(std::size_t side, std::size_t channels) {
  return {LayerKind::GlobalAvgPool, side, side, 0, channels, channels, 1, 1, Activation::None};
}

LayerSpec LayerSpec::fully_connected(std::size_t side, std::size_t m, std::size_t n,
                                     Activation act) {
  return {LayerKind::FullyConnected, side, side, 0, m, n, 1, 1, act};
}

void validate(const LayerSpec& l) {
  auto fail = [&](const std::string& what) {
    throw InvalidSpec(std::string(to_string(l.kind)) + " layer: " + what);
  };
  if (l.K < 1 || l.S < 1 || l.M < 1 || l.N < 1) fail("K, S, M, N must be >= 1");
  if (l.D < 1 || l.G < 1) fail("D and G must be >= 1");
  switch (l.kind) {
    case LayerKind::Standard:
      break;
    case LayerKind::Pointwise:
      if (l.K != 1 || l.S != 1 || l.P != 0) fail("pointwise requires K=1, S=1, P=0");
      break;
    case LayerKind::Depthwise:
      if (l.N != l.M * l.D) fail("depthwise requires N = M * D");
      break;
    case LayerKind::Grouped:
      if (l.M % l.G != 0 || l.N % l.G != 0) fail("G must divide both M and N");
      break;
    case LayerKind::GlobalAvgPool:
      if (l.N != l.M) fail("global average pooling requires N = M");
      if (l.S != l.K || l.P != 0) fail("global average pooling requires S = K, P = 0");
      if (l.D != 1) fail("global average pooling requires D = 1");
      break;
    case LayerKind::FullyConnected:
      if (l.S != l.K || l.P != 0) fail("fully connected requires S = K, P = 0");
      break;
  }
  if (l.kind != LayerKind::Depthwise && l.kind != LayerKind::GlobalAvgPool && l.D != 1) {
    fail("D applies to depthwise layers only");
  }
  if (l.kind != LayerKind::Grouped && l.G != 1) fail("G applies to grouped layers only");
}

std::string to_string(const TensorShape& shape) {
  return std::to_string(shape.side) + "x" + std::to_string(shape.side) + "x" +
         std::to_string(shape.channels);
}

std::size_t ShapedLayer::channels_per_output() const noexcept {
  switch (spec.kind) {
    case LayerKind::Depthwise:
    case LayerKind::GlobalAvgPool:
      return 1;
    case LayerKind::Grouped:
      return spec.M / spec.G;
    default:
      return spec.M;
  }
}

std::size_t ShapedLayer::input_channel(std::size_t oc, std::size_t local) const noexcept {
  switch (spec.kind) {
    case LayerKind::Depthwise:
      return oc / spec.D;
    case LayerKind::GlobalAvgPool:
      return oc;
    case LayerKind::Grouped:
      return (oc / (spec.N / spec.G)) * (spec.M / spec.G) + local;
    default:
      return local;
  }
}

std::size_t ShapedLayer::filter_count() const noexcept {
  const std::size_t kk = spec.K * spec.K;
  switch (spec.kind) {
    case LayerKind::Depthwise:
    case LayerKind::GlobalAvgPool:
      return kk * spec.N;
    default:
      return kk * spec.M * spec.N / spec.G;
  }
}

std::size_t ShapedLayer::filter_offset(std::size_t kr, std::size_t kc, std::size_t local,
                                       std::size_t oc) const noexcept {
  const std::size_t tap = kr * spec.K + kc;
  switch (spec.kind) {
    case LayerKind::Depthwise:
    case LayerKind::GlobalAvgPool:
      // K x K x M x D with output channel m * D + d.
      return tap * spec.N + oc;
    default: {
      // G banks of K x K x (M/G) x (N/G).
      const std::size_t mg = spec.M / spec.G;
      const std::size_t ng = spec.N / spec.G;
      const std::size_t g = oc / ng;
      return g * (spec.K * spec.K * mg * ng) + (tap * mg + local) * ng + (oc % ng);
    }
  }
}

NetworkSpec ShapedNetwork::spec() const {
  NetworkSpec net{name, input, {}};
  net.layers.reserve(layers.size());
  for (const auto& l : layers) net.layers.push_back(l.spec);
  return net;
}

std::size_t output_side(std::size_t in_side, std::size_t k, std::size_t s, std::size_t p) {
  const std::size_t padded = in_side + 2 * p;
  if (s == 0 || padded < k) {
    throw DegenerateOutput("output side < 1 for input " + std::to_string(in_side) + ", K=" +
                           std::to_string(k) + ", S=" + std::to_string(s) +
                           ", P=" + std::to_string(p));
  }
  return (padded - k) / s + 1;
}

ShapedNetwork infer_shapes(const NetworkSpec& net) {
  if (net.input.side < 1 || net.input.channels < 1) {
    throw InvalidSpec("network input must have side >= 1 and channels >= 1");
  }
  ShapedNetwork shaped{net.name, net.input, {}};
  shaped.layers.reserve(net.layers.size());
  TensorShape current = net.input;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& l = net.layers[i];
    try {
      validate(l);
    } catch (const InvalidSpec& e) {
      throw InvalidSpec(describe(i, l) + ": " + e.what());
    }
    if (l.M != current.channels) {
      throw ShapeMismatch(describe(i, l) + ": expects M=" + std::to_string(l.M) +
                          " input channels, previous layer produces " +
                          std::to_string(current.channels));
    }
    if ((l.kind == LayerKind::GlobalAvgPool || l.kind == LayerKind::FullyConnected) &&
        l.K != current.side) {
      throw ShapeMismatch(describe(i, l) + ": K=" + std::to_string(l.K) +
                          " must equal the input side " + std::to_string(current.side));
    }
    std::size_t side = 0;
    try {
      side = output_side(current.side, l.K, l.S, l.P);
    } catch (const DegenerateOutput& e) {
      throw DegenerateOutput(describe(i, l) + ": " + e.what());
    }
    const TensorShape out{side, l.N};
    shaped.layers.push_back({l, current, out});
    current = out;
  }
  return shaped;
}

std::uint64_t mac_cost(const ShapedLayer& layer) {
  const auto& l = layer.spec;
  const std::uint64_t o2 = std::uint64_t{layer.out.side} * layer.out.side;
  const std::uint64_t k2 = std::uint64_t{l.K} * l.K;
  switch (l.kind) {
    case LayerKind::Pointwise:
      return o2 * l.M * l.N;
    case LayerKind::Depthwise:
    case LayerKind::GlobalAvgPool:
      return o2 * k2 * l.M * l.D;
    case LayerKind::Grouped:
      // Sum over G groups of O^2 K^2 (M/G)(N/G).
      return l.G * (o2 * k2 * (l.M / l.G) * (l.N / l.G));
    case LayerKind::Standard:
    case LayerKind::FullyConnected:
      return o2 * k2 * l.M * l.N;
  }
  return 0;
}

ComplexityReport complexity(const ShapedNetwork& net) {
  ComplexityReport report;
  report.per_layer.reserve(net.layers.size());
  for (const auto& l : net.layers) {
    report.per_layer.push_back(mac_cost(l));
    report.total += report.per_layer.back();
  }
  return report;
}

std::vector<std::string> preset_names() { return {"table1-256", "table1-512", "table1-1024"}; }

NetworkSpec preset(std::string_view name) {
  // Channel plan per column; strides are 2 exactly where the spatial side halves.
  struct Plan {
    std::size_t conv1, conv2, conv3, wide;
  };
  Plan plan{};
  if (name == "table1-256") {
    plan = {16, 28, 64, 256};
  } else if (name == "table1-512") {
    plan = {32, 56, 256, 512};
  } else if (name == "table1-1024") {
    plan = {32, 64, 256, 512};
  } else {
    throw UnknownPreset("unknown preset '" + std::string(name) + "'");
  }

  NetworkSpec net{std::string(name), {224, 3}, {}};
  auto& L = net.layers;
  L.push_back(LayerSpec::standard(3, 2, 1, 3, plan.conv1));
  L.push_back(LayerSpec::standard(3, 2, 1, plan.conv1, plan.conv2));
  L.push_back(LayerSpec::standard(3, 2, 1, plan.conv2, plan.conv3));
  // 28x28 block.
  L.push_back(LayerSpec::depthwise(3, 1, 1, plan.conv3));
  L.push_back(LayerSpec::pointwise(plan.conv3, 256));
  L.push_back(LayerSpec::depthwise(3, 2, 1, 256));
  L.push_back(LayerSpec::pointwise(256, plan.wide));
  // 14x14 block: four depthwise/pointwise pairs at constant width.
  for (int i = 0; i < 4; ++i) {
    L.push_back(LayerSpec::depthwise(3, 1, 1, plan.wide));
    L.push_back(LayerSpec::pointwise(plan.wide, plan.wide));
  }
  // 7x7 block.
  L.push_back(LayerSpec::depthwise(3, 2, 1, plan.wide));
  L.push_back(LayerSpec::pointwise(plan.wide, 1000));
  L.push_back(LayerSpec::depthwise(3, 1, 1, 1000));
  L.push_back(LayerSpec::pointwise(1000, 1000));
  L.push_back(LayerSpec::global_avg_pool(7, 1000));
  return net;
}

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
  return *it;
}

std::size_t as_count(const json& v, const std::string& where, std::size_t min_value) {
  if (!v.is_number_integer()) throw ParseError(where + ": expected an integer");
  const auto value = v.get<std::int64_t>();
  if (value < static_cast<std::int64_t>(min_value)) {
    throw ParseError(where + ": must be >= " + std::to_string(min_value));
  }
  return static_cast<std::size_t>(value);
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ParseError(where + ": unknown field '" + key + "'");
  }
}

}  // namespace

std::string to_json(const NetworkSpec& net) {
  json doc;
  doc["name"] = net.name;
  doc["input"] = {{"side", net.input.side}, {"channels", net.input.channels}};
  json layers = json::array();
  for (const auto& l : net.layers) {
    layers.push_back({{"kind", std::string(to_string(l.kind))},
                      {"K", l.K},
                      {"S", l.S},
                      {"P", l.P},
                      {"M", l.M},
                      {"N", l.N},
                      {"D", l.D},
                      {"G", l.G},
                      {"activation", std::string(to_string(l.activation))}});
  }
  doc["layers"] = std::move(layers);
  return doc.dump(2);
}

NetworkSpec network_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("network JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("network JSON: top level must be an object");
  reject_unknown(doc, {"name", "input", "layers"}, "network");

  NetworkSpec net;
  const auto& name = require(doc, "name", "network");
  if (!name.is_string()) throw ParseError("network.name: expected a string");
  net.name = name.get<std::string>();

  const auto& input = require(doc, "input", "network");
  if (!input.is_object()) throw ParseError("network.input: expected an object");
  reject_unknown(input, {"side", "channels"}, "network.input");
  net.input.side = as_count(require(input, "side", "network.input"), "input.side", 1);
  net.input.channels = as_count(require(input, "channels", "network.input"), "input.channels", 1);

  const auto& layers = require(doc, "layers", "network");
  if (!layers.is_array()) throw ParseError("network.layers: expected an array");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string where = "layers[" + std::to_string(i) + "]";
    if (!l.is_object()) throw ParseError(where + ": expected an object");
    reject_unknown(l, {"kind", "K", "S", "P", "M", "N", "D", "G", "activation"}, where);
    LayerSpec spec;
    const auto& kind = require(l, "kind", where);
    if (!kind.is_string()) throw ParseError(where + ".kind: expected a string");
    spec.kind = parse_layer_kind(kind.get<std::string>());
    spec.K = as_count(require(l, "K", where), where + ".K", 1);
    spec.S = as_count(require(l, "S", where), where + ".S", 1);
    spec.P = as_count(require(l, "P", where), where + ".P", 0);
    spec.M = as_count(require(l, "M", where), where + ".M", 1);
    spec.N = as_count(require(l, "N", where), where + ".N", 1);
    if (l.contains("D")) spec.D = as_count(l["D"], where + ".D", 1);
    if (l.contains("G")) spec.G = as_count(l["G"], where + ".G", 1);
    if (l.contains("activation")) {
      if (!l["activation"].is_string()) throw ParseError(where + ".activation: expected a string");
      spec.activation = parse_activation(l["activation"].get<std::string>());
    }
    net.layers.push_back(spec);
  }
  return net;
}

NetworkSpec load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open network file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return network_from_json(buf.str());
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

std::string network_hash(const NetworkSpec& net) { return fnv1a_hex(to_json(net)); }

}  // namespace neuromap
