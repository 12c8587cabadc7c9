#pragma once

// Network intermediate representation: layer specifications, square-tensor
// shape inference, MAC-cost accounting and the built-in architecture presets.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace neuromap {

enum class LayerKind { Standard, Pointwise, Depthwise, Grouped, GlobalAvgPool, FullyConnected };
enum class Activation { ReLU, None };

std::string_view to_string(LayerKind kind) noexcept;
std::string_view to_string(Activation act) noexcept;
LayerKind parse_layer_kind(std::string_view text);
Activation parse_activation(std::string_view text);

/// One layer of the source network. Field names follow the usual convolution
/// symbols: K kernel side, S stride, P zero padding per side, M input channels,
/// N output channels, D depth multiplier (Depthwise), G group count (Grouped).
struct LayerSpec {
  LayerKind kind = LayerKind::Standard;
  std::size_t K = 1;
  std::size_t S = 1;
  std::size_t P = 0;
  std::size_t M = 1;
  std::size_t N = 1;
  std::size_t D = 1;
  std::size_t G = 1;
  Activation activation = Activation::ReLU;

  static LayerSpec standard(std::size_t k, std::size_t s, std::size_t p, std::size_t m,
                            std::size_t n, Activation act = Activation::ReLU);
  static LayerSpec pointwise(std::size_t m, std::size_t n, Activation act = Activation::ReLU);
  static LayerSpec depthwise(std::size_t k, std::size_t s, std::size_t p, std::size_t m,
                             std::size_t d = 1, Activation act = Activation::ReLU);
  static LayerSpec grouped(std::size_t k, std::size_t s, std::size_t p, std::size_t m,
                           std::size_t n, std::size_t g, Activation act = Activation::ReLU);
  static LayerSpec global_avg_pool(std::size_t side, std::size_t channels);
  static LayerSpec fully_connected(std::size_t side, std::size_t m, std::size_t n,
                                   Activation act = Activation::ReLU);

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Throws InvalidSpec when the per-kind field invariants are violated.
void validate(const LayerSpec& layer);

/// Square activation volume: side x side x channels.
struct TensorShape {
  std::size_t side = 1;
  std::size_t channels = 1;

  std::size_t size() const noexcept { return side * side * channels; }
  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

std::string to_string(const TensorShape& shape);

struct NetworkSpec {
  std::string name;
  TensorShape input;
  std::vector<LayerSpec> layers;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// A layer annotated with its inferred input and output shapes.
struct ShapedLayer {
  LayerSpec spec;
  TensorShape in;
  TensorShape out;

  /// Input channels read by one output neuron.
  std::size_t channels_per_output() const noexcept;
  /// Global input channel read at local position `local` by output channel `oc`.
  std::size_t input_channel(std::size_t oc, std::size_t local) const noexcept;
  /// Window cells per output neuron including padded positions.
  std::size_t fan_in() const noexcept { return spec.K * spec.K * channels_per_output(); }
  /// Number of filter coefficients stored for this layer.
  std::size_t filter_count() const noexcept;
  /// Flat filter index of (kernel row, kernel col, local input channel, output channel).
  std::size_t filter_offset(std::size_t kr, std::size_t kc, std::size_t local,
                            std::size_t oc) const noexcept;
  /// Output neuron count of the layer.
  std::size_t neurons() const noexcept { return out.size(); }

  friend bool operator==(const ShapedLayer&, const ShapedLayer&) = default;
};

struct ShapedNetwork {
  std::string name;
  TensorShape input;
  std::vector<ShapedLayer> layers;

  TensorShape output() const noexcept { return layers.empty() ? input : layers.back().out; }
  NetworkSpec spec() const;

  friend bool operator==(const ShapedNetwork&, const ShapedNetwork&) = default;
};

/// Output side floor((I - K + 2P) / S) + 1; throws DegenerateOutput when < 1.
std::size_t output_side(std::size_t in_side, std::size_t k, std::size_t s, std::size_t p);

/// Annotates every layer with its input/output shape. Throws ShapeMismatch
/// when channel chaining breaks, DegenerateOutput on an empty output and
/// InvalidSpec on malformed layers. Either every layer is annotated or
/// nothing is returned.
ShapedNetwork infer_shapes(const NetworkSpec& net);

/// Multiply-accumulate count of one shaped layer.
std::uint64_t mac_cost(const ShapedLayer& layer);

struct ComplexityReport {
  std::vector<std::uint64_t> per_layer;
  std::uint64_t total = 0;
};

ComplexityReport complexity(const ShapedNetwork& net);

/// Names accepted by preset().
std::vector<std::string> preset_names();

/// Built-in architectures for 256, 512 and 1024 axon cores:
/// "table1-256", "table1-512", "table1-1024". Throws UnknownPreset.
NetworkSpec preset(std::string_view name);

// JSON serialization: {name, input:{side,channels}, layers:[{kind,K,S,P,M,N,D,G,activation}]}.
std::string to_json(const NetworkSpec& net);
/// Throws ParseError on malformed JSON, unknown fields or bad values.
NetworkSpec network_from_json(std::string_view text);
NetworkSpec load_network(const std::string& path);

/// Stable 64-bit FNV-1a digest of the canonical JSON form, as 16 hex digits.
std::string network_hash(const NetworkSpec& net);
std::string fnv1a_hex(std::string_view bytes);

}  // namespace neuromap
