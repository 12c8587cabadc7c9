#include "neuromap/hardware.hpp"

#include <charconv>

#include "neuromap/errors.hpp"

namespace neuromap {

namespace {

std::size_t parse_positive(std::string_view text, std::string_view whole) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || value == 0) {
    throw ParseError("core spec '" + std::string(whole) + "' must be AxR with positive integers");
  }
  return value;
}

}  // namespace

CoreSpec parse_core_spec(std::string_view text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string_view::npos) {
    throw ParseError("core spec '" + std::string(text) + "' must be AxR");
  }
  return {parse_positive(text.substr(0, x), text), parse_positive(text.substr(x + 1), text)};
}

std::string to_string(const CoreSpec& core) {
  return std::to_string(core.axons) + "x" + std::to_string(core.neurons);
}

std::string_view to_string(SynapseScheme scheme) noexcept {
  return scheme == SynapseScheme::Split ? "split" : "differential";
}

std::string_view to_string(BiasMode mode) noexcept {
  return mode == BiasMode::Axon ? "axon" : "neuron";
}

SynapseScheme parse_scheme(std::string_view text) {
  if (text == "split") return SynapseScheme::Split;
  if (text == "differential") return SynapseScheme::Differential;
  throw ParseError("unknown synapse scheme '" + std::string(text) + "'");
}

BiasMode parse_bias_mode(std::string_view text) {
  if (text == "axon") return BiasMode::Axon;
  if (text == "neuron") return BiasMode::NeuronOffset;
  throw ParseError("unknown bias mode '" + std::string(text) + "'");
}

}  // namespace neuromap
