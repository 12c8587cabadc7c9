#include <doctest.h>

#include <random>

#include "neuromap/errors.hpp"
#include "neuromap/net_ir.hpp"
#include "oracles.hpp"
#include "table1_expected.hpp"

using namespace neuromap;

TEST_CASE("infer_shapes: first standard convolution halves 224 to 112") {
  NetworkSpec net{"n", {224, 3}, {LayerSpec::standard(3, 2, 1, 3, 32)}};
  const auto shaped = infer_shapes(net);
  CHECK(shaped.layers[0].out == TensorShape{112, 32});
}

TEST_CASE("infer_shapes: 1x1 pointwise keeps the shape") {
  NetworkSpec net{"n", {1, 7}, {LayerSpec::pointwise(7, 7)}};
  CHECK(infer_shapes(net).output() == TensorShape{1, 7});
}

TEST_CASE("infer_shapes: strided depthwise 28 to 14") {
  NetworkSpec net{"n", {28, 256}, {LayerSpec::depthwise(3, 2, 1, 256)}};
  CHECK(infer_shapes(net).output() == TensorShape{14, 256});
}

TEST_CASE("infer_shapes: errors") {
  SUBCASE("broken channel chaining") {
    NetworkSpec net{"n", {8, 3}, {LayerSpec::pointwise(4, 4)}};
    CHECK_THROWS_AS(infer_shapes(net), ShapeMismatch);
  }
  SUBCASE("kernel larger than padded input") {
    NetworkSpec net{"n", {2, 1}, {LayerSpec::standard(5, 1, 1, 1, 1)}};
    CHECK_THROWS_AS(infer_shapes(net), DegenerateOutput);
  }
  SUBCASE("pointwise must be 1x1 stride 1") {
    LayerSpec bad = LayerSpec::pointwise(2, 2);
    bad.K = 3;
    CHECK_THROWS_AS(infer_shapes({"n", {8, 2}, {bad}}), InvalidSpec);
  }
  SUBCASE("depthwise N = M * D") {
    LayerSpec bad = LayerSpec::depthwise(3, 1, 1, 2, 2);
    bad.N = 3;
    CHECK_THROWS_AS(infer_shapes({"n", {8, 2}, {bad}}), InvalidSpec);
  }
  SUBCASE("groups must divide channels") {
    CHECK_THROWS_AS(infer_shapes({"n", {8, 6}, {LayerSpec::grouped(3, 1, 1, 6, 8, 4)}}),
                    InvalidSpec);
  }
  SUBCASE("global pooling must cover the whole input") {
    CHECK_THROWS_AS(infer_shapes({"n", {8, 2}, {LayerSpec::global_avg_pool(7, 2)}}),
                    ShapeMismatch);
  }
}

TEST_CASE("infer_shapes is deterministic") {
  const auto net = preset("table1-512");
  CHECK(infer_shapes(net) == infer_shapes(net));
}

TEST_CASE("mac_cost frozen values") {
  // Expected values computed with the counting-loop oracle.
  ShapedLayer pw{LayerSpec::pointwise(64, 256), {28, 64}, {28, 256}};
  CHECK(oracle::counted_macs(pw) == 12'845'056u);
  CHECK(mac_cost(pw) == 12'845'056u);

  ShapedLayer dw{LayerSpec::depthwise(3, 1, 1, 256), {28, 256}, {28, 256}};
  CHECK(oracle::counted_macs(dw) == 1'806'336u);
  CHECK(mac_cost(dw) == 1'806'336u);

  ShapedLayer one{LayerSpec::standard(1, 1, 0, 1, 1), {1, 1}, {1, 1}};
  CHECK(mac_cost(one) == 1u);
}

TEST_CASE("mac_cost equals the counting oracle on random small layers") {
  std::mt19937_64 rng(7);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t side = pick(1, 16), m = pick(1, 8), k = pick(1, 5);
    LayerSpec l;
    switch (trial % 6) {
      case 0: l = LayerSpec::standard(k, pick(1, 3), pick(0, 2), m, pick(1, 8)); break;
      case 1: l = LayerSpec::pointwise(m, pick(1, 8)); break;
      case 2: l = LayerSpec::depthwise(k, pick(1, 3), pick(0, 2), m, pick(1, 3)); break;
      case 3: {
        const std::size_t g = (m % 2 == 0) ? 2 : 1;
        l = LayerSpec::grouped(k, pick(1, 2), pick(0, 1), m, g * pick(1, 4), g);
        break;
      }
      case 4: l = LayerSpec::global_avg_pool(side, m); break;
      default: l = LayerSpec::fully_connected(side, m, pick(1, 8)); break;
    }
    NetworkSpec net{"r", {side, m}, {l}};
    ShapedNetwork shaped;
    try {
      shaped = infer_shapes(net);
    } catch (const DegenerateOutput&) {
      continue;
    }
    CHECK(mac_cost(shaped.layers[0]) == oracle::counted_macs(shaped.layers[0]));
  }
}

TEST_CASE("depthwise separable is cheaper than standard") {
  for (std::size_t k : {3u, 5u}) {
    for (std::size_t m : {4u, 16u}) {
      for (std::size_t n : {8u, 32u}) {
        const TensorShape in{14, m};
        ShapedLayer std_l{LayerSpec::standard(k, 1, k / 2, m, n), in, {14, n}};
        ShapedLayer dw{LayerSpec::depthwise(k, 1, k / 2, m), in, {14, m}};
        ShapedLayer pw{LayerSpec::pointwise(m, n), {14, m}, {14, n}};
        CHECK(mac_cost(dw) + mac_cost(pw) < mac_cost(std_l));
      }
    }
  }
}

TEST_CASE("presets reproduce every published input/output size") {
  for (const auto& column : table1::kColumns) {
    CAPTURE(column.preset);
    const auto shaped = infer_shapes(preset(column.preset));
    REQUIRE(shaped.layers.size() == table1::kLayers);
    for (std::size_t i = 0; i < table1::kLayers; ++i) {
      CAPTURE(i);
      const auto& cell = column.rows[i];
      CHECK(shaped.layers[i].in == TensorShape{cell.in_side, cell.in_channels});
      CHECK(shaped.layers[i].out == TensorShape{cell.out_side, cell.out_channels});
    }
  }
}

TEST_CASE("preset spot checks") {
  CHECK(infer_shapes(preset("table1-256")).layers[0].out == TensorShape{112, 16});
  CHECK(infer_shapes(preset("table1-512")).layers[2].out == TensorShape{28, 256});
  const auto big = infer_shapes(preset("table1-1024"));
  CHECK(big.layers[18].spec.kind == LayerKind::Pointwise);
  CHECK(big.layers[18].out == TensorShape{7, 1000});
  CHECK(big.output() == TensorShape{1, 1000});
  CHECK_THROWS_AS(preset("table1-2048"), UnknownPreset);
}

TEST_CASE("network JSON round trip and strictness") {
  const auto net = preset("table1-256");
  CHECK(network_from_json(to_json(net)) == net);
  CHECK(network_hash(net) == network_hash(network_from_json(to_json(net))));
  CHECK(network_hash(net) != network_hash(preset("table1-512")));

  CHECK_THROWS_AS(network_from_json("{"), ParseError);
  CHECK_THROWS_AS(network_from_json(R"({"name":"x","input":{"side":4,"channels":1},"layers":[],"extra":1})"),
                  ParseError);
  CHECK_THROWS_AS(
      network_from_json(R"({"name":"x","input":{"side":4,"channels":1},"layers":[{"kind":"Pointwise","K":1,"S":1,"P":0,"M":1,"N":1,"bogus":2}]})"),
      ParseError);
  CHECK_THROWS_AS(
      network_from_json(R"({"name":"x","input":{"side":4,"channels":1},"layers":[{"kind":"Pool","K":1,"S":1,"P":0,"M":1,"N":1}]})"),
      ParseError);
  CHECK_THROWS_AS(network_from_json(R"({"name":"x","input":{"side":0,"channels":1},"layers":[]})"),
                  ParseError);
}
