// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "neuromap/errors.hpp"
#include "neuromap/mapper.hpp"
#include "neuromap/net_ir.hpp"
#include "neuromap/refconv.hpp"
#include "neuromap/tiler.hpp"
#include "neuromap/xbar_sim.hpp"
#include "oracles.hpp"
#include "table1_expected.hpp"

using namespace neuromap;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;  // 0 = no time limit
  std::function<Verdict()> check;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict axon_count_oracle() {
  std::size_t cases = 0, union_mismatch = 0, closed_mismatch = 0;
  std::ostringstream first;
  for (std::size_t k : {1, 3, 5, 7})
    for (std::size_t s : {1, 2, 3})
      for (std::size_t r = 1; r <= 8; ++r)
        for (std::size_t c = 1; c <= 8; ++c) {
          ++cases;
          const std::size_t n = axon_count(k, s, r, c);
          if (n != (k + s * (r - 1)) * (k + s * (c - 1))) ++closed_mismatch;
          const std::size_t u = oracle::receptive_field_union(k, s, r, c);
          if (n != u) {
            if (union_mismatch++ == 0)
              first << "; first: K=" << k << " S=" << s << " r=" << r << " c=" << c
                    << " axon_count=" << n << " union=" << u;
          }
        }
  std::ostringstream d;
  d << cases << " cases, " << union_mismatch << " differ from the receptive-field union, "
    << closed_mismatch << " from the factored form" << first.str();
  return {union_mismatch == 0 && closed_mismatch == 0, d.str()};
}

Verdict table1_reproduction() {
  Verdict v;
  std::ostringstream d;
  std::size_t cells = 0, wrong = 0;
  for (const auto& column : table1::kColumns) {
    const auto net = infer_shapes(preset(column.preset));
    if (net.layers.size() != table1::kLayers) {
      v.pass = false;
      d << column.preset << ": " << net.layers.size() << " layers; ";
      continue;
    }
    for (std::size_t i = 0; i < table1::kLayers; ++i) {
      const auto& cell = column.rows[i];
      const auto& l = net.layers[i];
      cells += 4;
      wrong += (l.in.side != cell.in_side) + (l.in.channels != cell.in_channels) +
               (l.out.side != cell.out_side) + (l.out.channels != cell.out_channels);
    }
    try {
      const auto report = utilization(net, {column.core_size, column.core_size});
      d << column.preset << " on " << column.core_size << ": " << report.total_cores << " cores; ";
    } catch (const FanInExceedsCore& e) {
      v.pass = false;
      d << column.preset << " on " << column.core_size << ": FanInExceedsCore at layer " << e.layer()
        << " (fan-in " << e.fan_in() << " > " << e.usable_axons() << "); ";
    }
  }
  if (wrong != 0) v.pass = false;
  d << cells - wrong << "/" << cells << " shape cells match";
  v.detail = d.str();
  return v;
}

double max_abs_diff(const TensorValue& a, const TensorValue& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    worst = std::max(worst, std::fabs(a.data()[i] - b.data()[i]));
  return worst;
}

Verdict lowering_correctness() {
  std::mt19937_64 rng(20240611);
  const CoreSpec core{512, 64};
  const std::size_t fan_in_limit = core.axons / 2;  // fits both schemes
  std::set<LayerKind> kinds;
  double worst = 0.0;
  std::size_t failures = 0, networks = 0;
  for (; networks < 50; ++networks) {
    const auto net = infer_shapes(oracle::random_toy_network(rng, fan_in_limit, 16, 8));
    for (const auto& l : net.layers) kinds.insert(l.spec.kind);
    const auto weights = random_weights(net, rng());
    const auto x = random_input(net.input, rng());
    const auto want = run_network(net, weights, x);
    for (auto scheme : {SynapseScheme::Split, SynapseScheme::Differential}) {
      const auto got = run_mapped(map_network(net, weights, core, {scheme, BiasMode::NeuronOffset}), x);
      bool ok = got.size() == want.size();
      for (std::size_t i = 0; ok && i < got.size(); ++i) {
        const double d = max_abs_diff(got[i], want[i]);
        worst = std::max(worst, d);
        ok = d <= 1e-9;
      }
      failures += !ok;
    }
  }
  std::ostringstream d;
  d << networks << " networks x 2 schemes, " << failures << " failures, max |diff| " << worst
    << ", layer kinds covered " << kinds.size();
  return {failures == 0 && kinds.size() >= 5, d.str()};
}

Verdict scheme_equivalence() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::size_t differing = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t rows = 1 + rng() % 64, cols = 1 + rng() % 64;
    WeightMatrix w(rows, cols);
    for (double& v : w.values) v = rng() % 4 == 0 ? 0.0 : dist(rng);
    std::vector<double> bias(cols), x(rows);
    for (double& b : bias) b = dist(rng);
    for (double& e : x) e = dist(rng);
    const Activation act = trial % 2 ? Activation::ReLU : Activation::None;
    const auto a = core_mvm(CoreState(w, bias, act, SynapseScheme::Split), x);
    const auto b = core_mvm(CoreState(w, bias, act, SynapseScheme::Differential), x);
    if (std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) != 0) ++differing;
  }
  return {differing == 0, "1000 blocks up to 64x64, " + std::to_string(differing) + " not bit-identical"};
}

Verdict mac_cost_oracle() {
  std::mt19937_64 rng(99);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  std::size_t mismatches = 0;
  std::set<LayerKind> kinds;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t side = pick(1, 12), m = pick(1, 8), k = pick(1, std::min<std::size_t>(side, 5));
    const std::size_t s = pick(1, 3), p = pick(0, k - 1);
    LayerSpec l;
    switch (trial % 6) {
      case 0: l = LayerSpec::standard(k, s, p, m, pick(1, 8)); break;
      case 1: l = LayerSpec::pointwise(m, pick(1, 8)); break;
      case 2: l = LayerSpec::depthwise(k, s, p, m, pick(1, 3)); break;
      case 3: l = LayerSpec::grouped(k, s, p, 2 * m, 2 * pick(1, 4), 2); break;
      case 4: l = LayerSpec::global_avg_pool(side, m); break;
      default: l = LayerSpec::fully_connected(side, m, pick(1, 8)); break;
    }
    const auto shaped = infer_shapes({"m", {side, l.M}, {l}}).layers[0];
    kinds.insert(l.kind);
    if (mac_cost(shaped) != oracle::counted_macs(shaped)) ++mismatches;
  }
  return {mismatches == 0 && kinds.size() == 6,
          "100 layers over " + std::to_string(kinds.size()) + " kinds, " + std::to_string(mismatches) +
              " mismatches"};
}

Verdict core_count_monotonicity() {
  std::size_t compared = 0, violations = 0, full_pairs = 0;
  for (const auto& name : preset_names()) {
    const auto full = preset(name);
    // Every prefix of the preset, the full network last.
    for (std::size_t n = 1; n <= full.layers.size(); ++n) {
      auto spec = full;
      spec.layers.resize(n);
      const auto net = infer_shapes(spec);
      std::optional<std::size_t> smaller;
      for (std::size_t size : {256, 512, 1024}) {
        try {
          const std::size_t total = utilization(net, {size, size}).total_cores;
          if (smaller) {
            ++compared;
            if (n == full.layers.size()) ++full_pairs;
            if (total > *smaller) ++violations;
          }
          smaller = total;
        } catch (const FanInExceedsCore&) {
        }
      }
    }
  }
  std::ostringstream d;
  d << compared << " feasible size pairs over all preset prefixes (" << full_pairs
    << " on full presets), " << violations << " violations";
  return {violations == 0, d.str()};
}

struct RoundTrip {
  std::string first_export, reexport, verification;
};

RoundTrip map_export_import_verify(const NetworkSpec& spec, std::uint64_t seed, const fs::path& dir) {
  const auto net = infer_shapes(spec);
  const auto weights = random_weights(net, seed);
  export_placement(map_network(net, weights, {96, 24}, {SynapseScheme::Split, BiasMode::Axon}),
                   (dir / "a").string());
  const auto imported = import_placement((dir / "a").string());
  export_placement(imported, (dir / "b").string());
  std::vector<TensorValue> inputs;
  for (std::uint64_t n = 0; n < 3; ++n) inputs.push_back(random_input(net.input, seed + n));
  RoundTrip out;
  for (auto f : {kManifestFile, kConnectionFile, kCoreUsageFile}) {
    out.first_export += slurp(dir / "a" / f);
    out.reexport += slurp(dir / "b" / f);
  }
  out.verification = to_json(verify(imported, weights, inputs));
  return out;
}

Verdict determinism_round_trip() {
  std::mt19937_64 rng(5150);
  const auto root = fs::temp_directory_path() / "neuromap_acceptance_rt";
  std::size_t failures = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto spec = oracle::random_toy_network(rng, 47);
    const std::uint64_t seed = rng();
    fs::remove_all(root);
    const auto one = map_export_import_verify(spec, seed, root / "1");
    const auto two = map_export_import_verify(spec, seed, root / "2");
    const bool ok = one.first_export == one.reexport && one.reexport == two.reexport &&
                    one.verification == two.verification &&
                    one.verification.find("\"pass\": true") != std::string::npos;
    failures += !ok;
  }
  fs::remove_all(root);
  return {failures == 0, "10 networks mapped twice, " + std::to_string(failures) + " failures"};
}

Verdict fault_detection() {
  std::mt19937_64 rng(4242);
  const auto dir = fs::temp_directory_path() / "neuromap_acceptance_fault";
  std::size_t trials = 0, detected = 0;
  std::ostringstream misses;
  for (; trials < 20; ++trials) {
    fs::remove_all(dir);
    const auto net = infer_shapes(oracle::random_toy_network(rng, 64, 10, 6));
    const auto weights = random_weights(net, rng());
    export_placement(map_network(net, weights, {64, 16}), dir.string());

    // Pick one synapse row (not a bias row) and shift its weight by 0.1.
    const auto csv = slurp(dir / kConnectionFile);
    std::vector<std::size_t> rows;
    for (std::size_t pos = csv.find('\n') + 1; pos < csv.size(); pos = csv.find('\n', pos) + 1) {
      std::size_t source = pos;
      for (int i = 0; i < 3; ++i) source = csv.find(',', source) + 1;
      if (csv.compare(source, 5, "BIAS,") != 0) rows.push_back(pos);
    }
    const std::size_t row = rows[rng() % rows.size()];
    const std::size_t end = csv.find('\n', row);
    const std::size_t field = csv.rfind(',', end) + 1;
    const std::size_t core = std::stoul(csv.substr(row, csv.find(',', row) - row));
    auto text = csv;
    text.replace(field, end - field, format_weight(std::stod(csv.substr(field, end - field)) + 0.1));
    std::ofstream(dir / kConnectionFile, std::ios::binary | std::ios::trunc) << text;

    const auto tampered = import_placement(dir.string());
    const std::size_t layer = tampered.cores[core].layer;
    std::vector<TensorValue> inputs;
    for (std::uint64_t n = 0; n < 4; ++n) inputs.push_back(random_input(net.input, 900 + n));
    const auto report = verify(tampered, weights, inputs);
    if (!report.pass && report.first_failing_layer == layer) {
      ++detected;
    } else {
      misses << " [trial " << trials << ": perturbed layer " << layer << ", reported "
             << (report.first_failing_layer ? std::to_string(*report.first_failing_layer) : "none")
             << "]";
    }
  }
  fs::remove_all(dir);
  return {detected == trials,
          std::to_string(detected) + "/" + std::to_string(trials) +
              " perturbations detected at the perturbed layer" + misses.str()};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"axon-count-oracle", 1.0, axon_count_oracle},
      {"table1-reproduction", 10.0, table1_reproduction},
      {"lowering-correctness", 60.0, lowering_correctness},
      {"scheme-equivalence", 0.0, scheme_equivalence},
      {"mac-cost-oracle", 0.0, mac_cost_oracle},
      {"core-count-monotonicity", 0.0, core_count_monotonicity},
      {"determinism-round-trip", 0.0, determinism_round_trip},
      {"fault-detection", 0.0, fault_detection},
  };
  std::size_t failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0.0 && seconds > c.budget_seconds) {
      v.pass = false;
      v.detail += "; over the " + std::to_string(c.budget_seconds) + " s budget";
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS " : "FAIL ") << c.name << " (" << std::fixed
              << std::setprecision(3) << seconds << " s): " << v.detail << std::endl;
  }
  std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
