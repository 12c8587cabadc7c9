#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "neuromap/errors.hpp"
#include "neuromap/mapper.hpp"
#include "neuromap/net_ir.hpp"
#include "neuromap/refconv.hpp"
#include "neuromap/tiler.hpp"
#include "neuromap/xbar_sim.hpp"

namespace neuromap::cli {

namespace {

namespace fs = std::filesystem;

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

LogLevel log_level_from_env() {
  const char* value = std::getenv("NEUROMAP_LOG");
  if (value == nullptr) return LogLevel::Info;
  const std::string v(value);
  if (v == "quiet" || v == "0" || v == "off") return LogLevel::Quiet;
  if (v == "debug" || v == "2") return LogLevel::Debug;
  return LogLevel::Info;
}

class Log {
 public:
  Log(std::ostream& sink, LogLevel level) : sink_(sink), level_(level) {}
  void info(const std::string& msg) const {
    if (level_ >= LogLevel::Info) sink_ << "[neuromap] " << msg << '\n';
  }
  void debug(const std::string& msg) const {
    if (level_ >= LogLevel::Debug) sink_ << "[neuromap:debug] " << msg << '\n';
  }

 private:
  std::ostream& sink_;
  LogLevel level_;
};

struct RunConfig {
  std::string preset;
  std::string net_path;
  std::string placement_dir;
  std::string core = "256x256";
  std::string scheme = "differential";
  bool bias_axon = false;
  double tolerance = 1e-6;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::size_t inputs = 4;
};

std::string echo(const RunConfig& c) {
  std::ostringstream s;
  s << "config: source=" << (c.preset.empty() ? c.net_path : "preset:" + c.preset)
    << " core=" << c.core << " scheme=" << c.scheme << " bias=" << (c.bias_axon ? "axon" : "neuron")
    << " tolerance=" << c.tolerance << " seed=" << c.seed << " inputs=" << c.inputs
    << " out=" << c.out_dir;
  if (!c.placement_dir.empty()) s << " placement=" << c.placement_dir;
  return s.str();
}

NetworkSpec load_source(const RunConfig& c) {
  if (!c.preset.empty()) return preset(c.preset);
  if (!c.net_path.empty()) return load_network(c.net_path);
  throw ParseError("one of --preset or --net is required");
}

MappingOptions options_of(const RunConfig& c) {
  return {parse_scheme(c.scheme), c.bias_axon ? BiasMode::Axon : BiasMode::NeuronOffset};
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a_hex(buf.str());
}

std::vector<TensorValue> seeded_inputs(TensorShape shape, std::uint64_t seed, std::size_t count) {
  std::vector<TensorValue> xs;
  xs.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    xs.push_back(random_input(shape, seed * 1000003ULL + 17 + n));
  }
  return xs;
}

int cmd_validate(const RunConfig& c, std::ostream& out, const Log& log) {
  const ShapedNetwork net = infer_shapes(load_source(c));
  const CoreSpec core = parse_core_spec(c.core);
  const MappingOptions options = options_of(c);
  const std::size_t usable = options.usable_inputs(core);
  log.info(echo(c));

  const ComplexityReport cost = complexity(net);
  bool all_fit = true;
  out << "network " << net.name << " input " << to_string(net.input) << " on core "
      << to_string(core) << " (" << usable << " usable inputs, " << to_string(options.scheme)
      << ")\n";
  out << std::left << std::setw(6) << "layer" << std::setw(15) << "kind" << std::setw(16)
      << "input" << std::setw(16) << "output" << std::setw(16) << "MACs" << std::setw(10)
      << "fan-in" << "status\n";
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    const std::size_t fan_in = single_neuron_fan_in(l);
    const bool fits = fan_in <= usable;
    all_fit = all_fit && fits;
    out << std::left << std::setw(6) << i << std::setw(15) << to_string(l.spec.kind)
        << std::setw(16) << to_string(l.in) << std::setw(16) << to_string(l.out) << std::setw(16)
        << cost.per_layer[i] << std::setw(10) << fan_in
        << (fits ? "ok" : "FanInExceedsCore (" + std::to_string(fan_in) + " > " +
                              std::to_string(usable) + ")")
        << '\n';
  }
  out << "total MACs: " << cost.total << '\n';
  out << (all_fit ? "all layers fit" : "some layers do not fit without weight splitting") << '\n';
  return all_fit ? kExitPass : kExitFail;
}

int cmd_utilization(const RunConfig& c, std::ostream& out, const Log& log) {
  const ShapedNetwork net = infer_shapes(load_source(c));
  log.info(echo(c));
  const UtilizationReport report = utilization(net, parse_core_spec(c.core), options_of(c));
  out << to_table(report);
  return kExitPass;
}

int cmd_map(const RunConfig& c, std::ostream& out, const Log& log) {
  const ShapedNetwork net = infer_shapes(load_source(c));
  const CoreSpec core = parse_core_spec(c.core);
  const MappingOptions options = options_of(c);
  const std::string dir = c.out_dir.empty() ? "neuromap-out" : c.out_dir;
  log.info(echo(c));

  const UtilizationReport report = utilization(net, core, options);
  const WeightSet weights = random_weights(net, c.seed);
  const Placement placement = map_network(net, weights, core, options);

  export_placement(placement, dir);
  save_weights(net, weights, (fs::path(dir) / "weights").string());
  {
    std::ofstream util(fs::path(dir) / "utilization.json", std::ios::binary | std::ios::trunc);
    if (!util) throw IoError("cannot write utilization.json");
    util << to_json(report) << '\n';
  }
  for (auto name : {kManifestFile, kConnectionFile, kCoreUsageFile}) {
    log.info(std::string(name) + " " + file_hash(fs::path(dir) / name));
  }
  out << to_table(report);
  out << "cores mapped: " << placement.cores.size() << '\n';
  return kExitPass;
}

int cmd_verify(const RunConfig& c, std::ostream& out, const Log& log) {
  log.info(echo(c));
  Placement placement;
  WeightSet weights;
  if (!c.placement_dir.empty()) {
    placement = import_placement(c.placement_dir);
    const fs::path weight_dir = fs::path(c.placement_dir) / "weights";
    if (fs::exists(weight_dir / "weights.json")) {
      weights = load_weights(placement.network, weight_dir.string());
      log.debug("reference weights loaded from " + weight_dir.string());
    } else {
      weights = random_weights(placement.network, c.seed);
      log.debug("reference weights regenerated from seed");
    }
    log.info("placement " + std::string(kConnectionFile) + " " +
             file_hash(fs::path(c.placement_dir) / kConnectionFile));
  } else {
    const ShapedNetwork net = infer_shapes(load_source(c));
    weights = random_weights(net, c.seed);
    placement = map_network(net, weights, parse_core_spec(c.core), options_of(c));
  }
  const auto inputs = seeded_inputs(placement.network.input, c.seed, c.inputs);
  const VerificationReport report = verify(placement, weights, inputs, c.tolerance);
  const std::string json = to_json(report);
  out << json << '\n';
  if (!c.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(c.out_dir, ec);
    std::ofstream file(fs::path(c.out_dir) / "verification.json", std::ios::binary | std::ios::trunc);
    if (file) file << json << '\n';
  }
  if (!report.pass) {
    log.info("FAIL: first deviating layer " + std::to_string(*report.first_failing_layer));
    return kExitFail;
  }
  log.info("PASS");
  return kExitPass;
}

void add_source_options(CLI::App& cmd, RunConfig& c) {
  auto* preset_opt = cmd.add_option("--preset", c.preset, "Built-in network (table1-256|512|1024)");
  auto* net_opt = cmd.add_option("--net", c.net_path, "Network JSON file");
  preset_opt->excludes(net_opt);
  cmd.add_option("--core", c.core, "Core size AxR (axons x neurons)");
  cmd.add_option("--scheme", c.scheme, "Synapse scheme: split|differential")
      ->check(CLI::IsMember({"split", "differential"}));
  cmd.add_flag("--bias-axon", c.bias_axon, "Carry biases on a constant-one axon per core");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Log log(err, log_level_from_env());
  RunConfig config;
  CLI::App app{"neuromap: map CNNs onto crossbar cores and verify mapped inference"};
  app.require_subcommand(1);

  auto* validate = app.add_subcommand("validate", "Shapes, MAC costs and fan-in vs. core axons");
  add_source_options(*validate, config);

  auto* util = app.add_subcommand("utilization", "Per-layer tile and core utilization table");
  add_source_options(*util, config);

  auto* map = app.add_subcommand("map", "Write placement artifacts and the utilization report");
  add_source_options(*map, config);
  map->add_option("--seed", config.seed, "Seed for random weights");
  map->add_option("--out", config.out_dir, "Output directory (default neuromap-out)");

  auto* verify_cmd = app.add_subcommand("verify", "Compare mapped inference with the reference");
  add_source_options(*verify_cmd, config);
  verify_cmd->add_option("--placement", config.placement_dir,
                         "Directory written by 'map' (built in-process when omitted)");
  verify_cmd->add_option("--seed", config.seed, "Seed for random weights and inputs");
  verify_cmd->add_option("--inputs", config.inputs, "Number of random inputs")
      ->check(CLI::PositiveNumber);
  verify_cmd->add_option("--tolerance", config.tolerance, "Pass tolerance (abs or rel)")
      ->check(CLI::PositiveNumber);
  verify_cmd->add_option("--out", config.out_dir, "Directory for verification.json");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }

  try {
    if (validate->parsed()) return cmd_validate(config, out, log);
    if (util->parsed()) return cmd_utilization(config, out, log);
    if (map->parsed()) return cmd_map(config, out, log);
    if (verify_cmd->parsed()) return cmd_verify(config, out, log);
  } catch (const FanInExceedsCore& e) {
    err << "error: FanInExceedsCore: " << e.what() << '\n';
    return kExitFail;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace neuromap::cli
