#include "neuromap/mapper.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "neuromap/errors.hpp"
#include "neuromap/tiler.hpp"

namespace neuromap {

NeuronId name_neuron(std::size_t layer, std::size_t feature, std::size_t row, std::size_t col) {
  if (layer == 0 || feature == 0 || row == 0 || col == 0) {
    throw ParseError("neuron indices are 1-based");
  }
  return {layer, feature, row, col};
}

std::string to_string(const NeuronId& id) {
  return "L" + std::to_string(id.layer) + "-F" + std::to_string(id.feature) + "-N[" +
         std::to_string(id.row) + "," + std::to_string(id.col) + "]";
}

NeuronId parse_neuron(std::string_view text) {
  const std::string_view original = text;
  auto fail = [&]() -> NeuronId {
    throw ParseError("malformed neuron name '" + std::string(original) + "'");
  };
  auto expect = [&](std::string_view token) {
    if (text.substr(0, token.size()) != token) fail();
    text.remove_prefix(token.size());
  };
  auto number = [&]() -> std::size_t {
    // Digits only: no sign, no leading zeros.
    std::size_t value = 0;
    const auto* begin = text.data();
    const auto* end = begin + text.size();
    if (begin == end || *begin < '1' || *begin > '9') fail();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{}) fail();
    text.remove_prefix(static_cast<std::size_t>(ptr - begin));
    return value;
  };
  NeuronId id;
  expect("L");
  id.layer = number();
  expect("-F");
  id.feature = number();
  expect("-N[");
  id.row = number();
  expect(",");
  id.col = number();
  expect("]");
  if (!text.empty()) fail();
  return id;
}

namespace {

NeuronId source_id(std::size_t layer_index, std::size_t row, std::size_t col, std::size_t ch) {
  return {layer_index + 1, ch + 1, row + 1, col + 1};
}

NeuronId target_id(std::size_t layer_index, std::size_t row, std::size_t col, std::size_t ch) {
  return {layer_index + 2, ch + 1, row + 1, col + 1};
}

// Axon ordering key: (row, col, feature) so each column's window entries come
// out in the same order as the reference summation.
bool axon_less(const NeuronId& a, const NeuronId& b) {
  if (a.row != b.row) return a.row < b.row;
  if (a.col != b.col) return a.col < b.col;
  return a.feature < b.feature;
}

}  // namespace

ConnectivityList build_connectivity(const ShapedNetwork& net) {
  ConnectivityList list;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& layer = net.layers[i];
    for (std::size_t orow = 0; orow < layer.out.side; ++orow) {
      for (std::size_t ocol = 0; ocol < layer.out.side; ++ocol) {
        for (std::size_t oc = 0; oc < layer.out.channels; ++oc) {
          const NeuronId target = target_id(i, orow, ocol, oc);
          for_each_in_edge(layer, orow, ocol, oc,
                           [&](std::size_t r, std::size_t c, std::size_t ch, std::size_t kr,
                               std::size_t kc, std::size_t local) {
                             list.edges.push_back({source_id(i, r, c, ch), target, kr, kc, local});
                           });
        }
      }
    }
  }
  return list;
}

std::vector<std::vector<double>> CoreBlock::dense() const {
  std::vector<std::vector<double>> block(axons.size(), std::vector<double>(neurons.size(), 0.0));
  for (std::size_t col = 0; col < neurons.size(); ++col) {
    for (std::size_t e = column_start[col]; e < column_start[col + 1]; ++e) {
      block[entry_axon[e]][col] = entry_weight[e];
    }
  }
  return block;
}

PlacementIndex::PlacementIndex(const Placement& p) : placement_(&p) {
  slots_.resize(p.network.layers.size());
  for (std::size_t i = 0; i < p.network.layers.size(); ++i) {
    slots_[i].assign(p.network.layers[i].out.size(),
                     NeuronLocation{static_cast<std::size_t>(-1), 0});
  }
  for (std::size_t core = 0; core < p.cores.size(); ++core) {
    const auto& block = p.cores[core];
    for (std::size_t col = 0; col < block.neurons.size(); ++col) {
      const auto& id = block.neurons[col];
      if (id.layer < 2 || id.layer - 2 >= slots_.size()) continue;
      const auto& shape = p.network.layers[id.layer - 2].out;
      if (id.row > shape.side || id.col > shape.side || id.feature > shape.channels) continue;
      slots_[id.layer - 2][((id.row - 1) * shape.side + (id.col - 1)) * shape.channels +
                           (id.feature - 1)] = {core, col};
    }
  }
}

std::optional<NeuronLocation> PlacementIndex::find(const NeuronId& id) const {
  if (id.layer < 2 || id.layer - 2 >= slots_.size()) return std::nullopt;
  const auto& shape = placement_->network.layers[id.layer - 2].out;
  if (id.row < 1 || id.row > shape.side || id.col < 1 || id.col > shape.side || id.feature < 1 ||
      id.feature > shape.channels) {
    return std::nullopt;
  }
  const auto& slot = slots_[id.layer - 2][((id.row - 1) * shape.side + (id.col - 1)) *
                                              shape.channels +
                                          (id.feature - 1)];
  if (slot.core == static_cast<std::size_t>(-1)) return std::nullopt;
  return slot;
}

namespace {

CoreBlock build_core(const ShapedLayer& layer, std::size_t layer_index, const LayerWeights& w,
                     std::size_t row0, std::size_t row1, std::size_t col0, std::size_t col1,
                     std::size_t f0, std::size_t f1) {
  CoreBlock block;
  block.layer = layer_index;
  for (std::size_t r = row0; r < row1; ++r) {
    for (std::size_t c = col0; c < col1; ++c) {
      for (std::size_t f = f0; f < f1; ++f) {
        block.neurons.push_back(target_id(layer_index, r, c, f));
        block.bias.push_back(w.bias[f]);
        for_each_in_edge(layer, r, c, f,
                         [&](std::size_t ir, std::size_t ic, std::size_t ch, std::size_t,
                             std::size_t, std::size_t) {
                           block.axons.push_back(source_id(layer_index, ir, ic, ch));
                         });
      }
    }
  }
  // Overlapping windows share one axon: sort and drop duplicates.
  std::sort(block.axons.begin(), block.axons.end(), axon_less);
  block.axons.erase(std::unique(block.axons.begin(), block.axons.end()), block.axons.end());

  block.column_start.reserve(block.neurons.size() + 1);
  block.column_start.push_back(0);
  for (const auto& target : block.neurons) {
    const std::size_t r = target.row - 1, c = target.col - 1, f = target.feature - 1;
    for_each_in_edge(layer, r, c, f,
                     [&](std::size_t ir, std::size_t ic, std::size_t ch, std::size_t kr,
                         std::size_t kc, std::size_t local) {
                       const NeuronId src = source_id(layer_index, ir, ic, ch);
                       const auto it =
                           std::lower_bound(block.axons.begin(), block.axons.end(), src, axon_less);
                       block.entry_axon.push_back(
                           static_cast<std::uint32_t>(it - block.axons.begin()));
                       block.entry_weight.push_back(w.filter[layer.filter_offset(kr, kc, local, f)]);
                     });
    block.column_start.push_back(block.entry_axon.size());
  }
  return block;
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

Placement map_network(const ShapedNetwork& net, const WeightSet& weights, const CoreSpec& core,
                      const MappingOptions& options) {
  if (weights.size() != net.layers.size()) {
    throw DimensionMismatch("weight set has " + std::to_string(weights.size()) +
                            " layers, network has " + std::to_string(net.layers.size()));
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) check_weights(net.layers[i], weights[i]);

  const UtilizationReport report = utilization(net, core, options);
  Placement p{net, core, options, {}};
  p.cores.reserve(report.total_cores);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& layer = net.layers[i];
    const TileSpec& tile = report.layers[i].tile;
    const std::size_t side = layer.out.side;
    const std::size_t maps = layer.out.channels;
    for (std::size_t rb = 0; rb < ceil_div(side, tile.rows); ++rb) {
      for (std::size_t cb = 0; cb < ceil_div(side, tile.cols); ++cb) {
        for (std::size_t fb = 0; fb < ceil_div(maps, tile.features); ++fb) {
          p.cores.push_back(build_core(layer, i, weights[i], rb * tile.rows,
                                       std::min(side, (rb + 1) * tile.rows), cb * tile.cols,
                                       std::min(side, (cb + 1) * tile.cols), fb * tile.features,
                                       std::min(maps, (fb + 1) * tile.features)));
        }
      }
    }
  }
  check_placement(p);
  return p;
}

void check_placement(const Placement& p) {
  const std::size_t usable = p.options.usable_inputs(p.core);
  std::vector<std::vector<unsigned char>> seen(p.network.layers.size());
  for (std::size_t i = 0; i < p.network.layers.size(); ++i) {
    seen[i].assign(p.network.layers[i].out.size(), 0);
  }
  for (std::size_t k = 0; k < p.cores.size(); ++k) {
    const auto& block = p.cores[k];
    const std::string where = "core " + std::to_string(k);
    if (block.layer >= p.network.layers.size()) throw CapacityViolation(where + ": unknown layer");
    if (block.axons.size() > usable) {
      throw CapacityViolation(where + ": " + std::to_string(block.axons.size()) +
                              " axons exceed " + std::to_string(usable) + " usable inputs");
    }
    if (block.neurons.size() > p.core.neurons) {
      throw CapacityViolation(where + ": " + std::to_string(block.neurons.size()) +
                              " columns exceed the core's neurons");
    }
    if (block.column_start.size() != block.neurons.size() + 1 ||
        block.bias.size() != block.neurons.size() ||
        block.entry_axon.size() != block.entry_weight.size() ||
        block.column_start.back() != block.entry_axon.size()) {
      throw CapacityViolation(where + ": inconsistent weight block");
    }
    for (std::size_t a = 1; a < block.axons.size(); ++a) {
      if (!axon_less(block.axons[a - 1], block.axons[a])) {
        throw CapacityViolation(where + ": duplicate or unordered axon " +
                                to_string(block.axons[a]));
      }
    }
    for (const auto& src : block.axons) {
      if (src.layer != block.layer + 1) {
        throw CapacityViolation(where + ": axon " + to_string(src) + " is not from layer L" +
                                std::to_string(block.layer + 1));
      }
    }
    for (std::size_t e = 0; e < block.entry_axon.size(); ++e) {
      if (block.entry_axon[e] >= block.axons.size()) {
        throw CapacityViolation(where + ": entry references a missing axon");
      }
    }
    const auto& shape = p.network.layers[block.layer].out;
    for (const auto& id : block.neurons) {
      if (id.layer != block.layer + 2 || id.row > shape.side || id.col > shape.side ||
          id.feature > shape.channels) {
        throw CapacityViolation(where + ": column " + to_string(id) + " outside its layer");
      }
      auto& flag = seen[block.layer][((id.row - 1) * shape.side + (id.col - 1)) * shape.channels +
                                     (id.feature - 1)];
      if (flag) throw CapacityViolation(where + ": neuron " + to_string(id) + " placed twice");
      flag = 1;
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (std::find(seen[i].begin(), seen[i].end(), 0) != seen[i].end()) {
      throw CapacityViolation("layer " + std::to_string(i) + " has unplaced neurons");
    }
  }
}

std::string format_weight(double w) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", w);
  return buf;
}

namespace {

namespace fs = std::filesystem;

constexpr std::string_view kConnectionHeader =
    "core_id,axon_index,neuron_column,source_neuron,target_neuron,weight";
constexpr std::string_view kUsageHeader = "core_id,layer,axons_used,neurons_used";
constexpr std::string_view kBiasSource = "BIAS";

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write on '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Splits one CSV record; fields may be wrapped in double quotes.
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  if (quoted) throw FormatError("unterminated quote in CSV record");
  fields.push_back(std::move(field));
  return fields;
}

std::size_t parse_index(const std::string& text, const std::string& what) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw FormatError(what + ": expected a non-negative integer, got '" + text + "'");
  }
  return value;
}

double parse_double(const std::string& text, const std::string& what) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty() ||
      !std::isfinite(value)) {
    throw FormatError(what + ": expected a finite number, got '" + text + "'");
  }
  return value;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

}  // namespace

void export_placement(const Placement& p, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());

  std::string csv;
  csv.append(kConnectionHeader).push_back('\n');
  std::string usage;
  usage.append(kUsageHeader).push_back('\n');
  for (std::size_t k = 0; k < p.cores.size(); ++k) {
    const auto& block = p.cores[k];
    const std::string core_id = std::to_string(k);
    for (std::size_t col = 0; col < block.neurons.size(); ++col) {
      const std::string column = std::to_string(col);
      const std::string target = "\"" + to_string(block.neurons[col]) + "\"";
      for (std::size_t e = block.column_start[col]; e < block.column_start[col + 1]; ++e) {
        csv += core_id + ',' + std::to_string(block.entry_axon[e]) + ',' + column + ",\"" +
               to_string(block.axons[block.entry_axon[e]]) + "\"," + target + ',' +
               format_weight(block.entry_weight[e]) + '\n';
      }
      // The bias sits on the slot after the last regular axon.
      csv += core_id + ',' + std::to_string(block.axons.size()) + ',' + column + ',' +
             std::string(kBiasSource) + ',' + target + ',' + format_weight(block.bias[col]) + '\n';
    }
    usage += core_id + ',' + std::to_string(block.layer) + ',' + std::to_string(p.rows_used(k)) +
             ',' + std::to_string(block.neurons.size()) + '\n';
  }

  const NetworkSpec spec = p.network.spec();
  nlohmann::json manifest;
  manifest["format"] = "neuromap-placement-v1";
  manifest["network_hash"] = network_hash(spec);
  manifest["network"] = nlohmann::json::parse(to_json(spec));
  manifest["core"] = {{"axons", p.core.axons}, {"neurons", p.core.neurons}};
  manifest["scheme"] = std::string(to_string(p.options.scheme));
  manifest["bias"] = std::string(to_string(p.options.bias));
  manifest["connection_list"] = std::string(kConnectionFile);
  manifest["core_usage"] = std::string(kCoreUsageFile);
  manifest["cores"] = p.cores.size();

  write_file(fs::path(dir) / kConnectionFile, csv);
  write_file(fs::path(dir) / kCoreUsageFile, usage);
  write_file(fs::path(dir) / kManifestFile, manifest.dump(2) + "\n");
}

Placement import_placement(const std::string& dir) {
  Placement p;
  std::string connection_file, usage_file;
  std::size_t core_count = 0;
  try {
    const auto manifest = nlohmann::json::parse(read_file(fs::path(dir) / kManifestFile));
    if (manifest.at("format") != "neuromap-placement-v1") {
      throw FormatError("unknown placement format");
    }
    const NetworkSpec spec = network_from_json(manifest.at("network").dump());
    if (manifest.at("network_hash").get<std::string>() != network_hash(spec)) {
      throw FormatError("network hash does not match the embedded network");
    }
    p.network = infer_shapes(spec);
    p.core = {manifest.at("core").at("axons").get<std::size_t>(),
              manifest.at("core").at("neurons").get<std::size_t>()};
    if (p.core.axons == 0 || p.core.neurons == 0) throw FormatError("core dimensions must be > 0");
    p.options.scheme = parse_scheme(manifest.at("scheme").get<std::string>());
    p.options.bias = parse_bias_mode(manifest.at("bias").get<std::string>());
    connection_file = manifest.at("connection_list").get<std::string>();
    usage_file = manifest.at("core_usage").get<std::string>();
    core_count = manifest.at("cores").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("placement manifest: ") + e.what());
  } catch (const ParseError& e) {
    throw FormatError(std::string("placement manifest: ") + e.what());
  } catch (const ShapeMismatch& e) {
    throw FormatError(std::string("placement manifest: ") + e.what());
  } catch (const DegenerateOutput& e) {
    throw FormatError(std::string("placement manifest: ") + e.what());
  } catch (const InvalidSpec& e) {
    throw FormatError(std::string("placement manifest: ") + e.what());
  }

  // Core usage: one row per core, in order.
  const std::string usage_text = read_file(fs::path(dir) / usage_file);
  const auto usage_lines = lines_of(usage_text);
  if (usage_lines.empty() || usage_lines[0] != kUsageHeader) {
    throw FormatError(usage_file + ": missing header");
  }
  std::vector<std::size_t> usage_rows(core_count), usage_columns(core_count);
  p.cores.resize(core_count);
  std::size_t usage_seen = 0;
  for (std::size_t n = 1; n < usage_lines.size(); ++n) {
    if (usage_lines[n].empty()) continue;
    const auto fields = split_csv(usage_lines[n]);
    const std::string where = usage_file + " line " + std::to_string(n + 1);
    if (fields.size() != 4) throw FormatError(where + ": expected 4 fields");
    const std::size_t id = parse_index(fields[0], where);
    if (id != usage_seen || id >= core_count) throw FormatError(where + ": unexpected core id");
    p.cores[id].layer = parse_index(fields[1], where);
    if (p.cores[id].layer >= p.network.layers.size()) throw FormatError(where + ": unknown layer");
    usage_rows[id] = parse_index(fields[2], where);
    usage_columns[id] = parse_index(fields[3], where);
    ++usage_seen;
  }
  if (usage_seen != core_count) throw FormatError(usage_file + ": core count mismatch");

  // Connection list, sorted by (core, column, axon); the bias row closes each column.
  const std::string csv = read_file(fs::path(dir) / connection_file);
  const auto lines = lines_of(csv);
  if (lines.empty() || lines[0] != kConnectionHeader) {
    throw FormatError(connection_file + ": missing header");
  }
  std::vector<std::vector<std::optional<NeuronId>>> axon_slots(core_count);
  std::vector<std::vector<bool>> bias_seen(core_count);
  std::vector<std::vector<std::size_t>> bias_slot(core_count);
  std::size_t prev_core = 0, prev_column = 0, prev_axon = 0;
  bool first = true;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const std::string where = connection_file + " line " + std::to_string(n + 1);
    const auto fields = split_csv(lines[n]);
    if (fields.size() != 6) throw FormatError(where + ": expected 6 fields");
    const std::size_t core_id = parse_index(fields[0], where);
    const std::size_t axon = parse_index(fields[1], where);
    const std::size_t column = parse_index(fields[2], where);
    const double weight = parse_double(fields[5], where);
    if (core_id >= core_count) throw FormatError(where + ": core id out of range");
    if (!first && std::tie(core_id, column, axon) <= std::tie(prev_core, prev_column, prev_axon)) {
      throw FormatError(where + ": records not sorted by (core, column, axon)");
    }
    first = false;
    prev_core = core_id;
    prev_column = column;
    prev_axon = axon;

    NeuronId target;
    try {
      target = parse_neuron(fields[4]);
    } catch (const ParseError& e) {
      throw FormatError(where + ": " + e.what());
    }
    auto& block = p.cores[core_id];
    if (column == block.neurons.size()) {
      if (!block.neurons.empty() && !bias_seen[core_id].back()) {
        throw FormatError(where + ": previous column has no bias record");
      }
      block.neurons.push_back(target);
      block.bias.push_back(0.0);
      bias_seen[core_id].push_back(false);
      bias_slot[core_id].push_back(0);
      if (block.column_start.empty()) block.column_start.push_back(0);
      block.column_start.push_back(block.entry_axon.size());
    } else if (column + 1 != block.neurons.size() || block.neurons.back() != target) {
      throw FormatError(where + ": inconsistent column/target");
    }
    if (bias_seen[core_id].back()) throw FormatError(where + ": record after the bias record");

    if (fields[3] == kBiasSource) {
      block.bias.back() = weight;
      bias_seen[core_id].back() = true;
      bias_slot[core_id].back() = axon;
      continue;
    }
    NeuronId source;
    try {
      source = parse_neuron(fields[3]);
    } catch (const ParseError& e) {
      throw FormatError(where + ": " + e.what());
    }
    auto& slots = axon_slots[core_id];
    if (axon >= slots.size()) slots.resize(axon + 1);
    if (slots[axon] && *slots[axon] != source) {
      throw FormatError(where + ": axon " + std::to_string(axon) + " has two sources");
    }
    slots[axon] = source;
    block.entry_axon.push_back(static_cast<std::uint32_t>(axon));
    block.entry_weight.push_back(weight);
    block.column_start.back() = block.entry_axon.size();
  }

  for (std::size_t k = 0; k < core_count; ++k) {
    auto& block = p.cores[k];
    const std::string where = connection_file + ": core " + std::to_string(k);
    if (block.neurons.empty()) throw FormatError(where + " has no columns");
    if (!bias_seen[k].back()) throw FormatError(where + ": last column has no bias record");
    for (const auto& slot : axon_slots[k]) {
      if (!slot) throw FormatError(where + ": gap in axon indices");
      block.axons.push_back(*slot);
    }
    for (std::size_t s : bias_slot[k]) {
      if (s != block.axons.size()) throw FormatError(where + ": misplaced bias record");
    }
    if (usage_rows[k] != p.rows_used(k) || usage_columns[k] != block.neurons.size()) {
      throw FormatError(kCoreUsageFile.data() + std::string(": core ") + std::to_string(k) +
                        " disagrees with the connection list");
    }
  }
  try {
    check_placement(p);
  } catch (const CapacityViolation& e) {
    throw FormatError(std::string("imported placement is invalid: ") + e.what());
  }
  return p;
}

}  // namespace neuromap
