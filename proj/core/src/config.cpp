#include "dictnet/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dictnet/error.hpp"

namespace dictnet {

namespace {
std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw ConfigError(origin + ": " + what);
}

double parse_double(const std::string& origin, const std::string& field,
                    const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing junk");
    return d;
  } catch (const std::exception&) {
    fail(origin, "field '" + field + "': cannot parse number '" + v + "'");
  }
}

std::size_t parse_count(const std::string& origin, const std::string& field,
                        const std::string& v) {
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used != v.size() || n < 0) throw std::invalid_argument("bad");
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    fail(origin, "field '" + field + "': cannot parse count '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& origin, const std::string& field,
                        const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("bad");
    return n;
  } catch (const std::exception&) {
    fail(origin, "field '" + field + "': cannot parse seed '" + v + "'");
  }
}

bool parse_bool(const std::string& origin, const std::string& field, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(origin, "field '" + field + "': cannot parse boolean '" + v + "'");
}

const std::set<std::string> kStrategyNames = {"SE",       "Emp",     "Emp2",   "AE",
                                              "RandFixU", "RandCon", "LowRank"};

LayerSpec parse_layer_line(const std::string& origin, const std::string& value) {
  const auto toks = split_ws(value);
  if (toks.empty()) fail(origin, "field 'model.layer': empty layer line");
  LayerSpec spec;
  std::set<std::string> allowed;
  if (toks[0] == "dense") {
    spec.kind = LayerSpec::Kind::Dense;
    allowed = {"units", "columns", "sigma", "lambda", "strategy"};
  } else if (toks[0] == "conv") {
    spec.kind = LayerSpec::Kind::Conv;
    allowed = {"filters", "size", "stride", "columns", "sigma", "lambda", "strategy"};
  } else if (toks[0] == "maxpool") {
    spec.kind = LayerSpec::Kind::MaxPool;
    allowed = {"size", "stride"};
  } else {
    fail(origin, "field 'model.layer': unknown layer kind '" + toks[0] + "'");
  }

  bool stride_given = false;
  for (std::size_t i = 1; i < toks.size(); ++i) {
    const auto eq = toks[i].find('=');
    if (eq == std::string::npos)
      fail(origin, "field 'model.layer': expected key=value, got '" + toks[i] + "'");
    const std::string key = toks[i].substr(0, eq);
    const std::string val = toks[i].substr(eq + 1);
    if (!allowed.count(key))
      fail(origin, "field 'model.layer': key '" + key + "' not valid for '" + toks[0] + "'");
    const std::string field = "model.layer." + key;
    if (key == "units") spec.units = parse_count(origin, field, val);
    else if (key == "filters") spec.filters = parse_count(origin, field, val);
    else if (key == "size") spec.size = parse_count(origin, field, val);
    else if (key == "stride") { spec.stride = parse_count(origin, field, val); stride_given = true; }
    else if (key == "columns") spec.columns = parse_count(origin, field, val);
    else if (key == "sigma") spec.sigma = parse_double(origin, field, val);
    else if (key == "lambda") spec.lambda = parse_double(origin, field, val);
    else if (key == "strategy") spec.strategy = val;
  }

  switch (spec.kind) {
    case LayerSpec::Kind::Dense:
      if (spec.units == 0) fail(origin, "field 'model.layer': dense needs units >= 1");
      if (spec.columns == 0) fail(origin, "field 'model.layer': columns must be >= 1");
      break;
    case LayerSpec::Kind::Conv:
      if (spec.filters == 0 || spec.size == 0)
        fail(origin, "field 'model.layer': conv needs filters and size");
      if (spec.columns != 1)
        fail(origin, "field 'model.layer': conv layers support exactly one column");
      if (spec.stride == 0) fail(origin, "field 'model.layer': stride must be >= 1");
      break;
    case LayerSpec::Kind::MaxPool:
      if (spec.size == 0) fail(origin, "field 'model.layer': maxpool needs size");
      if (!stride_given) spec.stride = spec.size;
      if (spec.stride == 0) fail(origin, "field 'model.layer': stride must be >= 1");
      break;
  }
  if (!spec.strategy.empty() && spec.strategy != "nokernel" &&
      !kStrategyNames.count(spec.strategy))
    fail(origin, "field 'model.layer.strategy': unknown strategy '" + spec.strategy + "'");
  return spec;
}

struct RawConfig {
  // section -> list of (key, value) preserving repetition order
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
};

RawConfig lex(const std::string& text, const std::string& origin) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail(origin, "line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        fail(origin, "line " + std::to_string(lineno) + ": empty section name");
      raw.sections.try_emplace(section);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(origin, "line " + std::to_string(lineno) + ": expected 'key = value'");
    if (section.empty())
      fail(origin, "line " + std::to_string(lineno) + ": key outside any section");
    raw.sections[section].emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return raw;
}

const std::map<std::string, std::set<std::string>> kSchema = {
    {"experiment", {"id", "task", "output", "seed", "save_checkpoints"}},
    {"data",
     {"kind", "train_images", "train_labels", "test_images", "test_labels", "train_file",
      "test_file", "train_count", "test_count"}},
    {"model", {"layer", "classes"}},
    {"train",
     {"epochs", "batch", "lr", "momentum", "pretrain_epochs", "pretrain_lr",
      "halve_lr_on_increase"}},
    {"sweep", {"strategies", "fractions"}},
    {"rica",
     {"features", "patch", "patches", "sparsity", "epsilon", "pool", "stride", "epochs",
      "batch", "lr", "momentum", "match_budget", "readout_epochs", "readout_batch",
      "readout_lr", "sigma", "lambda"}},
};
}  // namespace

std::size_t predictable_layer_count(const ExperimentConfig& cfg) {
  std::size_t n = 0;
  for (const auto& l : cfg.layers)
    if (l.kind != LayerSpec::Kind::MaxPool) ++n;
  return n;
}

std::vector<std::string> split_strategy_combo(const ExperimentConfig& cfg,
                                              const std::string& combo) {
  std::vector<std::string> parts;
  std::size_t at = 0;
  while (true) {
    const auto dash = combo.find('-', at);
    if (dash == std::string::npos) {
      parts.push_back(combo.substr(at));
      break;
    }
    parts.push_back(combo.substr(at, dash - at));
    at = dash + 1;
  }
  for (const auto& p : parts)
    if (p != "nokernel" && !kStrategyNames.count(p))
      throw ConfigError("sweep.strategies: unknown strategy '" + p + "' in combo '" +
                        combo + "'");
  const std::size_t want = predictable_layer_count(cfg);
  if (parts.size() == 1 && want > 1) parts.assign(want, parts[0]);
  if (parts.size() != want)
    throw ConfigError("sweep.strategies: combo '" + combo + "' names " +
                      std::to_string(parts.size()) + " strategies but the model has " +
                      std::to_string(want) + " predictable layers");
  return parts;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  const RawConfig raw = lex(text, origin);

  for (const auto& [section, entries] : raw.sections) {
    const auto it = kSchema.find(section);
    if (it == kSchema.end()) fail(origin, "unknown section [" + section + "]");
    std::set<std::string> seen;
    for (const auto& [key, value] : entries) {
      (void)value;
      if (!it->second.count(key))
        fail(origin, "unknown field '" + section + "." + key + "'");
      if (key != "layer" && !seen.insert(key).second)
        fail(origin, "duplicate field '" + section + "." + key + "'");
    }
  }

  const auto get = [&](const std::string& section,
                       const std::string& key) -> const std::string* {
    const auto sit = raw.sections.find(section);
    if (sit == raw.sections.end()) return nullptr;
    for (const auto& [k, v] : sit->second)
      if (k == key) return &v;
    return nullptr;
  };
  const auto require = [&](const std::string& section, const std::string& key) {
    const std::string* v = get(section, key);
    if (!v) fail(origin, "missing required field '" + section + "." + key + "'");
    return *v;
  };

  ExperimentConfig cfg;
  cfg.id = require("experiment", "id");
  cfg.task = get("experiment", "task") ? *get("experiment", "task") : "classify";
  if (cfg.task != "classify" && cfg.task != "rica")
    fail(origin, "field 'experiment.task': must be classify or rica, got '" + cfg.task + "'");
  cfg.output = require("experiment", "output");
  cfg.seed = parse_u64(origin, "experiment.seed", require("experiment", "seed"));
  if (const auto* v = get("experiment", "save_checkpoints"))
    cfg.save_checkpoints = parse_bool(origin, "experiment.save_checkpoints", *v);

  cfg.data.kind = require("data", "kind");
  const std::set<std::string> kinds = {"idx", "cifar10", "synth_digits", "synth_textures"};
  if (!kinds.count(cfg.data.kind))
    fail(origin, "field 'data.kind': unknown kind '" + cfg.data.kind + "'");
  if (cfg.data.kind == "idx") {
    cfg.data.train_images = require("data", "train_images");
    cfg.data.train_labels = require("data", "train_labels");
    cfg.data.test_images = require("data", "test_images");
    cfg.data.test_labels = require("data", "test_labels");
  } else if (cfg.data.kind == "cifar10") {
    cfg.data.train_file = require("data", "train_file");
    cfg.data.test_file = require("data", "test_file");
  }
  if (const auto* v = get("data", "train_count"))
    cfg.data.train_count = parse_count(origin, "data.train_count", *v);
  if (const auto* v = get("data", "test_count"))
    cfg.data.test_count = parse_count(origin, "data.test_count", *v);
  if (cfg.data.kind.rfind("synth", 0) == 0) {
    if (cfg.data.train_count == 0 || cfg.data.test_count == 0)
      fail(origin, "synthetic data kinds need data.train_count and data.test_count");
  }

  if (cfg.task == "classify") {
    const auto mit = raw.sections.find("model");
    if (mit == raw.sections.end()) fail(origin, "missing section [model]");
    for (const auto& [key, value] : mit->second) {
      if (key == "layer") cfg.layers.push_back(parse_layer_line(origin, value));
      else if (key == "classes") cfg.classes = parse_count(origin, "model.classes", value);
    }
    if (cfg.layers.empty()) fail(origin, "field 'model.layer': need at least one layer");
  } else if (raw.sections.count("model")) {
    fail(origin, "section [model] is only valid for task = classify");
  }

  if (const auto* v = get("train", "epochs"))
    cfg.train.epochs = parse_count(origin, "train.epochs", *v);
  if (const auto* v = get("train", "batch")) {
    cfg.train.batch = parse_count(origin, "train.batch", *v);
    if (cfg.train.batch == 0) fail(origin, "field 'train.batch': must be >= 1");
  }
  if (const auto* v = get("train", "lr")) {
    cfg.train.lr = parse_double(origin, "train.lr", *v);
    if (!(cfg.train.lr > 0.0)) fail(origin, "field 'train.lr': must be > 0");
  }
  if (const auto* v = get("train", "momentum"))
    cfg.train.momentum = parse_double(origin, "train.momentum", *v);
  if (const auto* v = get("train", "pretrain_epochs"))
    cfg.train.pretrain_epochs = parse_count(origin, "train.pretrain_epochs", *v);
  if (const auto* v = get("train", "pretrain_lr"))
    cfg.train.pretrain_lr = parse_double(origin, "train.pretrain_lr", *v);
  if (const auto* v = get("train", "halve_lr_on_increase"))
    cfg.train.halve_lr_on_increase = parse_bool(origin, "train.halve_lr_on_increase", *v);

  if (const auto* v = get("sweep", "strategies")) cfg.strategies = split_ws(*v);
  if (const auto* v = get("sweep", "fractions")) {
    for (const auto& tok : split_ws(*v)) {
      const double f = parse_double(origin, "sweep.fractions", tok);
      if (!(f > 0.0) || f > 1.0)
        fail(origin, "field 'sweep.fractions': " + tok + " outside (0, 1]");
      cfg.fractions.push_back(f);
    }
  }
  if (cfg.fractions.empty()) cfg.fractions.push_back(1.0);

  if (cfg.task == "classify" && cfg.strategies.empty()) {
    // Fall back to the per-layer strategy fields; default is no prediction.
    std::string combo;
    for (const auto& l : cfg.layers) {
      if (l.kind == LayerSpec::Kind::MaxPool) continue;
      if (!combo.empty()) combo += "-";
      combo += l.strategy.empty() ? "nokernel" : l.strategy;
    }
    cfg.strategies.push_back(combo);
  }

  if (cfg.task == "rica") {
    if (!raw.sections.count("rica")) fail(origin, "missing section [rica]");
    auto& r = cfg.rica;
    if (const auto* v = get("rica", "features"))
      r.features = parse_count(origin, "rica.features", *v);
    if (const auto* v = get("rica", "patch")) r.patch = parse_count(origin, "rica.patch", *v);
    if (const auto* v = get("rica", "patches"))
      r.patches = parse_count(origin, "rica.patches", *v);
    if (const auto* v = get("rica", "sparsity"))
      r.sparsity = parse_double(origin, "rica.sparsity", *v);
    if (const auto* v = get("rica", "epsilon"))
      r.epsilon = parse_double(origin, "rica.epsilon", *v);
    if (const auto* v = get("rica", "pool")) r.pool = parse_count(origin, "rica.pool", *v);
    if (const auto* v = get("rica", "stride"))
      r.stride = parse_count(origin, "rica.stride", *v);
    if (const auto* v = get("rica", "epochs"))
      r.epochs = parse_count(origin, "rica.epochs", *v);
    if (const auto* v = get("rica", "batch")) r.batch = parse_count(origin, "rica.batch", *v);
    if (const auto* v = get("rica", "lr")) r.lr = parse_double(origin, "rica.lr", *v);
    if (const auto* v = get("rica", "momentum"))
      r.momentum = parse_double(origin, "rica.momentum", *v);
    if (const auto* v = get("rica", "match_budget"))
      r.match_budget = parse_bool(origin, "rica.match_budget", *v);
    if (const auto* v = get("rica", "readout_epochs"))
      r.readout_epochs = parse_count(origin, "rica.readout_epochs", *v);
    if (const auto* v = get("rica", "readout_batch"))
      r.readout_batch = parse_count(origin, "rica.readout_batch", *v);
    if (const auto* v = get("rica", "readout_lr"))
      r.readout_lr = parse_double(origin, "rica.readout_lr", *v);
    if (const auto* v = get("rica", "sigma")) r.sigma = parse_double(origin, "rica.sigma", *v);
    if (const auto* v = get("rica", "lambda"))
      r.lambda = parse_double(origin, "rica.lambda", *v);
    if (r.features == 0 || r.patch == 0 || r.patches == 0 || r.pool == 0 || r.stride == 0)
      fail(origin, "[rica]: features, patch, patches, pool and stride must be >= 1");
    if (cfg.strategies.empty()) cfg.strategies.push_back("nokernel");
  } else if (raw.sections.count("rica")) {
    fail(origin, "section [rica] is only valid for task = rica");
  }

  // Validate combos eagerly so bad configs die before any work starts.
  for (const auto& combo : cfg.strategies) {
    if (cfg.task == "classify") {
      split_strategy_combo(cfg, combo);
    } else if (combo != "nokernel" && !kStrategyNames.count(combo)) {
      throw ConfigError(origin + ": sweep.strategies: unknown strategy '" + combo + "'");
    }
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

}  // namespace dictnet
