#include "dictnet/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dictnet/checkpoint.hpp"
#include "dictnet/error.hpp"
#include "dictnet/metrics.hpp"
#include "dictnet/rica.hpp"
#include "dictnet/rng.hpp"

namespace dictnet {

namespace {
namespace fs = std::filesystem;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string error_field(double v, bool diverged) {
  return diverged ? "nan" : fmt("%.6f", v);
}

std::string resolve_data_path(const std::string& p) {
  if (p.empty() || fs::exists(p)) return p;
  if (const char* base = std::getenv("DICTNET_DATA")) {
    const fs::path joined = fs::path(base) / p;
    if (fs::exists(joined)) return joined.string();
  }
  return p;  // let the loader report the miss
}

Dataset maybe_subset(Dataset ds, std::size_t count, std::uint64_t seed) {
  if (count == 0 || count >= ds.count()) return ds;
  return subset(ds, count, seed);
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return out;
}

void write_trace_csv(const std::string& path, const TrainTrace& trace) {
  std::ofstream out(path);
  out << "epoch,train_loss,train_error,test_error,wall_seconds\n";
  for (const auto& e : trace)
    out << e.epoch << ',' << fmt("%.6f", e.train_loss) << ',' << fmt("%.6f", e.train_error)
        << ',' << fmt("%.6f", e.test_error) << ',' << fmt("%.3f", e.wall_seconds) << '\n';
}
}  // namespace

std::string architecture_digest(const ExperimentConfig& cfg) {
  std::ostringstream ss;
  for (const auto& l : cfg.layers) {
    switch (l.kind) {
      case LayerSpec::Kind::Dense: ss << "dense:" << l.units << ":" << l.columns; break;
      case LayerSpec::Kind::Conv:
        ss << "conv:" << l.filters << ":" << l.size << ":" << l.stride;
        break;
      case LayerSpec::Kind::MaxPool: ss << "pool:" << l.size << ":" << l.stride; break;
    }
    ss << ";";
  }
  ss << "classes=" << cfg.classes;
  if (cfg.task == "rica")
    ss << "rica:" << cfg.rica.features << ":" << cfg.rica.patch << ":" << cfg.rica.pool;
  const std::string s = ss.str();
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(s.data(), s.size())));
  return buf;
}

std::string cells_to_csv(const std::string& experiment_id, const std::string& arch_digest,
                         const std::vector<CellResult>& cells) {
  std::ostringstream out;
  out << "experiment,arch,strategy,fraction,columns,dynamic_params,static_params,"
         "fraction_dynamic,train_error,test_error,epochs,seed,wall_seconds\n";
  for (const auto& c : cells) {
    out << experiment_id << ',' << arch_digest << ',' << c.strategy << ','
        << fmt("%.4f", c.fraction) << ',' << c.columns << ',' << c.dynamic << ','
        << c.static_count << ',' << fmt("%.6f", c.fraction_dynamic) << ','
        << error_field(c.train_error, c.diverged) << ','
        << error_field(c.test_error, c.diverged) << ',' << c.epochs << ',' << c.seed << ','
        << fmt("%.3f", c.wall_seconds) << '\n';
  }
  return out.str();
}

void load_datasets(const ExperimentConfig& cfg, Dataset& train_set, Dataset& test_set) {
  const auto& d = cfg.data;
  if (d.kind == "idx") {
    train_set = load_idx(resolve_data_path(d.train_images), resolve_data_path(d.train_labels));
    test_set = load_idx(resolve_data_path(d.test_images), resolve_data_path(d.test_labels));
  } else if (d.kind == "cifar10") {
    train_set = load_cifar10(resolve_data_path(d.train_file));
    test_set = load_cifar10(resolve_data_path(d.test_file));
  } else if (d.kind == "synth_digits") {
    train_set = make_synthetic_digits(d.train_count, derive_seed(cfg.seed, 0xda1aULL));
    test_set = make_synthetic_digits(d.test_count, derive_seed(cfg.seed, 0xda1bULL));
  } else if (d.kind == "synth_textures") {
    train_set = make_synthetic_textures(d.train_count, derive_seed(cfg.seed, 0xda1cULL));
    test_set = make_synthetic_textures(d.test_count, derive_seed(cfg.seed, 0xda1dULL));
  } else {
    throw ConfigError("unknown data kind '" + d.kind + "'");
  }
  train_set = maybe_subset(std::move(train_set), d.train_count, derive_seed(cfg.seed, 0x5e1ULL));
  test_set = maybe_subset(std::move(test_set), d.test_count, derive_seed(cfg.seed, 0x5e2ULL));
}

namespace {
DictionaryStrategy strategy_for_layer(const std::string& name, const LayerSpec& spec) {
  DictionaryStrategy ds = DictionaryStrategy::parse(name);
  ds.sigma = spec.sigma;
  ds.lambda = spec.lambda;
  return ds;
}

// AE dictionaries: a throwaway tied sigmoid autoencoder with n_alpha hidden
// units trained on the layer's inputs; its encoder columns become U.
Matrix train_ae_features(const Matrix& inputs, std::size_t n_features,
                         const PretrainPlan& base_plan, std::size_t budget,
                         std::uint64_t seed) {
  DenseLayer enc(inputs.cols(), n_features, Activation::Sigmoid, seed);
  PretrainPlan plan = base_plan;
  plan.epochs = budget;
  plan.seed = seed;
  pretrain_layer_autoencoder(enc, inputs, plan, seed);
  return enc.w;
}
}  // namespace

Network build_cell_network(const ExperimentConfig& cfg,
                           const std::vector<std::string>& per_layer_strategy,
                           double fraction, const Tensor4& train_images,
                           std::size_t n_classes, std::uint64_t cell_seed) {
  PretrainPlan plan;
  plan.epochs = cfg.train.pretrain_epochs;
  plan.learning_rate = cfg.train.pretrain_lr > 0 ? cfg.train.pretrain_lr : cfg.train.lr;
  plan.momentum = cfg.train.momentum;
  plan.batch_size = cfg.train.batch;
  plan.seed = derive_seed(cell_seed, 0xae);

  Network net;
  Signal s = train_images;
  bool is_image = true;
  std::size_t h = train_images.height(), w = train_images.width(),
              c = train_images.channels();
  std::size_t flat_units = 0;
  std::size_t li = 0;  // predictable-layer index

  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    const LayerSpec& spec = cfg.layers[i];
    const std::uint64_t lseed = derive_seed(cell_seed, 100 + i);

    if (spec.kind == LayerSpec::Kind::MaxPool) {
      if (!is_image) throw ConfigError("maxpool needs an image input");
      net.layers.push_back(std::make_unique<MaxPoolLayer>(spec.size, spec.stride));
      s = net.layers.back()->forward(s);
      h = (h - spec.size) / spec.stride + 1;
      w = (w - spec.size) / spec.stride + 1;
      continue;
    }

    const std::string& strat = per_layer_strategy[li];
    if (spec.kind == LayerSpec::Kind::Conv) {
      if (!is_image) throw ConfigError("conv layer needs an image input");
      std::unique_ptr<Layer> layer;
      if (strat == "nokernel") {
        layer = std::make_unique<ConvLayer>(spec.size, spec.size, c, spec.filters,
                                            spec.stride, Activation::Sigmoid, lseed);
      } else {
        const DictionaryStrategy ds = strategy_for_layer(strat, spec);
        if (ds.needs_activations() || ds.needs_pretrained_features())
          throw ConfigError("strategy " + strat + " is not supported on conv layers");
        const WeightSpace space = WeightSpace::grid2d(spec.size, spec.size, c);
        const IndexSet alpha =
            sample_alpha(space, fraction, derive_seed(lseed, 1), /*tie_channels=*/true);
        BuiltDictionary dict = build_dictionary(ds, alpha, nullptr, derive_seed(lseed, 2));
        layer = std::make_unique<PredictedConvLayer>(std::move(dict), spec.filters,
                                                     spec.stride, Activation::Sigmoid, lseed);
      }
      net.layers.push_back(std::move(layer));
      s = net.layers.back()->forward(s);
      h = (h - spec.size) / spec.stride + 1;
      w = (w - spec.size) / spec.stride + 1;
      c = spec.filters;
      ++li;
      continue;
    }

    // Dense layer; insert a flatten when coming from image space.
    WeightSpace space;
    if (is_image) {
      space = WeightSpace::grid2d(h, w, c);
      net.layers.push_back(std::make_unique<FlattenLayer>());
      s = net.layers.back()->forward(s);
      is_image = false;
      flat_units = h * w * c;
    } else {
      space = WeightSpace::flat(flat_units);
    }

    std::unique_ptr<Layer> layer;
    if (strat == "nokernel") {
      layer = std::make_unique<DenseLayer>(flat_units, spec.units, Activation::Sigmoid, lseed);
    } else {
      const DictionaryStrategy ds = strategy_for_layer(strat, spec);
      const ColumnFamily fam =
          make_columns(space, spec.columns, fraction, derive_seed(lseed, 1), true);
      Matrix acts;
      const Matrix* ctx = nullptr;
      if (ds.needs_activations()) {
        acts = as_matrix(s);
        ctx = &acts;
      }
      std::vector<BuiltDictionary> dicts;
      dicts.reserve(fam.count());
      for (std::size_t j = 0; j < fam.count(); ++j) {
        const std::uint64_t dseed = derive_seed(lseed, 10 + j);
        if (ds.needs_pretrained_features()) {
          const Matrix feats = train_ae_features(as_matrix(s), fam.columns[j].n_alpha(),
                                                 plan, ds.ae_epochs, dseed);
          dicts.push_back(build_dictionary(ds, fam.columns[j], &feats, dseed));
        } else {
          dicts.push_back(build_dictionary(ds, fam.columns[j], ctx, dseed));
        }
      }
      layer = std::make_unique<PredictedDenseLayer>(std::move(dicts), spec.units,
                                                    Activation::Sigmoid, lseed);
    }

    // Greedy autoencoder pretraining (LowRank stays untrained, as do the
    // dictionaries: only dynamic parameters move here).
    bool trainable_dict = false;
    if (const auto* p = dynamic_cast<const PredictedDenseLayer*>(layer.get()))
      for (const auto& col : p->columns) trainable_dict |= col.dict.trainable;
    if (plan.epochs > 0 && !trainable_dict)
      pretrain_layer_autoencoder(*layer, as_matrix(s), plan, derive_seed(lseed, 3));

    net.layers.push_back(std::move(layer));
    s = net.layers.back()->forward(s);
    flat_units = spec.units;
    ++li;
  }

  if (is_image) {
    net.layers.push_back(std::make_unique<FlattenLayer>());
    s = net.layers.back()->forward(s);
    flat_units = h * w * c;
  }
  // The softmax head is never predicted.
  net.layers.push_back(std::make_unique<DenseLayer>(flat_units, n_classes,
                                                    Activation::Softmax,
                                                    derive_seed(cell_seed, 0x50f7)));
  return net;
}

namespace {
std::string columns_desc(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& l : cfg.layers) {
    if (l.kind == LayerSpec::Kind::MaxPool) continue;
    if (!out.empty()) out += "/";
    out += std::to_string(l.columns);
  }
  return out.empty() ? "0" : out;
}

std::uint64_t cell_seed_for(const ExperimentConfig& cfg, const std::string& combo,
                            double fraction) {
  const std::string tag = combo + "@" + fmt("%.4f", fraction);
  return derive_seed(cfg.seed, fnv1a(tag.data(), tag.size()));
}

CellResult run_classify_cell(const ExperimentConfig& cfg, const Dataset& train_set,
                             const Dataset& test_set, const std::string& combo,
                             double fraction) {
  const auto t0 = std::chrono::steady_clock::now();
  CellResult cell;
  cell.strategy = combo;
  cell.fraction = fraction;
  cell.columns = columns_desc(cfg);
  cell.epochs = cfg.train.epochs;
  cell.seed = cell_seed_for(cfg, combo, fraction);

  const auto per_layer = split_strategy_combo(cfg, combo);
  const std::size_t n_classes = cfg.classes ? cfg.classes : train_set.n_classes;

  Network net = build_cell_network(cfg, per_layer, fraction, train_set.images, n_classes,
                                   cell.seed);

  OptimizerConfig opt;
  opt.learning_rate = cfg.train.lr;
  opt.momentum = cfg.train.momentum;
  opt.batch_size = cfg.train.batch;
  opt.epochs = cfg.train.epochs;
  opt.seed = derive_seed(cell.seed, 0x7a);
  opt.halve_lr_on_increase = cfg.train.halve_lr_on_increase;

  const TrainTrace trace =
      train(net, train_set.images, train_set.labels, &test_set.images, &test_set.labels, opt);

  const ParamReport report = count_parameters(net);
  cell.dynamic = report.dynamic;
  cell.static_count = report.static_count;
  cell.full_equiv = report.full_equiv;
  cell.fraction_dynamic = report.fraction_dynamic;
  if (!trace.empty()) {
    cell.train_error = trace.back().train_error;
    cell.test_error = trace.back().test_error;
  }

  const std::string stem = sanitize(cfg.id) + "_" + sanitize(combo) + "_" +
                           fmt("%.4f", fraction);
  if (cfg.save_checkpoints) {
    CheckpointMeta meta{cfg.id, combo, fraction, cell.seed};
    save_network_checkpoint((fs::path(cfg.output) / (stem + ".ckpt")).string(), net, meta);
  }
  write_trace_csv((fs::path(cfg.output) / (stem + ".trace.csv")).string(), trace);

  cell.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return cell;
}

CellResult run_rica_cell(const ExperimentConfig& cfg, const Dataset& train_set,
                         const Dataset& test_set, const Matrix& white_patches,
                         const Whitener& whitener, const std::string& strat,
                         double fraction) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& r = cfg.rica;
  CellResult cell;
  cell.strategy = strat;
  cell.fraction = fraction;
  cell.columns = "1";
  cell.epochs = r.epochs;
  cell.seed = cell_seed_for(cfg, strat, fraction);

  const std::size_t n_v = white_patches.cols();
  std::size_t n_h = r.features;
  RicaModel model;
  if (strat == "nokernel") {
    cell.fraction = 1.0;
    model = RicaModel::full(n_v, n_h, r.sparsity, r.epsilon, cell.seed);
  } else {
    if (r.match_budget)
      n_h = static_cast<std::size_t>(std::llround(r.features / fraction));
    DictionaryStrategy ds = DictionaryStrategy::parse(strat);
    ds.sigma = r.sigma;
    ds.lambda = r.lambda;
    const WeightSpace space =
        WeightSpace::grid2d(r.patch, r.patch, train_set.images.channels());
    const IndexSet alpha = sample_alpha(space, fraction, derive_seed(cell.seed, 1), true);
    BuiltDictionary dict;
    if (ds.needs_activations()) {
      dict = build_dictionary(ds, alpha, &white_patches, derive_seed(cell.seed, 2));
    } else if (ds.needs_pretrained_features()) {
      PretrainPlan plan{ds.ae_epochs, r.lr, r.momentum, r.batch, derive_seed(cell.seed, 3)};
      const Matrix feats =
          train_ae_features(white_patches, alpha.n_alpha(), plan, ds.ae_epochs,
                            derive_seed(cell.seed, 3));
      dict = build_dictionary(ds, alpha, &feats, derive_seed(cell.seed, 2));
    } else {
      dict = build_dictionary(ds, alpha, nullptr, derive_seed(cell.seed, 2));
    }
    model = RicaModel::with_dictionary(std::move(dict), n_h, r.sparsity, r.epsilon, cell.seed);
  }

  OptimizerConfig opt;
  opt.learning_rate = r.lr;
  opt.momentum = r.momentum;
  opt.batch_size = r.batch;
  opt.epochs = r.epochs;
  opt.seed = derive_seed(cell.seed, 0x7b);

  const auto losses = train_rica(model, white_patches, opt);

  OptimizerConfig readout;
  readout.learning_rate = r.readout_lr;
  readout.momentum = r.momentum;
  readout.batch_size = r.readout_batch;
  readout.epochs = r.readout_epochs;
  readout.seed = derive_seed(cell.seed, 0x7c);
  const double acc = rica_classify(model, &whitener, train_set, test_set, r.patch, r.stride,
                                   r.pool, readout);

  cell.dynamic = model.dynamic_count();
  cell.static_count = model.static_count();
  cell.full_equiv = n_v * model.n_h();
  cell.fraction_dynamic =
      static_cast<double>(cell.dynamic) / static_cast<double>(cell.full_equiv);
  cell.train_error = losses.empty() ? 0.0 : losses.back();  // final RICA loss
  cell.test_error = 1.0 - acc;

  if (cfg.save_checkpoints) {
    const std::string stem =
        sanitize(cfg.id) + "_" + sanitize(strat) + "_" + fmt("%.4f", cell.fraction);
    CheckpointMeta meta{cfg.id, strat, cell.fraction, cell.seed};
    save_rica_checkpoint((fs::path(cfg.output) / (stem + ".ckpt")).string(), model, meta);
  }

  cell.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return cell;
}
}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.output);
  Dataset train_set, test_set;
  load_datasets(cfg, train_set, test_set);

  RunResult result;
  std::size_t diverged = 0;

  // nokernel-only combos do not depend on the fraction; run them once.
  struct CellKey {
    std::string combo;
    double fraction;
  };
  std::vector<CellKey> grid;
  for (const auto& combo : cfg.strategies) {
    bool any_predicted = false;
    if (cfg.task == "classify") {
      for (const auto& part : split_strategy_combo(cfg, combo))
        any_predicted |= part != "nokernel";
    } else {
      any_predicted = combo != "nokernel";
    }
    if (!any_predicted) {
      grid.push_back({combo, 1.0});
      continue;
    }
    for (const double f : cfg.fractions) grid.push_back({combo, f});
  }

  Matrix white_patches;
  Whitener whitener;
  if (cfg.task == "rica") {
    Matrix patches =
        extract_patches(train_set, cfg.rica.patch, cfg.rica.patches, derive_seed(cfg.seed, 0x9a));
    remove_patch_means(patches);
    whitener = fit_zca(patches);
    white_patches = whiten(whitener, patches);
  }

  for (const auto& key : grid) {
    try {
      if (cfg.task == "classify")
        result.cells.push_back(run_classify_cell(cfg, train_set, test_set, key.combo,
                                                 key.fraction));
      else
        result.cells.push_back(run_rica_cell(cfg, train_set, test_set, white_patches,
                                             whitener, key.combo, key.fraction));
    } catch (const DivergenceError&) {
      CellResult cell;
      cell.strategy = key.combo;
      cell.fraction = key.fraction;
      cell.columns = cfg.task == "classify" ? columns_desc(cfg) : "1";
      cell.epochs = cfg.task == "classify" ? cfg.train.epochs : cfg.rica.epochs;
      cell.seed = cell_seed_for(cfg, key.combo, key.fraction);
      cell.diverged = true;
      result.cells.push_back(cell);
      ++diverged;
    }
  }

  result.all_diverged = !result.cells.empty() && diverged == result.cells.size();
  result.csv_path = (fs::path(cfg.output) / (sanitize(cfg.id) + ".csv")).string();
  std::ofstream out(result.csv_path);
  if (!out) throw DataError("cannot write results CSV '" + result.csv_path + "'");
  out << cells_to_csv(cfg.id, architecture_digest(cfg), result.cells);
  return result;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {
// Pick a tile shape for features of length n_v: a known grid space if the
// checkpoint carries one, otherwise a square (trying 3 channels first).
void guess_tile_shape(std::size_t n_v, std::size_t& h, std::size_t& w, std::size_t& c) {
  const auto is_square = [](std::size_t n, std::size_t& side) {
    side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n))));
    return side * side == n;
  };
  std::size_t side = 0;
  if (n_v % 3 == 0 && is_square(n_v / 3, side)) {
    h = w = side;
    c = 3;
  } else if (is_square(n_v, side)) {
    h = w = side;
    c = 1;
  } else {
    h = 1;
    w = n_v;
    c = 1;
  }
}

void tile_shape_from_space(const WeightSpace& space, std::size_t& h, std::size_t& w,
                           std::size_t& c) {
  if (space.kind == WeightSpace::Kind::Grid2d) {
    h = space.height;
    w = space.width;
    c = space.channels;
  } else {
    guess_tile_shape(space.size(), h, w, c);
  }
}
}  // namespace

void render_filters(const std::string& checkpoint_path, std::size_t layer_index,
                    const std::string& out_path) {
  const LoadedCheckpoint ck = load_checkpoint(checkpoint_path);

  Matrix features;
  std::size_t th = 0, tw = 0, tc = 0;
  if (ck.is_network) {
    if (layer_index >= ck.network.layers.size())
      throw ConfigError("render: layer " + std::to_string(layer_index) +
                        " does not exist (network has " +
                        std::to_string(ck.network.layers.size()) + " layers)");
    const Layer& layer = *ck.network.layers[layer_index];
    if (const auto* l = dynamic_cast<const DenseLayer*>(&layer)) {
      features = l->w;
      guess_tile_shape(features.rows(), th, tw, tc);
    } else if (const auto* l = dynamic_cast<const PredictedDenseLayer*>(&layer)) {
      features = l->effective_weights();
      tile_shape_from_space(l->columns[0].dict.alpha.space, th, tw, tc);
    } else if (const auto* l = dynamic_cast<const ConvLayer*>(&layer)) {
      features = l->bank;
      th = l->fh;
      tw = l->fw;
      tc = l->cin;
    } else if (const auto* l = dynamic_cast<const PredictedConvLayer*>(&layer)) {
      features = l->effective_bank();
      th = l->fh;
      tw = l->fw;
      tc = l->cin;
    } else {
      throw ConfigError("render: layer " + std::to_string(layer_index) + " (" +
                        layer.kind() + ") has no renderable features");
    }
  } else {
    if (layer_index != 0)
      throw ConfigError("render: RICA checkpoints have a single feature layer (index 0)");
    features = ck.rica.effective_features();
    if (ck.rica.predicted)
      tile_shape_from_space(ck.rica.dict.alpha.space, th, tw, tc);
    else
      guess_tile_shape(features.rows(), th, tw, tc);
  }

  const std::size_t n_feat = features.cols();
  const std::size_t tiles_x =
      static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_feat))));
  const std::size_t tiles_y = (n_feat + tiles_x - 1) / tiles_x;
  const std::size_t img_w = tiles_x * tw;
  const std::size_t img_h = tiles_y * th;
  std::vector<int> gray(img_w * img_h, 128);  // empty slots stay mid-gray

  for (std::size_t f = 0; f < n_feat; ++f) {
    // Channel-average the feature, then normalize the tile to [0, 255].
    std::vector<double> tile(th * tw, 0.0);
    for (std::size_t y = 0; y < th; ++y)
      for (std::size_t x = 0; x < tw; ++x) {
        double v = 0.0;
        for (std::size_t cidx = 0; cidx < tc; ++cidx)
          v += features((y * tw + x) * tc + cidx, f);
        tile[y * tw + x] = v / static_cast<double>(tc);
      }
    const auto [lo_it, hi_it] = std::minmax_element(tile.begin(), tile.end());
    const double lo = *lo_it, hi = *hi_it;
    const std::size_t ty = (f / tiles_x) * th, tx = (f % tiles_x) * tw;
    for (std::size_t y = 0; y < th; ++y)
      for (std::size_t x = 0; x < tw; ++x) {
        int v = 128;
        if (hi > lo)
          v = static_cast<int>(std::lround((tile[y * tw + x] - lo) / (hi - lo) * 255.0));
        gray[(ty + y) * img_w + tx + x] = v;
      }
  }

  std::ofstream out(out_path);
  if (!out) throw DataError("render: cannot write '" + out_path + "'");
  out << "P2\n" << img_w << " " << img_h << "\n255\n";
  for (std::size_t y = 0; y < img_h; ++y) {
    for (std::size_t x = 0; x < img_w; ++x) out << gray[y * img_w + x] << (x + 1 < img_w ? ' ' : '\n');
  }
}

void merge_reports(const std::vector<std::string>& csv_paths, const std::string& out_path) {
  if (csv_paths.empty()) throw ConfigError("report: no input CSVs");
  std::string header;
  std::ostringstream body;
  for (const auto& p : csv_paths) {
    std::ifstream in(p);
    if (!in) throw DataError("report: cannot open '" + p + "'");
    std::string line;
    if (!std::getline(in, line)) throw FormatError("report: '" + p + "' is empty");
    if (header.empty()) header = line;
    else if (line != header)
      throw FormatError("report: '" + p + "' has a different schema");
    while (std::getline(in, line))
      if (!line.empty()) body << line << '\n';
  }
  std::ofstream out(out_path);
  if (!out) throw DataError("report: cannot write '" + out_path + "'");
  out << header << '\n' << body.str();
}

}  // namespace dictnet
