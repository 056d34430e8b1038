#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "dictnet/checkpoint.hpp"
#include "dictnet/error.hpp"
#include "dictnet/experiment.hpp"

using namespace dictnet;
namespace fs = std::filesystem;

namespace {
const char* kTinyClassify = R"(
[experiment]
id = tiny
output = {OUT}
seed = 11

[data]
kind = synth_digits
train_count = 120
test_count = 40

[model]
layer = dense units=16 columns=2
classes = 10

[train]
epochs = 2
batch = 20
lr = 0.2
momentum = 0.9
pretrain_epochs = 1
pretrain_lr = 0.02

[sweep]
strategies = nokernel SE
fractions = 0.25 0.75
)";

std::string with_output(const char* tmpl, const std::string& out) {
  std::string s = tmpl;
  const auto at = s.find("{OUT}");
  s.replace(at, 5, out);
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Strip the trailing wall-seconds column from every CSV line.
std::string strip_wall(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    const auto comma = line.rfind(',');
    out += line.substr(0, comma);
    out += '\n';
  }
  return out;
}

// Minimal plain-PGM reader used as the render fixture.
struct Pgm {
  std::size_t width = 0, height = 0, maxval = 0;
  std::vector<int> pixels;
};
Pgm read_pgm(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::string magic;
  in >> magic;
  REQUIRE(magic == "P2");
  Pgm p;
  in >> p.width >> p.height >> p.maxval;
  p.pixels.resize(p.width * p.height);
  for (auto& v : p.pixels) {
    in >> v;
    REQUIRE(in);
  }
  return p;
}
}  // namespace

TEST_CASE("a tiny classify grid runs end to end") {
  const std::string out = "/tmp/dictnet_test_run_a";
  fs::remove_all(out);
  const ExperimentConfig cfg = parse_config_text(with_output(kTinyClassify, out), "t");
  const RunResult result = run_experiment(cfg);

  // nokernel collapses to one row; SE sweeps both fractions.
  REQUIRE(result.cells.size() == 3);
  CHECK(result.cells[0].strategy == "nokernel");
  CHECK(result.cells[0].fraction == 1.0);
  CHECK(result.cells[0].fraction_dynamic == 1.0);
  CHECK(result.cells[1].strategy == "SE");
  CHECK_FALSE(result.all_diverged);

  // fraction_dynamic is monotone in the sweep variable.
  CHECK(result.cells[1].fraction < result.cells[2].fraction);
  CHECK(result.cells[1].fraction_dynamic < result.cells[2].fraction_dynamic);

  const std::string csv = read_file(result.csv_path);
  CHECK(csv.rfind("experiment,arch,strategy,fraction,columns,dynamic_params,"
                  "static_params,fraction_dynamic,train_error,test_error,epochs,seed,"
                  "wall_seconds\n", 0) == 0);

  // Checkpoints and traces land next to the CSV.
  CHECK(fs::exists(fs::path(out) / "tiny_SE_0.2500.ckpt"));
  CHECK(fs::exists(fs::path(out) / "tiny_nokernel_1.0000.trace.csv"));
}

TEST_CASE("reruns are byte-identical up to the wall column") {
  const std::string out_a = "/tmp/dictnet_test_run_b1";
  const std::string out_b = "/tmp/dictnet_test_run_b2";
  fs::remove_all(out_a);
  fs::remove_all(out_b);
  const RunResult ra =
      run_experiment(parse_config_text(with_output(kTinyClassify, out_a), "t"));
  const RunResult rb =
      run_experiment(parse_config_text(with_output(kTinyClassify, out_b), "t"));
  CHECK(strip_wall(read_file(ra.csv_path)) == strip_wall(read_file(rb.csv_path)));
}

TEST_CASE("rendering zero weights yields a uniform mid-gray grid") {
  Network net;
  net.layers.push_back(std::make_unique<DenseLayer>(Matrix(16, 4),
                                                    std::vector<double>(4, 0.0),
                                                    Activation::Sigmoid));
  save_network_checkpoint("/tmp/dictnet_test_zero.ckpt", net, {});
  render_filters("/tmp/dictnet_test_zero.ckpt", 0, "/tmp/dictnet_test_zero.pgm");
  const Pgm p = read_pgm("/tmp/dictnet_test_zero.pgm");
  CHECK(p.width == 8);   // 2x2 tiles of 4x4
  CHECK(p.height == 8);
  CHECK(p.maxval == 255);
  for (const int v : p.pixels) CHECK(v == 128);
}

TEST_CASE("rendering the identity gives one-hot tiles") {
  Network net;
  net.layers.push_back(std::make_unique<DenseLayer>(Matrix::identity(4),
                                                    std::vector<double>(4, 0.0),
                                                    Activation::Sigmoid));
  save_network_checkpoint("/tmp/dictnet_test_eye.ckpt", net, {});
  render_filters("/tmp/dictnet_test_eye.ckpt", 0, "/tmp/dictnet_test_eye.pgm");
  const Pgm p = read_pgm("/tmp/dictnet_test_eye.pgm");
  REQUIRE(p.pixels.size() == 16);  // 2x2 tiles of 2x2 pixels
  int bright = 0, dark = 0;
  for (const int v : p.pixels) {
    if (v == 255) ++bright;
    if (v == 0) ++dark;
  }
  CHECK(bright == 4);  // exactly one hot pixel per tile
  CHECK(dark == 12);
}

TEST_CASE("rendering a missing layer fails cleanly") {
  Network net;
  net.layers.push_back(std::make_unique<DenseLayer>(4, 2, Activation::Softmax, 1));
  save_network_checkpoint("/tmp/dictnet_test_ml.ckpt", net, {});
  CHECK_THROWS_WITH_AS(
      render_filters("/tmp/dictnet_test_ml.ckpt", 5, "/tmp/dictnet_test_ml.pgm"),
      doctest::Contains("does not exist"), ConfigError);
}

TEST_CASE("rica checkpoints render to parseable grids") {
  RicaModel m = RicaModel::full(16, 6, 0.5, 1e-2, 30);
  save_rica_checkpoint("/tmp/dictnet_test_rr.ckpt", m, {"r", "nokernel", 1.0, 1});
  render_filters("/tmp/dictnet_test_rr.ckpt", 0, "/tmp/dictnet_test_rr.pgm");
  const Pgm p = read_pgm("/tmp/dictnet_test_rr.pgm");
  CHECK(p.width == 3 * 4);  // 6 features tile into 3x2
  CHECK(p.height == 2 * 4);
  for (const int v : p.pixels) {
    CHECK(v >= 0);
    CHECK(v <= 255);
  }
}

TEST_CASE("merge_reports concatenates compatible CSVs") {
  const std::string a = "/tmp/dictnet_test_m1.csv";
  const std::string b = "/tmp/dictnet_test_m2.csv";
  {
    std::ofstream fa(a);
    fa << "h1,h2\n1,2\n";
    std::ofstream fb(b);
    fb << "h1,h2\n3,4\n";
  }
  merge_reports({a, b}, "/tmp/dictnet_test_merged.csv");
  CHECK(read_file("/tmp/dictnet_test_merged.csv") == "h1,h2\n1,2\n3,4\n");

  {
    std::ofstream fc("/tmp/dictnet_test_m3.csv");
    fc << "different,schema\n";
  }
  CHECK_THROWS_AS(merge_reports({a, "/tmp/dictnet_test_m3.csv"}, "/tmp/out.csv"),
                  FormatError);
}

TEST_CASE("missing data files surface as format errors") {
  std::string cfg_text = R"(
[experiment]
id = x
output = /tmp/dictnet_test_run_missing
seed = 5
[data]
kind = idx
train_images = /nonexistent/ti
train_labels = /nonexistent/tl
test_images = /nonexistent/ei
test_labels = /nonexistent/el
[model]
layer = dense units=4
)";
  const ExperimentConfig cfg = parse_config_text(cfg_text, "t");
  CHECK_THROWS_AS(run_experiment(cfg), FormatError);
}
