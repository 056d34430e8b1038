#include <doctest.h>

#include "dictnet/config.hpp"
#include "dictnet/error.hpp"

using namespace dictnet;

namespace {
const char* kValid = R"(
# a complete classify config
[experiment]
id = mnist_desk
output = /tmp/dictnet_runs/mnist
seed = 1

[data]
kind = synth_digits
train_count = 200
test_count = 50

[model]
layer = dense units=100 columns=10 sigma=1.0 lambda=1e-6
layer = dense units=100 columns=10
classes = 10

[train]
epochs = 20
batch = 100
lr = 0.2
momentum = 0.9
pretrain_epochs = 3

[sweep]
strategies = SE-Emp RandCon nokernel
fractions = 0.1 0.5
)";
}

TEST_CASE("a full config parses with the right fields") {
  const ExperimentConfig cfg = parse_config_text(kValid, "test");
  CHECK(cfg.id == "mnist_desk");
  CHECK(cfg.task == "classify");
  CHECK(cfg.seed == 1);
  REQUIRE(cfg.layers.size() == 2);
  CHECK(cfg.layers[0].units == 100);
  CHECK(cfg.layers[0].columns == 10);
  CHECK(cfg.layers[0].sigma == 1.0);
  CHECK(cfg.layers[0].lambda == doctest::Approx(1e-6));
  CHECK(cfg.layers[1].lambda == -1.0);  // kind default
  CHECK(cfg.classes == 10);
  CHECK(cfg.train.epochs == 20);
  CHECK(cfg.train.pretrain_epochs == 3);
  REQUIRE(cfg.strategies.size() == 3);
  REQUIRE(cfg.fractions.size() == 2);
  CHECK(predictable_layer_count(cfg) == 2);

  const auto parts = split_strategy_combo(cfg, "SE-Emp");
  REQUIRE(parts.size() == 2);
  CHECK(parts[0] == "SE");
  CHECK(parts[1] == "Emp");
  // Single names broadcast to every predictable layer.
  const auto broadcast = split_strategy_combo(cfg, "RandCon");
  CHECK(broadcast == std::vector<std::string>{"RandCon", "RandCon"});
}

TEST_CASE("schema violations name the offending field") {
  CHECK_THROWS_WITH_AS(parse_config_text("[experiment]\nid = x\nbogus = 1\n", "t"),
                       doctest::Contains("experiment.bogus"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("[nonsense]\nk = v\n", "t"),
                       doctest::Contains("nonsense"), ConfigError);
  const std::string no_seed = R"(
[experiment]
id = x
output = /tmp/x
[data]
kind = synth_digits
train_count = 10
test_count = 10
[model]
layer = dense units=4
)";
  CHECK_THROWS_WITH_AS(parse_config_text(no_seed, "t"),
                       doctest::Contains("experiment.seed"), ConfigError);
}

TEST_CASE("fractions outside (0,1] are rejected") {
  std::string bad = kValid;
  bad.replace(bad.find("fractions = 0.1 0.5"), 19, "fractions = 0.0 0.5");
  CHECK_THROWS_WITH_AS(parse_config_text(bad, "t"), doctest::Contains("fractions"),
                       ConfigError);
  std::string bad2 = kValid;
  bad2.replace(bad2.find("fractions = 0.1 0.5"), 19, "fractions = 1.5");
  CHECK_THROWS_AS(parse_config_text(bad2, "t"), ConfigError);
}

TEST_CASE("layer lines are validated") {
  const std::string bad_kind = R"(
[experiment]
id = x
output = /tmp/x
seed = 3
[data]
kind = synth_digits
train_count = 10
test_count = 10
[model]
layer = blob units=3
)";
  CHECK_THROWS_WITH_AS(parse_config_text(bad_kind, "t"),
                       doctest::Contains("unknown layer kind"), ConfigError);
  const std::string conv_cols = R"(
[experiment]
id = x
output = /tmp/x
seed = 3
[data]
kind = synth_textures
train_count = 10
test_count = 10
[model]
layer = conv filters=4 size=8 columns=2
)";
  CHECK_THROWS_WITH_AS(parse_config_text(conv_cols, "t"),
                       doctest::Contains("one column"), ConfigError);
}

TEST_CASE("combo arity must match the predictable layers") {
  const ExperimentConfig cfg = parse_config_text(kValid, "test");
  CHECK_THROWS_WITH_AS(split_strategy_combo(cfg, "SE-Emp-SE"),
                       doctest::Contains("2 predictable layers"), ConfigError);
  CHECK_THROWS_WITH_AS(split_strategy_combo(cfg, "SE-Bogus"),
                       doctest::Contains("Bogus"), ConfigError);
}

TEST_CASE("duplicate keys are rejected, repeated layer lines are not") {
  const std::string dup = "[experiment]\nid = a\nid = b\n";
  CHECK_THROWS_WITH_AS(parse_config_text(dup, "t"), doctest::Contains("duplicate"),
                       ConfigError);
}

TEST_CASE("bad combos are rejected at parse time") {
  std::string bad = kValid;
  bad.replace(bad.find("strategies = SE-Emp RandCon nokernel"), 36,
              "strategies = SE-Emp-Emp2");
  CHECK_THROWS_AS(parse_config_text(bad, "t"), ConfigError);
}

TEST_CASE("rica configs parse and enforce their own schema") {
  const std::string rica = R"(
[experiment]
id = rica_desk
task = rica
output = /tmp/dictnet_runs/rica
seed = 4
[data]
kind = synth_textures
train_count = 100
test_count = 40
[rica]
features = 32
patch = 8
patches = 1000
fraction_unknown = 1
)";
  CHECK_THROWS_WITH_AS(parse_config_text(rica, "t"),
                       doctest::Contains("rica.fraction_unknown"), ConfigError);

  std::string ok = rica;
  ok.replace(ok.find("fraction_unknown = 1\n"), 21, "");
  const ExperimentConfig cfg = parse_config_text(ok, "t");
  CHECK(cfg.task == "rica");
  CHECK(cfg.rica.features == 32);
  CHECK(cfg.strategies == std::vector<std::string>{"nokernel"});
}

TEST_CASE("model section is rejected for rica tasks") {
  const std::string bad = R"(
[experiment]
id = x
task = rica
output = /tmp/x
seed = 1
[data]
kind = synth_textures
train_count = 10
test_count = 10
[model]
layer = dense units=4
[rica]
features = 8
)";
  CHECK_THROWS_WITH_AS(parse_config_text(bad, "t"), doctest::Contains("[model]"),
                       ConfigError);
}
