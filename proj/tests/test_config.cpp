#include <sstream>
#include <string>

#include "doctest.h"
#include "tmd/config.hpp"
#include "tmd/errors.hpp"
#include "tmd/gradcheck.hpp"

using namespace tmd;

TEST_CASE("minimal generator-validation config is filled with defaults") {
  const ExperimentConfig c = parse_config(ExperimentKind::validate_generator, "target = gaussian1d\n");
  CHECK(c.text("target") == "gaussian1d");
  CHECK(c.text("test_function") == "quadratic");
  CHECK(c.integers("m_grid") == std::vector<std::uint64_t>{100, 2000});
  CHECK(c.reals("epsilon_grid") == std::vector<double>{0.05});
  CHECK(c.integers("seeds").size() == 10);
  CHECK(c.integer("seed") == 0);
}

TEST_CASE("latent_dim defaults to 16 and epsilon to the median heuristic") {
  const ExperimentConfig c(ExperimentKind::train_classifier);
  CHECK(c.size("latent_dim") == 16);
  CHECK(c.text("epsilon") == "median");
  CHECK(c.bandwidth("epsilon") == 0.0);
}

TEST_CASE("a negative epsilon is rejected naming the field") {
  try {
    parse_config(ExperimentKind::train_classifier, "epsilon = -1\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "epsilon");
  }
  ExperimentConfig c(ExperimentKind::train_pointset);
  c.set("epsilon", "0.25");
  CHECK(c.bandwidth("epsilon") == 0.25);
}

TEST_CASE("unknown keys are rejected") {
  CHECK_THROWS_AS(parse_config(ExperimentKind::segment, "learning_rate = 0.1\n"), UnknownKey);
  ExperimentConfig c(ExperimentKind::gradcheck);
  CHECK_THROWS_AS(c.set("bogus", "1"), UnknownKey);
  CHECK_THROWS_AS(c.text("bogus"), UnknownKey);
}

TEST_CASE("malformed values and lines name what is wrong") {
  auto field_of = [](const std::string& text) {
    try {
      parse_config(ExperimentKind::segment, text);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("none");
  };
  CHECK(field_of("steps = -3\n") == "steps");
  CHECK(field_of("steps = 2.5\n") == "steps");
  CHECK(field_of("mu = abc\n") == "mu");
  CHECK(field_of("mu = nan\n") == "mu");
  CHECK(field_of("use_tmd = maybe\n") == "use_tmd");
  CHECK(field_of("size = 40\n") == "size");
  CHECK(field_of("images = 0\n") == "images");
  CHECK(field_of("eta = 0\n") == "eta");
  CHECK(field_of("\n\njust words\n") == "line 3");
  CHECK(field_of("kind = gradcheck\n") == "kind");
  CHECK(field_of("# comment only\nsteps = 4  # trailing\n") == "none");
}

TEST_CASE("a rejected value leaves the previous one in place") {
  ExperimentConfig c(ExperimentKind::segment);
  CHECK_THROWS_AS(c.set("size", "24"), ConfigError);
  CHECK(c.size("size") == 32);
}

TEST_CASE("emitting the effective config and parsing it back keeps the hash") {
  for (ExperimentKind kind : all_kinds()) {
    ExperimentConfig c(kind);
    c.set("seed", "42");
    const ExperimentConfig back = parse_config(kind, c.canonical());
    CHECK(back.canonical() == c.canonical());
    CHECK(back.hash() == c.hash());
  }
}

TEST_CASE("equivalent spellings hash alike, different values do not") {
  const ExperimentConfig a = parse_config(ExperimentKind::validate_generator, "epsilon_grid = 0.050, 0.1\n");
  const ExperimentConfig b = parse_config(ExperimentKind::validate_generator, "epsilon_grid=5e-2,0.10\nkind = validate-generator");
  const ExperimentConfig c = parse_config(ExperimentKind::validate_generator, "epsilon_grid = 0.05\n");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
  CHECK(ExperimentConfig(ExperimentKind::segment).hash() != ExperimentConfig(ExperimentKind::gradcheck).hash());
}

TEST_CASE("the config hash is a fixed function of the canonical text") {
  // FNV-1a of the canonical text; pinned so a platform or library change shows up
  const ExperimentConfig c(ExperimentKind::dump_operator);
  CHECK(c.canonical() == "kind = dump-operator\nepsilon = median\ninput_dim = 2\nrows = 8\nseed = 0\n");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : c.canonical()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  CHECK(c.hash() == h);
  CHECK(hex64(0x1234abcdULL) == "000000001234abcd");
}

TEST_CASE("kind names round-trip") {
  for (ExperimentKind kind : all_kinds()) CHECK(parse_kind(to_string(kind)) == kind);
  CHECK_THROWS_AS(parse_kind("train"), ConfigError);
}

TEST_CASE("gradient_error switches from relative to absolute near zero") {
  CHECK(gradient_error(Tensor::vector({1.0}), Tensor::vector({1.0001})) == doctest::Approx(1e-4 / 1.0001));
  CHECK(gradient_error(Tensor::vector({1e-9}), Tensor::vector({5e-7})) == doctest::Approx(5e-7 / 1e-2 - 1e-9 / 1e-2));
  CHECK(gradient_error(Tensor::vector({0.0, 2.0}), Tensor::vector({0.0, 2.0})) == 0.0);
}

TEST_CASE("gradient check passes with linear and MLP density heads") {
  for (std::size_t hidden : {0u, 3u}) {
    GradcheckOptions o;
    o.cases = 3;
    o.head_hidden = hidden;
    const GradcheckReport r = run_gradcheck(o);
    CHECK(r.passed);
    CHECK(r.rows.size() == 3 * (hidden ? 7u : 5u));
    CHECK(r.worst.error <= 1e-4);
  }
}
