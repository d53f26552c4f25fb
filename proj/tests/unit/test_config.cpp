#include <doctest.h>

#include <filesystem>

#include "rawgrl/config.hpp"
#include "rawgrl/errors.hpp"

using namespace rawgrl;

#ifndef RAWGRL_SOURCE_DIR
#define RAWGRL_SOURCE_DIR "."
#endif

TEST_CASE("defaults") {
  RunConfig c;
  CHECK(c.scenario.num_users == 20);
  CHECK(c.scenario.num_groups == 4);
  CHECK(c.scenario.ap_positions.size() == 4);
  CHECK(c.model.M == 5);
  CHECK(c.model.E == 5);
  CHECK(c.model.zeta == 3);
  CHECK(c.train.steps == 1000);
  CHECK(c.train.lr == 1e-4);
  CHECK(c.train.explore == 0.1);
  CHECK(c.online.lr == 1e-3);
  CHECK(c.online.regen == 0.1);
  CHECK(c.online.window == 200);
  CHECK(c.eval.sim_slots == 2000);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("the shipped default file parses to the built-in defaults") {
  const auto c = load_config(std::string(RAWGRL_SOURCE_DIR) + "/configs/default.toml");
  CHECK(to_toml(c) == to_toml(RunConfig{}));
}

TEST_CASE("toml rendering round trips") {
  RunConfig c;
  c.set_seed(42);
  c.scenario.num_users = 10;
  c.train.optimizer = OptimizerKind::Sgd;
  c.online.mobile = true;
  c.scenario.ap_positions = {{1.5, -2.25}};
  const auto text = to_toml(c);
  CHECK(to_toml(parse_config(text)) == text);
  CHECK(parse_config(text).seed == 42);
}

TEST_CASE("partial files override only what they name") {
  const auto c = parse_config("seed = 9\n[scenario]\nnum_users = 7 # trailing comment\n[train]\nlr = 0.5\n");
  CHECK(c.seed == 9);
  CHECK(c.scenario.num_users == 7);
  CHECK(c.train.lr == 0.5);
  CHECK(c.train.steps == 1000);
  // Integers are accepted where floats are expected.
  CHECK(parse_config("[online]\nlr = 1\n").online.lr == 1.0);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("[scenario]\nnum_userz = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[nosuch]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[scenario]\nnum_users = \"many\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[scenario]\nnum_users = 3\nnum_users = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[scenario\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[scenario]\nnum_groups = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[train]\nexplore = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[train]\noptimizer = \"rmsprop\"\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/rawgrl.toml"), ConfigError);
}

TEST_CASE("toml subset values") {
  const auto t = parse_toml("a = -3\nb = 2.5e-3\nc = true\nd = \"x y\"\ne = [[1, 2], [3.5, 4]]\n[s]\nf = false\n");
  CHECK(t.at("a").as_int("a") == -3);
  CHECK(t.at("b").as_double("b") == 2.5e-3);
  CHECK(t.at("c").as_bool("c"));
  CHECK(t.at("d").as_string("d") == "x y");
  CHECK(t.at("e").as_array("e")[1].as_array("e")[0].as_double("e") == 3.5);
  CHECK_FALSE(t.at("s.f").as_bool("s.f"));
  CHECK_THROWS_AS(t.at("d").as_int("d"), ConfigError);
}
