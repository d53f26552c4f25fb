#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "rawgrl/actorcritic.hpp"
#include "rawgrl/desim.hpp"
#include "rawgrl/netmodel.hpp"
#include "rawgrl/online.hpp"
#include "rawgrl/training.hpp"

namespace rawgrl {

// Parsed value of the TOML subset used by config files: integers, floats,
// booleans, basic strings and (nested) arrays of those.
struct TomlValue {
  std::variant<std::int64_t, double, bool, std::string, std::vector<TomlValue>> v;

  double as_double(const std::string& key) const;
  std::int64_t as_int(const std::string& key) const;
  bool as_bool(const std::string& key) const;
  const std::string& as_string(const std::string& key) const;
  const std::vector<TomlValue>& as_array(const std::string& key) const;
};

// "section.key" -> value; top-level keys have no prefix. Throws ConfigError
// with the line number on malformed input or duplicate keys.
std::map<std::string, TomlValue> parse_toml(const std::string& text);

struct RunConfig {
  std::uint64_t seed = 1;
  ScenarioConfig scenario;
  MacConfig mac;
  ModelConfig model;
  TrainConfig pretrain;
  TrainConfig train;
  OnlineConfig online;
  EvalConfig eval;

  // Reseeds every phase from `seed`.
  void set_seed(std::uint64_t s);
  void validate() const;  // throws ConfigError
};

// Unknown sections or keys are errors, so typos never pass silently.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);  // missing file -> ConfigError

// Canonical TOML rendering of every field; parse_config(to_toml(c)) == c.
std::string to_toml(const RunConfig& cfg);

}  // namespace rawgrl
