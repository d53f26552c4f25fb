#include "rawgrl/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <algorithm>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "rawgrl/errors.hpp"
#include "rawgrl/io.hpp"

namespace rawgrl {

namespace {

[[noreturn]] void type_error(const std::string& key, const char* want) {
  throw ConfigError("config key '" + key + "' must be " + want);
}

class Parser {
 public:
  Parser(const std::string& line, int line_no) : s_(line), line_no_(line_no) {}

  TomlValue value() {
    skip_ws();
    if (eof()) fail("missing value");
    const char c = s_[pos_];
    if (c == '[') return array();
    if (c == '"') return TomlValue{string()};
    if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      return TomlValue{true};
    }
    if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      return TomlValue{false};
    }
    return number();
  }

  void finish() {
    skip_ws();
    if (!eof() && s_[pos_] != '#') fail("unexpected trailing text");
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config line " + std::to_string(line_no_) + ": " + msg);
  }
  bool eof() const { return pos_ >= s_.size(); }
  void skip_ws() {
    while (!eof() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  TomlValue array() {
    ++pos_;
    std::vector<TomlValue> items;
    for (;;) {
      skip_ws();
      if (eof()) fail("unterminated array");
      if (s_[pos_] == ']') {
        ++pos_;
        return TomlValue{std::move(items)};
      }
      items.push_back(value());
      skip_ws();
      if (!eof() && s_[pos_] == ',') {
        ++pos_;
      } else if (eof() || s_[pos_] != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  std::string string() {
    ++pos_;
    std::string out;
    while (!eof() && s_[pos_] != '"') {
      if (s_[pos_] == '\\') fail("escape sequences are not supported");
      out += s_[pos_++];
    }
    if (eof()) fail("unterminated string");
    ++pos_;
    return out;
  }

  TomlValue number() {
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' || s_[pos_] == '-' ||
                      s_[pos_] == '+' || s_[pos_] == '_')) {
      ++pos_;
    }
    std::string tok = s_.substr(start, pos_ - start);
    std::erase(tok, '_');
    if (tok.empty()) fail("expected a value");
    if (tok.front() == '+') tok.erase(0, 1);
    const char* b = tok.data();
    const char* e = b + tok.size();
    if (tok.find_first_of(".eE") == std::string::npos) {
      std::int64_t i = 0;
      const auto r = std::from_chars(b, e, i);
      if (r.ec == std::errc() && r.ptr == e) return TomlValue{i};
    }
    double d = 0.0;
    const auto r = std::from_chars(b, e, d);
    if (r.ec != std::errc() || r.ptr != e) fail("cannot parse value '" + tok + "'");
    return TomlValue{d};
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_no_;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
  return !k.empty() && std::all_of(k.begin(), k.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

int as_int32(const TomlValue& v, const std::string& key) {
  const auto i = v.as_int(key);
  if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) type_error(key, "a 32-bit integer");
  return static_cast<int>(i);
}

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "sgd") return OptimizerKind::Sgd;
  throw ConfigError("optimizer must be \"adam\" or \"sgd\", got \"" + s + "\"");
}

using Setter = std::function<void(RunConfig&, const TomlValue&, const std::string&)>;

template <typename T>
Setter set_double(T RunConfig::*section, double T::*field) {
  return [=](RunConfig& c, const TomlValue& v, const std::string& k) { (c.*section).*field = v.as_double(k); };
}
template <typename T>
Setter set_int(T RunConfig::*section, int T::*field) {
  return [=](RunConfig& c, const TomlValue& v, const std::string& k) { (c.*section).*field = as_int32(v, k); };
}
template <typename T>
Setter set_bool(T RunConfig::*section, bool T::*field) {
  return [=](RunConfig& c, const TomlValue& v, const std::string& k) { (c.*section).*field = v.as_bool(k); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["seed"] = [](RunConfig& c, const TomlValue& v, const std::string& k) {
      const auto s = v.as_int(k);
      if (s < 0) throw ConfigError("seed must be >= 0");
      c.set_seed(static_cast<std::uint64_t>(s));
    };
    using S = ScenarioConfig;
    const auto sc = &RunConfig::scenario;
    t["scenario.area_half_width"] = set_double(sc, &S::area_half_width);
    t["scenario.num_users"] = set_int(sc, &S::num_users);
    t["scenario.carrier_freq"] = set_double(sc, &S::carrier_freq);
    t["scenario.bandwidth"] = set_double(sc, &S::bandwidth);
    t["scenario.tx_power_dbm"] = set_double(sc, &S::tx_power_dbm);
    t["scenario.noise_dbm"] = set_double(sc, &S::noise_dbm);
    t["scenario.sense_threshold_db"] = set_double(sc, &S::sense_threshold_db);
    t["scenario.packet_bits"] = set_int(sc, &S::packet_bits);
    t["scenario.max_error"] = set_double(sc, &S::max_error);
    t["scenario.queue_capacity"] = set_int(sc, &S::queue_capacity);
    t["scenario.arrival_interval_mean"] = set_double(sc, &S::arrival_interval_mean);
    t["scenario.raw_slot_duration"] = set_double(sc, &S::raw_slot_duration);
    t["scenario.num_groups"] = set_int(sc, &S::num_groups);
    t["scenario.mobility_speed"] = set_double(sc, &S::mobility_speed);
    t["scenario.ap_positions"] = [](RunConfig& c, const TomlValue& v, const std::string& k) {
      std::vector<Point> aps;
      for (const auto& p : v.as_array(k)) {
        const auto& xy = p.as_array(k);
        if (xy.size() != 2) type_error(k, "an array of [x, y] pairs");
        aps.push_back({xy[0].as_double(k), xy[1].as_double(k)});
      }
      c.scenario.ap_positions = std::move(aps);
    };

    const auto mc = &RunConfig::mac;
    t["mac.cw_min"] = set_int(mc, &MacConfig::cw_min);
    t["mac.cw_max"] = set_int(mc, &MacConfig::cw_max);
    t["mac.mac_slot"] = set_double(mc, &MacConfig::mac_slot);
    t["mac.difs"] = set_double(mc, &MacConfig::difs);
    t["mac.sifs"] = set_double(mc, &MacConfig::sifs);
    t["mac.ack_duration"] = set_double(mc, &MacConfig::ack_duration);
    t["mac.max_retries"] = set_int(mc, &MacConfig::max_retries);

    const auto md = &RunConfig::model;
    t["model.M"] = set_int(md, &ModelConfig::M);
    t["model.E"] = set_int(md, &ModelConfig::E);
    t["model.zeta"] = set_int(md, &ModelConfig::zeta);

    for (const auto& [name, section] : {std::pair{"pretrain", &RunConfig::pretrain}, std::pair{"train", &RunConfig::train}}) {
      const std::string p = std::string(name) + ".";
      t[p + "steps"] = set_int(section, &TrainConfig::steps);
      t[p + "lr"] = set_double(section, &TrainConfig::lr);
      t[p + "explore"] = set_double(section, &TrainConfig::explore);
      t[p + "sim_slots"] = set_int(section, &TrainConfig::sim_slots);
      t[p + "batch_size"] = set_int(section, &TrainConfig::batch_size);
      t[p + "actor_update_on_explore"] = set_bool(section, &TrainConfig::actor_update_on_explore);
      t[p + "rounding_trials"] = set_int(section, &TrainConfig::rounding_trials);
      t[p + "checkpoint_every"] = set_int(section, &TrainConfig::checkpoint_every);
      t[p + "optimizer"] = [section](RunConfig& c, const TomlValue& v, const std::string& k) {
        (c.*section).optimizer = parse_optimizer(v.as_string(k));
      };
    }

    const auto on = &RunConfig::online;
    t["online.window"] = set_int(on, &OnlineConfig::window);
    t["online.lr"] = set_double(on, &OnlineConfig::lr);
    t["online.regen"] = set_double(on, &OnlineConfig::regen);
    t["online.total_slots"] = set_int(on, &OnlineConfig::total_slots);
    t["online.mobile"] = set_bool(on, &OnlineConfig::mobile);
    t["online.speed"] = set_double(on, &OnlineConfig::speed);
    t["online.snapshot_weights"] = set_bool(on, &OnlineConfig::snapshot_weights);
    t["online.rounding_trials"] = set_int(on, &OnlineConfig::rounding_trials);

    const auto ev = &RunConfig::eval;
    t["eval.realizations"] = set_int(ev, &EvalConfig::realizations);
    t["eval.sim_slots"] = set_int(ev, &EvalConfig::sim_slots);
    return t;
  }();
  return table;
}

}  // namespace

double TomlValue::as_double(const std::string& key) const {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  type_error(key, "a number");
}

std::int64_t TomlValue::as_int(const std::string& key) const {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  type_error(key, "an integer");
}

bool TomlValue::as_bool(const std::string& key) const {
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  type_error(key, "a boolean");
}

const std::string& TomlValue::as_string(const std::string& key) const {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  type_error(key, "a string");
}

const std::vector<TomlValue>& TomlValue::as_array(const std::string& key) const {
  if (const auto* a = std::get_if<std::vector<TomlValue>>(&v)) return *a;
  type_error(key, "an array");
}

std::map<std::string, TomlValue> parse_toml(const std::string& text) {
  std::map<std::string, TomlValue> out;
  std::istringstream in(text);
  std::string raw, section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      const auto close = line.find(']');
      const std::string rest = close == std::string::npos ? "" : trim(line.substr(close + 1));
      section = close == std::string::npos ? "" : trim(line.substr(1, close - 1));
      if (!valid_key(section) || (!rest.empty() && rest.front() != '#')) {
        throw ConfigError("config line " + std::to_string(line_no) + ": malformed section header");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) throw ConfigError("config line " + std::to_string(line_no) + ": invalid key '" + key + "'");
    const std::string rhs = line.substr(eq + 1);
    Parser p(rhs, line_no);
    TomlValue value = p.value();
    p.finish();
    const std::string full = section.empty() ? key : section + "." + key;
    if (!out.emplace(full, std::move(value)).second) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + full + "'");
    }
  }
  return out;
}

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  pretrain.seed = s;
  train.seed = s;
  eval.seed = s;
}

void RunConfig::validate() const {
  scenario.validate();
  mac.validate();
  model.validate();
  if (model.num_aps != scenario.num_aps()) throw ConfigError("model AP count disagrees with the scenario");
  pretrain.validate();
  train.validate();
  online.validate(scenario.num_groups);
  eval.validate();
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  const auto values = parse_toml(text);
  // Seed first so that the phase seeds it sets are not order dependent.
  if (auto it = values.find("seed"); it != values.end()) setters().at("seed")(cfg, it->second, "seed");
  for (const auto& [key, value] : values) {
    if (key == "seed") continue;
    auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(cfg, value, key);
  }
  cfg.model.num_aps = cfg.scenario.num_aps();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_toml(const RunConfig& c) {
  std::ostringstream o;
  auto d = [](double v) {
    std::string s = format_double(v);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
  };
  auto b = [](bool v) { return v ? "true" : "false"; };
  auto opt = [](OptimizerKind k) { return k == OptimizerKind::Adam ? "\"adam\"" : "\"sgd\""; };
  const auto& s = c.scenario;
  o << "seed = " << c.seed << "\n\n[scenario]\n"
    << "area_half_width = " << d(s.area_half_width) << "\nap_positions = [";
  for (std::size_t i = 0; i < s.ap_positions.size(); ++i) {
    o << (i ? ", " : "") << "[" << d(s.ap_positions[i].x) << ", " << d(s.ap_positions[i].y) << "]";
  }
  o << "]\nnum_users = " << s.num_users << "\ncarrier_freq = " << d(s.carrier_freq)
    << "\nbandwidth = " << d(s.bandwidth) << "\ntx_power_dbm = " << d(s.tx_power_dbm)
    << "\nnoise_dbm = " << d(s.noise_dbm) << "\nsense_threshold_db = " << d(s.sense_threshold_db)
    << "\npacket_bits = " << s.packet_bits << "\nmax_error = " << d(s.max_error)
    << "\nqueue_capacity = " << s.queue_capacity << "\narrival_interval_mean = " << d(s.arrival_interval_mean)
    << "\nraw_slot_duration = " << d(s.raw_slot_duration) << "\nnum_groups = " << s.num_groups
    << "\nmobility_speed = " << d(s.mobility_speed) << "\n\n[mac]\n"
    << "cw_min = " << c.mac.cw_min << "\ncw_max = " << c.mac.cw_max << "\nmac_slot = " << d(c.mac.mac_slot)
    << "\ndifs = " << d(c.mac.difs) << "\nsifs = " << d(c.mac.sifs) << "\nack_duration = " << d(c.mac.ack_duration)
    << "\nmax_retries = " << c.mac.max_retries << "\n\n[model]\n"
    << "M = " << c.model.M << "\nE = " << c.model.E << "\nzeta = " << c.model.zeta << "\n";
  for (const auto& [name, t] : {std::pair{"pretrain", &c.pretrain}, std::pair{"train", &c.train}}) {
    o << "\n[" << name << "]\nsteps = " << t->steps << "\nlr = " << d(t->lr) << "\nexplore = " << d(t->explore)
      << "\nsim_slots = " << t->sim_slots << "\nbatch_size = " << t->batch_size << "\noptimizer = " << opt(t->optimizer)
      << "\nactor_update_on_explore = " << b(t->actor_update_on_explore) << "\nrounding_trials = " << t->rounding_trials
      << "\ncheckpoint_every = " << t->checkpoint_every << "\n";
  }
  const auto& on = c.online;
  o << "\n[online]\nwindow = " << on.window << "\nlr = " << d(on.lr) << "\nregen = " << d(on.regen)
    << "\ntotal_slots = " << on.total_slots << "\nmobile = " << b(on.mobile) << "\nspeed = " << d(on.speed)
    << "\nsnapshot_weights = " << b(on.snapshot_weights) << "\nrounding_trials = " << on.rounding_trials << "\n"
    << "\n[eval]\nrealizations = " << c.eval.realizations << "\nsim_slots = " << c.eval.sim_slots << "\n";
  return o.str();
}

}  // namespace rawgrl
