#include "rawgrl/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "rawgrl/config.hpp"
#include "rawgrl/errors.hpp"
#include "rawgrl/io.hpp"
#include "rawgrl/maxcut.hpp"
#include "rawgrl/online.hpp"
#include "rawgrl/training.hpp"

namespace rawgrl {

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string out_dir = "out";
  long long seed = -1;
  int threads = 0;
};

std::string hex64(std::uint64_t v) {
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << v;
  return o.str();
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream o;
  o << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return o.str();
}

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("RAWGRL_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("RAWGRL_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

RunConfig load_run_config(const GlobalOptions& g) {
  RunConfig cfg = g.config_path.empty() ? parse_config("") : load_config(g.config_path);
  if (g.seed >= 0) cfg.set_seed(static_cast<std::uint64_t>(g.seed));
  cfg.eval.threads = resolve_threads(g.threads);
  return cfg;
}

fs::path prepare_out(const GlobalOptions& g) {
  const fs::path out(g.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + g.out_dir + ": " + ec.message());
  return out;
}

class Manifest {
 public:
  Manifest(std::string phase, const RunConfig& cfg, std::string extra_identity)
      : phase_(std::move(phase)), toml_(to_toml(cfg)), seed_(cfg.seed) {
    run_id_ = hex64(fnv1a(phase_ + "\n" + toml_ + "\n" + extra_identity));
  }

  void checkpoint(const fs::path& p) { checkpoints_.push_back(p.string()); }
  void output(const fs::path& p) { outputs_.push_back(p.string()); }
  void detail(const std::string& key, nlohmann::json value) { details_[key] = std::move(value); }
  const std::string& run_id() const { return run_id_; }

  fs::path write(const fs::path& dir) const {
    nlohmann::json j;
    j["run_id"] = run_id_;
    j["phase"] = phase_;
    j["seed"] = seed_;
    j["config"] = toml_;
    j["checkpoints"] = checkpoints_;
    j["outputs"] = outputs_;
    j["details"] = details_;
    j["created_utc"] = utc_now();
    const fs::path p = dir / ("manifest_" + phase_ + ".json");
    write_text_file(p.string(), j.dump(2) + "\n");
    return p;
  }

 private:
  std::string phase_, toml_, run_id_;
  std::uint64_t seed_;
  std::vector<std::string> checkpoints_, outputs_;
  nlohmann::json details_ = nlohmann::json::object();
};

ParamStore subset(const ParamStore& all, const std::vector<std::string>& names) {
  ParamStore out;
  for (const auto& n : names) {
    const auto& e = all.at(n);
    auto& copy = out.add(n, e.shape, e.data);
    copy.m = e.m;
    copy.v = e.v;
    copy.step = e.step;
  }
  return out;
}

// Overwrites entries of `params` with those found in checkpoint files; shapes must match.
void merge_checkpoints(ParamStore& params, const std::vector<std::string>& paths) {
  for (const auto& path : paths) {
    if (!fs::exists(path)) throw ConfigError("checkpoint not found: " + path);
    const auto loaded = ParamStore::load(path);
    for (const auto& name : loaded.names()) {
      if (!params.contains(name)) throw ConfigError("checkpoint " + path + " has unknown entry '" + name + "'");
      auto& dst = params.at(name);
      const auto& src = loaded.at(name);
      if (dst.shape != src.shape) {
        throw ConfigError("checkpoint " + path + " entry '" + name +
                          "' has an incompatible shape (was it trained with a different number of APs?)");
      }
      dst = src;
    }
  }
}

ParamStore fresh_model(const RunConfig& cfg) {
  Rng init = make_rng(cfg.seed, Stream::Init);
  return init_model(cfg.model, init);
}

std::vector<std::string> actor_names() { return {"omega", "mu_dot"}; }

int cmd_pretrain(const GlobalOptions& g) {
  const auto cfg = load_run_config(g);
  const auto out = prepare_out(g);
  fs::create_directories(out / "checkpoints");
  Manifest manifest("pretrain", cfg, "");
  ParamStore params = fresh_model(cfg);
  const auto log = pretrain_inference(cfg.pretrain, cfg.scenario, cfg.model, params, [&](int step, const ParamStore& p) {
    const auto path = out / "checkpoints" / ("omega_step" + std::to_string(step) + ".json");
    subset(p, {"omega"}).save(path.string());
    manifest.checkpoint(path);
  });
  const auto ckpt = out / "omega.json";
  subset(params, {"omega"}).save(ckpt.string());
  manifest.checkpoint(ckpt);
  const auto csv = out / "pretrain_log.csv";
  log.write_csv(csv.string());
  manifest.output(csv);
  const auto quality = inference_quality(params, cfg.model, cfg.scenario, 20, derive_seed(cfg.seed, Stream::Evaluation, 1));
  manifest.detail("heldout_accuracy_neg", quality.accuracy_neg);
  manifest.detail("heldout_accuracy_pos", quality.accuracy_pos);
  manifest.detail("heldout_loss", quality.loss);
  manifest.write(out);
  std::cout << "pretrain: " << cfg.pretrain.steps << " steps, held-out accuracy " << quality.accuracy_neg << " / "
            << quality.accuracy_pos << ", checkpoint " << ckpt.string() << "\n";
  return kExitOk;
}

int cmd_train(const GlobalOptions& g, const std::string& omega_path) {
  const auto cfg = load_run_config(g);
  ParamStore params = fresh_model(cfg);
  merge_checkpoints(params, {omega_path});
  const auto out = prepare_out(g);
  fs::create_directories(out / "checkpoints");
  Manifest manifest("train", cfg, read_text_file(omega_path));
  const auto critic_names = critic_param_names(cfg.model);
  const auto log = train_actor_critic(cfg.train, cfg.scenario, cfg.model, cfg.mac, params, [&](int step, const ParamStore& p) {
    const auto a = out / "checkpoints" / ("actor_step" + std::to_string(step) + ".json");
    const auto c = out / "checkpoints" / ("critic_step" + std::to_string(step) + ".json");
    subset(p, actor_names()).save(a.string());
    subset(p, critic_names).save(c.string());
    manifest.checkpoint(a);
    manifest.checkpoint(c);
  });
  const auto actor = out / "actor.json";
  const auto critic = out / "critic.json";
  subset(params, actor_names()).save(actor.string());
  subset(params, critic_names).save(critic.string());
  manifest.checkpoint(actor);
  manifest.checkpoint(critic);
  const auto csv = out / "train_log.csv";
  log.write_csv(csv.string());
  manifest.output(csv);
  manifest.write(out);
  std::cout << "train: " << cfg.train.steps << " steps, checkpoints " << actor.string() << ", " << critic.string()
            << "\n";
  return kExitOk;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string cdf_csv(const EvalSummary& s) {
  CsvTable t({"value", "cumulative_prob", "metric"}, {"value", "cumulative_prob"});
  for (const auto& p : s.worst_case_cdf()) t.add_row({format_double(p.value), format_double(p.cumulative_prob), "worst_case"});
  for (const auto& p : s.per_user_cdf()) t.add_row({format_double(p.value), format_double(p.cumulative_prob), "per_user"});
  return t.str();
}

bool needs_params(const std::string& policy) { return policy == "proposed" || policy == "mcon" || policy == "mhid"; }

int cmd_eval(const GlobalOptions& g, const std::vector<std::string>& ckpts, const std::string& policies_arg, int n) {
  auto cfg = load_run_config(g);
  if (n > 0) cfg.eval.realizations = n;
  cfg.eval.validate();
  const auto policies = split_list(policies_arg);
  if (policies.empty()) throw ConfigError("no policies given");
  ParamStore params = fresh_model(cfg);
  merge_checkpoints(params, ckpts);
  bool have_params = !ckpts.empty();
  for (const auto& p : policies) {
    if (p != "proposed") parse_baseline(p);
    if (needs_params(p) && !have_params) throw ConfigError("policy '" + p + "' needs --ckpt");
  }
  const auto out = prepare_out(g);
  std::string identity;
  for (const auto& c : ckpts) identity += read_text_file(c);
  Manifest manifest("eval", cfg, identity + policies_arg);

  nlohmann::json summary = nlohmann::json::object();
  std::map<std::string, EvalSummary> results;
  for (const auto& p : policies) {
    const auto policy = make_policy(p, &params, cfg.model, cfg.scenario, cfg.train.rounding_trials);
    const auto s = evaluate(policy, cfg.scenario, cfg.mac, cfg.eval);
    const auto path = out / ("cdf_" + p + ".csv");
    write_text_file(path.string(), cdf_csv(s));
    manifest.output(path);
    summary[p] = {{"mean_worst_case", s.mean_worst_case}, {"mean_per_user", s.mean_per_user},
                  {"mean_total", s.mean_total}, {"realizations", s.worst_case.size()}};
    results.emplace(p, s);
    std::cout << p << ": mean worst-case " << s.mean_worst_case << ", mean total " << s.mean_total << "\n";
  }
  if (results.count("proposed") && results.count("rand")) {
    const auto& a = results.at("proposed").worst_case;
    const auto& b = results.at("rand").worst_case;
    long wins = 0;
    for (std::size_t i = 0; i < a.size(); ++i) wins += a[i] > b[i];
    summary["paired_proposed_vs_rand"] = {{"wins", wins}, {"fraction", static_cast<double>(wins) / static_cast<double>(a.size())}};
  }
  const auto sp = out / "summary.json";
  write_text_file(sp.string(), summary.dump(2) + "\n");
  manifest.output(sp);
  manifest.write(out);
  return kExitOk;
}

int cmd_online(const GlobalOptions& g, const std::vector<std::string>& ckpts, const std::string& mode, int slots) {
  auto cfg = load_run_config(g);
  if (mode != "static" && mode != "mobile") throw ConfigError("--mode must be static or mobile");
  cfg.online.mobile = mode == "mobile";
  if (slots > 0) cfg.online.total_slots = slots;
  cfg.online.validate(cfg.scenario.num_groups);
  if (ckpts.empty()) throw ConfigError("online needs --ckpt");
  ParamStore params = fresh_model(cfg);
  merge_checkpoints(params, ckpts);
  const auto out = prepare_out(g);
  std::string identity;
  for (const auto& c : ckpts) identity += read_text_file(c);
  Manifest manifest("online", cfg, identity);
  manifest.detail("mode", mode);

  const auto real = generate_realization(cfg.scenario, derive_seed(cfg.seed, Stream::Mobility, 1));
  const auto run = run_online_paired(real, params, cfg.model, cfg.scenario, cfg.mac, cfg.online, cfg.seed);
  const auto csv = out / ("online_" + mode + ".csv");
  write_text_file(csv.string(), online_csv(run));
  manifest.output(csv);
  if (cfg.online.snapshot_weights) {
    nlohmann::json snaps = nlohmann::json::array();
    for (const auto& r : run.tuned.records) snaps.push_back(nlohmann::json::parse(r.weights_json));
    const auto sp = out / ("online_" + mode + "_weights.json");
    write_text_file(sp.string(), snaps.dump() + "\n");
    manifest.output(sp);
  }
  manifest.write(out);
  std::cout << "online (" << mode << "): " << run.tuned.records.size() << " updates, trailing worst-case "
            << run.tuned.trailing_worst_case(10) << " vs fixed " << run.control.trailing_worst_case(10) << "\n";
  return kExitOk;
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  for (const auto& item : split_list(s)) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad integer in ") + what + ": '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string(what) + " is empty");
  return out;
}

int cmd_sweep(const GlobalOptions& g, const std::vector<std::string>& ckpts, const std::string& ks,
              const std::string& zs, const std::string& policy, int n) {
  auto cfg = load_run_config(g);
  if (n > 0) cfg.eval.realizations = n;
  const auto K_list = parse_int_list(ks, "--K");
  const auto Z_list = parse_int_list(zs, "--Z");
  for (int z : Z_list) {
    if (z < 1 || (z & (z - 1)) != 0) throw ConfigError("Z must be a power of 2, got " + std::to_string(z));
  }
  if (policy != "proposed") parse_baseline(policy);
  if (needs_params(policy) && ckpts.empty()) throw ConfigError("policy '" + policy + "' needs --ckpt");
  ParamStore params = fresh_model(cfg);
  merge_checkpoints(params, ckpts);
  const auto out = prepare_out(g);
  std::string identity;
  for (const auto& c : ckpts) identity += read_text_file(c);
  Manifest manifest("sweep-kz", cfg, identity + ks + "|" + zs + "|" + policy);

  CsvTable t({"K", "Z", "policy", "mean_worst_case", "mean_total"}, {"K", "Z", "mean_worst_case", "mean_total"});
  for (int K : K_list) {
    for (int Z : Z_list) {
      ScenarioConfig sc = cfg.scenario;
      sc.num_users = K;
      sc.num_groups = Z;
      sc.validate();
      EvalConfig ec = cfg.eval;
      ec.sim_slots = std::max(ec.sim_slots, Z);
      const auto s = evaluate(make_policy(policy, &params, cfg.model, sc, cfg.train.rounding_trials), sc, cfg.mac, ec);
      t.add_row({std::to_string(K), std::to_string(Z), policy, format_double(s.mean_worst_case), format_double(s.mean_total)});
    }
  }
  const auto csv = out / "sweep_kz.csv";
  t.write(csv.string());
  manifest.output(csv);
  manifest.write(out);
  std::cout << "sweep-kz: " << t.num_rows() << " cells written to " << csv.string() << "\n";
  return kExitOk;
}

int cmd_selftest(const GlobalOptions& g) {
  const auto cfg = load_run_config(g);
  bool ok = true;
  auto report = [&](const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
    ok = ok && pass;
  };

  ScenarioConfig sc = cfg.scenario;
  sc.num_users = 5;
  ModelConfig model = cfg.model;
  Rng init = make_rng(cfg.seed, Stream::Init);
  const auto params = init_model(model, init);
  const auto real = generate_realization(sc, derive_seed(cfg.seed, Stream::Realization, 99));
  const auto S = observe_states(real, sc);
  const auto W = actor_weights(params, model, S);
  const Eigen::VectorXd r = Eigen::VectorXd::Constant(sc.num_users, 0.3);
  const auto lg = critic_loss_grad(params, model, S, W, r);
  const double err = finite_diff_check(
      [&](const ParamStore& p) { return critic_loss_grad(p, model, S, W, r).loss; }, params, lg.grads, 1e-6, 8);
  report("critic gradient", err < 1e-3, "max relative error " + format_double(err));

  Eigen::MatrixXd tri = Eigen::MatrixXd::Ones(3, 3);
  tri.diagonal().setZero();
  const auto sdp = solve_maxcut_sdp(tri);
  report("sdp triangle", std::abs(sdp.objective - 4.5) < 1e-4, "objective " + format_double(sdp.objective));

  const GroupAssignment z{std::vector<int>{0, 1, 0, 1, 0}, 2};
  const auto rep = run_sim(real, sc, z, 200, cfg.mac, cfg.seed);
  bool conserved = true;
  for (int k = 0; k < sc.num_users; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    conserved = conserved && rep.arrived[ku] == rep.delivered[ku] + rep.dropped[ku] + rep.queued[ku];
  }
  report("packet conservation", conserved, "200 slots, 5 users");
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Learned RAW user grouping for Wi-Fi HaLow: training, evaluation and online fine-tuning"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config_path, "TOML config file (defaults built in)");
  app.add_option("--seed", g.seed, "master seed, overrides the config");
  app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "evaluation worker threads (env RAWGRL_THREADS)");

  auto* pretrain = app.add_subcommand("pretrain", "pre-train the sensing inference network");
  std::string omega;
  auto* train = app.add_subcommand("train", "actor-critic training");
  train->add_option("--omega", omega, "pre-trained inference checkpoint")->required();
  std::vector<std::string> ckpts;
  std::string policies = "proposed,rand,unif";
  int n = 0;
  auto* eval = app.add_subcommand("eval", "evaluate grouping policies and emit CDFs");
  eval->add_option("--ckpt", ckpts, "checkpoint file(s) to load");
  eval->add_option("--policies", policies, "comma-separated: proposed,rand,unif,mcon,mhid,mint")->capture_default_str();
  eval->add_option("-n,--realizations", n, "number of realizations (config default)");
  std::string mode = "static";
  int slots = 0;
  auto* online = app.add_subcommand("online", "online edge-weight fine-tuning vs fixed weights");
  online->add_option("--ckpt", ckpts, "checkpoint file(s) to load");
  online->add_option("--mode", mode, "static or mobile")->capture_default_str();
  online->add_option("--slots", slots, "total RAW slots (config default)");
  std::string ks = "20", zs = "4", policy = "proposed";
  auto* sweep = app.add_subcommand("sweep-kz", "grid over user and group counts");
  sweep->add_option("--ckpt", ckpts, "checkpoint file(s) to load");
  sweep->add_option("--K", ks, "comma-separated user counts")->capture_default_str();
  sweep->add_option("--Z", zs, "comma-separated group counts")->capture_default_str();
  sweep->add_option("--policy", policy, "grouping policy")->capture_default_str();
  sweep->add_option("-n,--realizations", n, "number of realizations (config default)");
  auto* selftest = app.add_subcommand("selftest", "quick internal consistency checks");
  for (auto* sub : {pretrain, train, eval, online, sweep, selftest}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (pretrain->parsed()) return cmd_pretrain(g);
    if (train->parsed()) return cmd_train(g, omega);
    if (eval->parsed()) return cmd_eval(g, ckpts, policies, n);
    if (online->parsed()) return cmd_online(g, ckpts, mode, slots);
    if (sweep->parsed()) return cmd_sweep(g, ckpts, ks, zs, policy, n);
    if (selftest->parsed()) return cmd_selftest(g);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ConvergenceError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace rawgrl
