#include "rawgrl/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <mutex>
#include <thread>

#include "rawgrl/errors.hpp"
#include "rawgrl/io.hpp"

namespace rawgrl {

namespace {

constexpr std::uint64_t kTrainPhaseOffset = 1ULL << 32;

void accumulate(Gradients& into, const Gradients& g, double scale) {
  for (const auto& [name, v] : g) {
    auto it = into.find(name);
    if (it == into.end()) {
      into.emplace(name, scale * v);
    } else {
      it->second += scale * v;
    }
  }
}

struct PairStats {
  double loss = 0.0;
  long tn = 0, negatives = 0, tp = 0, positives = 0;
};

PairStats pair_stats(const ParamStore& params, const ModelConfig& model, const StateMatrix& S,
                     const SensingMatrix& truth) {
  const auto pre = preprocess(params, model, S);
  PairStats st;
  const int K = S.num_users();
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      if (i == j) continue;
      const bool sensed = truth.sensed(i, j) > 0.5;
      const bool guess = pre.O(i, j) >= 0.5;
      const double o = std::clamp(pre.O(i, j), 1e-12, 1.0 - 1e-12);
      st.loss += sensed ? -std::log(o) : -std::log(1.0 - o);
      if (sensed) {
        ++st.positives;
        st.tp += guess;
      } else {
        ++st.negatives;
        st.tn += !guess;
      }
    }
  }
  return st;
}

double ratio(long num, long den) { return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0; }

}  // namespace

void TrainConfig::validate() const {
  if (steps < 0) throw ConfigError("train.steps must be >= 0");
  if (!(lr > 0)) throw ConfigError("train.lr must be > 0");
  if (!(explore >= 0 && explore <= 1)) throw ConfigError("train.explore must lie in [0, 1]");
  if (sim_slots < 1) throw ConfigError("train.sim_slots must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (rounding_trials < 1) throw ConfigError("train.rounding_trials must be >= 1");
  if (checkpoint_every < 1) throw ConfigError("train.checkpoint_every must be >= 1");
}

void EvalConfig::validate() const {
  if (realizations < 1) throw ConfigError("eval.realizations must be >= 1");
  if (sim_slots < 1) throw ConfigError("eval.sim_slots must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

std::string TrainLog::to_csv() const {
  CsvTable t({"step", "phase", "inference_loss", "accuracy_neg", "accuracy_pos", "worst_rate", "mean_rate",
              "critic_loss", "actor_loss", "explored"},
             {"step", "inference_loss", "accuracy_neg", "accuracy_pos", "worst_rate", "mean_rate", "critic_loss",
              "actor_loss", "explored"});
  for (const auto& r : records) {
    t.add_row({std::to_string(r.step), r.phase, format_double(r.inference_loss), format_double(r.accuracy_neg),
               format_double(r.accuracy_pos), format_double(r.worst_rate), format_double(r.mean_rate),
               format_double(r.critic_loss), format_double(r.actor_loss), r.explored ? "1" : "0"});
  }
  return t.str();
}

void TrainLog::write_csv(const std::string& path) const { write_text_file(path, to_csv()); }

std::uint64_t pretrain_realization_seed(std::uint64_t seed, int step) {
  return derive_seed(seed, Stream::Realization, static_cast<std::uint64_t>(step));
}

std::uint64_t train_realization_seed(std::uint64_t seed, int step) {
  return derive_seed(seed, Stream::Realization, kTrainPhaseOffset + static_cast<std::uint64_t>(step));
}

TrainLog pretrain_inference(const TrainConfig& cfg, const ScenarioConfig& scenario, const ModelConfig& model,
                            ParamStore& params, const CheckpointHook& hook) {
  cfg.validate();
  scenario.validate();
  TrainLog log;
  const auto opt = cfg.optimizer_config();
  for (int step = 0; step < cfg.steps; ++step) {
    Gradients grads;
    PairStats total;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const auto idx = step * cfg.batch_size + b;
      const auto real = generate_realization(scenario, pretrain_realization_seed(cfg.seed, idx));
      const auto S = observe_states(real, scenario);
      const auto truth = sensing_matrix(real, scenario);
      const auto st = pair_stats(params, model, S, truth);
      total.loss += st.loss;
      total.tn += st.tn;
      total.tp += st.tp;
      total.negatives += st.negatives;
      total.positives += st.positives;
      accumulate(grads, inference_loss_grad(params, model, S, truth).grads, 1.0 / cfg.batch_size);
    }
    apply_gradients(params, grads, opt);

    TrainRecord rec;
    rec.step = step;
    rec.phase = "pretrain";
    const long pairs = total.negatives + total.positives;
    rec.inference_loss = pairs ? total.loss / static_cast<double>(pairs) : 0.0;
    rec.accuracy_neg = ratio(total.tn, total.negatives);
    rec.accuracy_pos = ratio(total.tp, total.positives);
    log.records.push_back(rec);
    if (hook && ((step + 1) % cfg.checkpoint_every == 0 || step + 1 == cfg.steps)) hook(step + 1, params);
  }
  return log;
}

InferenceQuality inference_quality(const ParamStore& params, const ModelConfig& model, const ScenarioConfig& scenario,
                                   int realizations, std::uint64_t seed) {
  PairStats total;
  for (int i = 0; i < realizations; ++i) {
    const auto real = generate_realization(scenario, derive_seed(seed, Stream::Evaluation, static_cast<std::uint64_t>(i)));
    const auto st = pair_stats(params, model, observe_states(real, scenario), sensing_matrix(real, scenario));
    total.loss += st.loss;
    total.tn += st.tn;
    total.tp += st.tp;
    total.negatives += st.negatives;
    total.positives += st.positives;
  }
  InferenceQuality q;
  const long pairs = total.negatives + total.positives;
  q.loss = pairs ? total.loss / static_cast<double>(pairs) : 0.0;
  q.accuracy_neg = ratio(total.tn, total.negatives);
  q.accuracy_pos = ratio(total.tp, total.positives);
  q.negatives = total.negatives;
  q.positives = total.positives;
  return q;
}

TrainRecord actor_critic_step(const TrainConfig& cfg, const ScenarioConfig& scenario, const ModelConfig& model,
                              const MacConfig& mac, ParamStore& params, const NetworkRealization& real, int step) {
  const auto s = static_cast<std::uint64_t>(step);
  const auto S = observe_states(real, scenario);
  const int K = S.num_users();

  EdgeGraph executed = actor_weights(params, model, S);
  Rng explore_rng = make_rng(cfg.seed, Stream::Exploration, s);
  const bool explored = std::uniform_real_distribution<double>(0.0, 1.0)(explore_rng) < cfg.explore;
  if (explored) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < K; ++i) {
      for (int j = 0; j < K; ++j) executed.W(i, j) = i == j ? 0.0 : u(explore_rng);
    }
  }

  Rng rounding = make_rng(cfg.seed, Stream::Rounding, s);
  CutOptions cut;
  cut.rounding_trials = cfg.rounding_trials;
  const auto z = do_graph_cut(scenario.num_groups, executed, rounding, cut);
  const auto report = run_sim(real, scenario, z, cfg.sim_slots, mac, derive_seed(cfg.seed, Stream::Simulation, s));

  const auto opt = cfg.optimizer_config();
  const auto critic = critic_loss_grad(params, model, S, executed, report.rate);
  apply_gradients(params, critic.grads, opt);

  TrainRecord rec;
  rec.step = step;
  rec.phase = "actor_critic";
  rec.worst_rate = report.worst_case();
  rec.mean_rate = report.rate.mean();
  rec.critic_loss = critic.loss;
  rec.explored = explored;
  if (!explored || cfg.actor_update_on_explore) {
    const auto actor = actor_loss_grad(params, model, S);
    apply_gradients(params, actor.grads, opt);
    rec.actor_loss = actor.loss;
  } else {
    rec.actor_loss = -critic_forward(params, model, S, actor_weights(params, model, S)).Q.minCoeff();
  }
  return rec;
}

TrainLog train_actor_critic(const TrainConfig& cfg, const ScenarioConfig& scenario, const ModelConfig& model,
                            const MacConfig& mac, ParamStore& params, const CheckpointHook& hook) {
  cfg.validate();
  scenario.validate();
  mac.validate();
  TrainLog log;
  for (int step = 0; step < cfg.steps; ++step) {
    const auto real = generate_realization(scenario, train_realization_seed(cfg.seed, step));
    log.records.push_back(actor_critic_step(cfg, scenario, model, mac, params, real, step));
    if (hook && ((step + 1) % cfg.checkpoint_every == 0 || step + 1 == cfg.steps)) hook(step + 1, params);
  }
  return log;
}

GroupingPolicy make_policy(const std::string& name, const ParamStore* params, const ModelConfig& model,
                           const ScenarioConfig& scenario, int rounding_trials) {
  const int Z = scenario.num_groups;
  CutOptions cut;
  cut.rounding_trials = rounding_trials;
  auto need_params = [&] {
    if (!params) throw ConfigError("policy '" + name + "' needs trained parameters");
  };
  if (name == "proposed") {
    need_params();
    return [params, model, scenario, cut, Z](const NetworkRealization& real, Rng& rng) {
      const auto W = actor_weights(*params, model, observe_states(real, scenario));
      return do_graph_cut(Z, W, rng, cut);
    };
  }
  const auto kind = parse_baseline(name);
  switch (kind) {
    case BaselineKind::Rand:
      return [Z](const NetworkRealization& real, Rng& rng) { return rand_group(real.num_users(), Z, rng); };
    case BaselineKind::Unif:
      return [scenario, Z](const NetworkRealization& real, Rng&) {
        return unif_group(observe_states(real, scenario), Z);
      };
    case BaselineKind::Mcon:
    case BaselineKind::Mhid:
      need_params();
      [[fallthrough]];
    case BaselineKind::Mint:
      return [kind, params, model, scenario, cut, Z](const NetworkRealization& real, Rng& rng) {
        static const ParamStore kEmpty;
        const auto W = fixed_rule_weights(kind, observe_states(real, scenario), params ? *params : kEmpty, model,
                                          scenario);
        return do_graph_cut(Z, W, rng, cut);
      };
  }
  throw ConfigError("unknown policy " + name);
}

std::vector<CdfPoint> empirical_cdf(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<CdfPoint> cdf;
  const auto n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    // Collapse ties into one step at the highest rank.
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    cdf.push_back({values[i], static_cast<double>(i + 1) / n});
  }
  return cdf;
}

EvalSummary evaluate(const GroupingPolicy& policy, const ScenarioConfig& scenario, const MacConfig& mac,
                     const EvalConfig& cfg) {
  cfg.validate();
  scenario.validate();
  const int n = cfg.realizations;
  std::vector<Eigen::VectorXd> rates(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        const auto idx = static_cast<std::uint64_t>(i);
        const auto real = generate_realization(scenario, derive_seed(cfg.seed, Stream::Evaluation, idx));
        Rng rng = make_rng(cfg.seed, Stream::Rounding, idx);
        const auto z = policy(real, rng);
        rates[static_cast<std::size_t>(i)] =
            run_sim(real, scenario, z, cfg.sim_slots, mac, derive_seed(cfg.seed, Stream::Simulation, idx)).rate;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  const int threads = std::min(cfg.threads, n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  EvalSummary s;
  for (const auto& r : rates) {
    s.worst_case.push_back(r.minCoeff());
    s.total.push_back(r.sum());
    for (Eigen::Index k = 0; k < r.size(); ++k) s.per_user.push_back(r(k));
  }
  auto mean = [](const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  s.mean_worst_case = mean(s.worst_case);
  s.mean_per_user = mean(s.per_user);
  s.mean_total = mean(s.total);
  return s;
}

}  // namespace rawgrl
