#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rawgrl/actorcritic.hpp"
#include "rawgrl/baselines.hpp"
#include "rawgrl/desim.hpp"
#include "rawgrl/maxcut.hpp"

namespace rawgrl {

struct TrainConfig {
  int steps = 1000;
  double lr = 1e-4;
  double explore = 0.1;
  int sim_slots = 2000;
  int batch_size = 1;
  std::uint64_t seed = 1;
  OptimizerKind optimizer = OptimizerKind::Adam;
  bool actor_update_on_explore = true;
  int rounding_trials = 20;
  int checkpoint_every = 100;

  void validate() const;  // throws ConfigError
  OptimizerConfig optimizer_config() const { return {optimizer, lr}; }
};

struct EvalConfig {
  int realizations = 1000;
  int sim_slots = 2000;
  std::uint64_t seed = 7;
  int threads = 1;

  void validate() const;
};

struct TrainRecord {
  int step = 0;
  std::string phase;  // "pretrain" or "actor_critic"
  double inference_loss = 0.0;  // mean cross-entropy per ordered pair
  double accuracy_neg = 0.0;    // accuracy on pairs with no sensing
  double accuracy_pos = 0.0;    // accuracy on sensing pairs
  double worst_rate = 0.0;
  double mean_rate = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  bool explored = false;
};

struct TrainLog {
  std::vector<TrainRecord> records;

  std::string to_csv() const;
  void write_csv(const std::string& path) const;  // throws IoError
};

// Called every `checkpoint_every` steps and after the last step.
using CheckpointHook = std::function<void(int step, const ParamStore&)>;

// Seeds for the realizations each phase draws; phases never share a realization.
std::uint64_t pretrain_realization_seed(std::uint64_t seed, int step);
std::uint64_t train_realization_seed(std::uint64_t seed, int step);

// Trains "omega" by cross-entropy against the ground-truth sensing matrix.
TrainLog pretrain_inference(const TrainConfig& cfg, const ScenarioConfig& scenario, const ModelConfig& model,
                            ParamStore& params, const CheckpointHook& hook = {});

struct InferenceQuality {
  double loss = 0.0;  // mean cross-entropy per ordered pair
  double accuracy_neg = 0.0;
  double accuracy_pos = 0.0;
  long negatives = 0;
  long positives = 0;
};

InferenceQuality inference_quality(const ParamStore& params, const ModelConfig& model, const ScenarioConfig& scenario,
                                   int realizations, std::uint64_t seed);

// Actor-critic main loop. "omega" is left untouched.
TrainLog train_actor_critic(const TrainConfig& cfg, const ScenarioConfig& scenario, const ModelConfig& model,
                            const MacConfig& mac, ParamStore& params, const CheckpointHook& hook = {});

// One actor-critic iteration on a given realization; exposed for timing.
TrainRecord actor_critic_step(const TrainConfig& cfg, const ScenarioConfig& scenario, const ModelConfig& model,
                              const MacConfig& mac, ParamStore& params, const NetworkRealization& real, int step);

using GroupingPolicy = std::function<GroupAssignment(const NetworkRealization&, Rng&)>;

// "proposed" (needs params), or a baseline name.
GroupingPolicy make_policy(const std::string& name, const ParamStore* params, const ModelConfig& model,
                           const ScenarioConfig& scenario, int rounding_trials = 20);

struct CdfPoint {
  double value = 0.0;
  double cumulative_prob = 0.0;
};

std::vector<CdfPoint> empirical_cdf(std::vector<double> values);

struct EvalSummary {
  std::vector<double> worst_case;  // per realization
  std::vector<double> per_user;    // all r_k across realizations
  std::vector<double> total;       // per realization sum_k r_k
  double mean_worst_case = 0.0;
  double mean_per_user = 0.0;
  double mean_total = 0.0;

  std::vector<CdfPoint> worst_case_cdf() const { return empirical_cdf(worst_case); }
  std::vector<CdfPoint> per_user_cdf() const { return empirical_cdf(per_user); }
};

// Realization i, its rounding randomness and its simulation seed derive from
// (cfg.seed, i) only, so two policies evaluated with one seed are paired.
EvalSummary evaluate(const GroupingPolicy& policy, const ScenarioConfig& scenario, const MacConfig& mac,
                     const EvalConfig& cfg);

}  // namespace rawgrl
