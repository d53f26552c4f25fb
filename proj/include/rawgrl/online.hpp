#pragma once

#include <string>
#include <vector>

#include "rawgrl/actorcritic.hpp"
#include "rawgrl/desim.hpp"
#include "rawgrl/maxcut.hpp"

namespace rawgrl {

struct OnlineConfig {
  int window = 200;            // RAW slots between weight updates
  double lr = 1e-3;
  double regen = 0.1;          // weight regeneration rate
  int total_slots = 20000;
  bool mobile = false;
  double speed = 2.0;          // m/s, used when mobile
  bool update_weights = true;  // false gives the fixed-weights control arm
  bool snapshot_weights = false;
  int rounding_trials = 20;

  void validate(int num_groups) const;  // throws ConfigError
};

struct OnlineState {
  Eigen::MatrixXd V;  // logits of W, diagonal unused
  EdgeGraph W;
  StateMatrix S;
  GroupAssignment z;
};

struct WorstCase {
  Eigen::VectorXd rates;  // per-user mean successes per slot over the window
  int k_star = 0;         // lowest index among the minimizers
};

WorstCase measure_worst_case(const Eigen::MatrixXi& window);

// Fresh state from the actor's weights; V = logit(W) with clamping.
OnlineState init_online_state(const ParamStore& params, const ModelConfig& model, const StateMatrix& S);

// Gradient of -Q_{k_star}(S, sigmoid(V)) with respect to V; zero diagonal.
Eigen::MatrixXd online_logit_gradient(const OnlineState& state, const ParamStore& params, const ModelConfig& model,
                                      int k_star);

// Gradient ascent on the critic's estimate of user k_star, taken in logit space.
void update_weights_online(OnlineState& state, const ParamStore& params, const ModelConfig& model, int k_star,
                           double lr);

// W <- (1 - lambda) W + lambda * actor(S_latest) off the diagonal; V follows W.
void regenerate_weights(OnlineState& state, const ParamStore& params, const ModelConfig& model,
                        const StateMatrix& S_latest, double lambda);

struct OnlineRecord {
  int update = 0;  // 1-based
  int k_star = 0;
  double min_rate = 0.0;
  double mean_rate = 0.0;
  double cut = 0.0;  // cut value of the re-cut grouping under the new W
  std::string weights_json;  // filled when snapshot_weights
};

struct OnlineRun {
  std::vector<OnlineRecord> records;
  int recuts = 0;
  int window = 0;

  // Mean of min_rate over the last n records (all when fewer).
  double trailing_worst_case(int n) const;
};

OnlineRun run_online(const NetworkRealization& initial, const ParamStore& params, const ModelConfig& model,
                     const ScenarioConfig& scenario, const MacConfig& mac, const OnlineConfig& cfg,
                     std::uint64_t seed);

struct PairedOnline {
  OnlineRun tuned;
  OnlineRun control;
};

// Fine-tuned arm and fixed-initial-weights arm sharing every seed.
PairedOnline run_online_paired(const NetworkRealization& initial, const ParamStore& params, const ModelConfig& model,
                               const ScenarioConfig& scenario, const MacConfig& mac, const OnlineConfig& cfg,
                               std::uint64_t seed);

std::string online_csv(const PairedOnline& run);

}  // namespace rawgrl
