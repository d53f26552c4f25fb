#include "rawgrl/online.hpp"

#include <algorithm>

#include "rawgrl/errors.hpp"
#include "rawgrl/io.hpp"

namespace rawgrl {

namespace {

void sync_weights_from_logits(OnlineState& s) {
  s.W.W = s.V.unaryExpr([](double v) { return sigmoid(v); });
  s.W.W.diagonal().setZero();
}

void sync_logits_from_weights(OnlineState& s) {
  s.V = s.W.W.unaryExpr([](double w) { return sigmoid_inverse(w); });
  s.V.diagonal().setZero();
}

}  // namespace

void OnlineConfig::validate(int num_groups) const {
  if (window <= num_groups) throw ConfigError("online window must exceed the number of groups");
  if (total_slots < window) throw ConfigError("online total_slots must be >= window");
  if (!(lr >= 0)) throw ConfigError("online lr must be >= 0");
  if (!(regen >= 0 && regen <= 1)) throw ConfigError("online regen must lie in [0, 1]");
  if (!(speed >= 0)) throw ConfigError("online speed must be >= 0");
  if (rounding_trials < 1) throw ConfigError("online rounding_trials must be >= 1");
}

WorstCase measure_worst_case(const Eigen::MatrixXi& window) {
  WorstCase w;
  w.rates = window.cast<double>().rowwise().sum() / static_cast<double>(std::max<Eigen::Index>(1, window.cols()));
  w.k_star = argmin_lowest(w.rates);
  return w;
}

OnlineState init_online_state(const ParamStore& params, const ModelConfig& model, const StateMatrix& S) {
  OnlineState s;
  s.S = S;
  s.W = actor_weights(params, model, S);
  sync_logits_from_weights(s);
  return s;
}

Eigen::MatrixXd online_logit_gradient(const OnlineState& state, const ParamStore& params, const ModelConfig& model,
                                      int k_star) {
  const auto fwd = critic_forward(params, model, state.S, state.W);
  Eigen::VectorXd dQ = Eigen::VectorXd::Zero(fwd.Q.size());
  dQ(k_star) = 1.0;
  const Eigen::MatrixXd dQdW = critic_backward(params, model, fwd, dQ).W;
  const Eigen::MatrixXd sig = state.V.unaryExpr([](double v) { return sigmoid(v); });
  // Loss is -Q_{k*}; its gradient in V goes through the sigmoid's derivative.
  Eigen::MatrixXd grad_V = -dQdW.cwiseProduct(sig.cwiseProduct((1.0 - sig.array()).matrix()));
  grad_V.diagonal().setZero();
  return grad_V;
}

void update_weights_online(OnlineState& state, const ParamStore& params, const ModelConfig& model, int k_star,
                           double lr) {
  state.V -= lr * online_logit_gradient(state, params, model, k_star);
  state.V.diagonal().setZero();
  sync_weights_from_logits(state);
}

void regenerate_weights(OnlineState& state, const ParamStore& params, const ModelConfig& model,
                        const StateMatrix& S_latest, double lambda) {
  state.S = S_latest;
  if (lambda == 0.0) return;
  const auto fresh = actor_weights(params, model, S_latest);
  state.W.W = (1.0 - lambda) * state.W.W + lambda * fresh.W;
  state.W.W.diagonal().setZero();
  sync_logits_from_weights(state);
}

double OnlineRun::trailing_worst_case(int n) const {
  if (records.empty()) return 0.0;
  const auto count = std::min<std::size_t>(records.size(), static_cast<std::size_t>(std::max(1, n)));
  double sum = 0.0;
  for (auto it = records.end() - static_cast<long>(count); it != records.end(); ++it) sum += it->min_rate;
  return sum / static_cast<double>(count);
}

OnlineRun run_online(const NetworkRealization& initial, const ParamStore& params, const ModelConfig& model,
                     const ScenarioConfig& scenario, const MacConfig& mac, const OnlineConfig& cfg,
                     std::uint64_t seed) {
  scenario.validate();
  cfg.validate(scenario.num_groups);
  CutOptions cut;
  cut.rounding_trials = cfg.rounding_trials;

  NetworkRealization real = initial;
  Simulator sim(real, scenario, mac, derive_seed(seed, Stream::Simulation));
  Rng mobility = make_rng(seed, Stream::Mobility);

  OnlineState state = init_online_state(params, model, observe_states(real, scenario));
  Rng rounding = make_rng(seed, Stream::Rounding, 0);
  state.z = do_graph_cut(scenario.num_groups, state.W, rounding, cut);
  sim.set_groups(state.z);

  OnlineRun run;
  run.window = cfg.window;
  const int K = real.num_users();
  const int updates = cfg.total_slots / cfg.window;
  for (int u = 1; u <= updates; ++u) {
    Eigen::MatrixXi window(K, cfg.window);
    if (cfg.mobile && cfg.speed > 0) {
      for (int t = 0; t < cfg.window; ++t) {
        window.col(t) = sim.run(1).col(0);
        real = step_mobility(real, scenario, scenario.raw_slot_duration, cfg.speed, mobility);
        sim.set_realization(real);
      }
    } else {
      window = sim.run(cfg.window);
    }

    const auto worst = measure_worst_case(window);
    if (cfg.update_weights) {
      update_weights_online(state, params, model, worst.k_star, cfg.lr);
      regenerate_weights(state, params, model, observe_states(real, scenario), cfg.regen);
    }
    Rng recut = make_rng(seed, Stream::Rounding, static_cast<std::uint64_t>(u));
    state.z = do_graph_cut(scenario.num_groups, state.W, recut, cut);
    sim.set_groups(state.z);
    ++run.recuts;

    OnlineRecord rec;
    rec.update = u;
    rec.k_star = worst.k_star;
    rec.min_rate = worst.rates.minCoeff();
    rec.mean_rate = worst.rates.mean();
    rec.cut = cut_value(state.W.W, state.z.groups);
    if (cfg.snapshot_weights) rec.weights_json = edge_graph_to_json(state.W);
    run.records.push_back(std::move(rec));
  }
  return run;
}

PairedOnline run_online_paired(const NetworkRealization& initial, const ParamStore& params, const ModelConfig& model,
                               const ScenarioConfig& scenario, const MacConfig& mac, const OnlineConfig& cfg,
                               std::uint64_t seed) {
  OnlineConfig control = cfg;
  control.update_weights = false;
  return {run_online(initial, params, model, scenario, mac, cfg, seed),
          run_online(initial, params, model, scenario, mac, control, seed)};
}

std::string online_csv(const PairedOnline& run) {
  CsvTable t({"update_index", "k_star", "min_rate", "mean_rate", "cut_value", "control_min_rate",
              "control_mean_rate", "ratio_to_fixed"},
             {"update_index", "k_star", "min_rate", "mean_rate", "cut_value", "control_min_rate",
              "control_mean_rate", "ratio_to_fixed"});
  // Ratio of cumulative worst-case means; one packet per window is added to
  // both sides so that a silent control arm keeps the ratio finite.
  double tuned_sum = 0.0, control_sum = 0.0;
  for (std::size_t i = 0; i < run.tuned.records.size(); ++i) {
    const auto& a = run.tuned.records[i];
    const auto& b = run.control.records.at(i);
    tuned_sum += a.min_rate;
    control_sum += b.min_rate;
    const double smooth = 1.0 / static_cast<double>(std::max(1, run.tuned.window));
    const double ratio = (tuned_sum + smooth) / (control_sum + smooth);
    t.add_row({std::to_string(a.update), std::to_string(a.k_star), format_double(a.min_rate),
               format_double(a.mean_rate), format_double(a.cut), format_double(b.min_rate),
               format_double(b.mean_rate), format_double(ratio)});
  }
  return t.str();
}

}  // namespace rawgrl
