#include "rawgrl/actorcritic.hpp"

#include <algorithm>
#include <cmath>

#include "rawgrl/errors.hpp"

namespace rawgrl {

namespace {

constexpr double kLogClamp = 1e-12;

std::vector<std::pair<int, int>> ordered_pairs(int K) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(K) * static_cast<std::size_t>(std::max(0, K - 1)));
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      if (i != j) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

// Rows concat(s_i, s_j) for every ordered pair.
Eigen::MatrixXd omega_inputs(const StateMatrix& S, const std::vector<std::pair<int, int>>& pairs) {
  const Eigen::Index A = S.values.rows();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(pairs.size()), 2 * A);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    x.row(static_cast<Eigen::Index>(p)) << S.values.col(i).transpose(), S.values.col(j).transpose();
  }
  return x;
}

LayerSpec with_output(LayerSpec spec, Activation act) {
  spec.output = act;
  return spec;
}

void check_states(const ModelConfig& cfg, const StateMatrix& S) {
  if (S.num_aps() != cfg.num_aps) {
    throw std::invalid_argument("state matrix has " + std::to_string(S.num_aps()) + " AP rows, model expects " +
                                std::to_string(cfg.num_aps));
  }
}

struct ActorForward {
  PreprocessedStates pre;
  std::vector<std::pair<int, int>> pairs;
  MlpCache mu;
  EdgeGraph W;
};

ActorForward actor_forward(const ParamStore& params, const ModelConfig& cfg, const StateMatrix& S) {
  ActorForward f;
  f.pre = preprocess(params, cfg, S);
  const int K = f.pre.num_users();
  f.pairs = ordered_pairs(K);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(f.pairs.size()), 4);
  for (std::size_t p = 0; p < f.pairs.size(); ++p) {
    const auto [i, j] = f.pairs[p];
    x.row(static_cast<Eigen::Index>(p)) << f.pre.s_hat(j), f.pre.I(i, j), f.pre.s_hat(i), f.pre.O(i, j);
  }
  f.W.W = Eigen::MatrixXd::Zero(K, K);
  if (f.pairs.empty()) return f;
  f.mu = mlp_forward(params.data("mu_dot"), mu_dot_spec(cfg), x);
  for (std::size_t p = 0; p < f.pairs.size(); ++p) {
    f.W.W(f.pairs[p].first, f.pairs[p].second) = f.mu.output(static_cast<Eigen::Index>(p), 0);
  }
  return f;
}

}  // namespace

void ModelConfig::validate() const {
  if (num_aps < 1 || M < 1 || E < 1 || zeta < 1) throw ConfigError("model sizes must be >= 1");
}

LayerSpec omega_spec(const ModelConfig& c) {
  return {{2 * c.num_aps, 20 * c.num_aps, 20 * c.num_aps, 1}, Activation::Sigmoid};
}
LayerSpec mu_dot_spec(const ModelConfig&) { return {{4, 40, 40, 1}, Activation::Sigmoid}; }
LayerSpec efe_spec(const ModelConfig& c) { return {{3, 30, 30, c.E}, Activation::Relu}; }
LayerSpec nfe_spec(const ModelConfig& c) { return {{1, 10, 10, c.M}, Activation::Relu}; }
LayerSpec hnfe_spec(const ModelConfig& c) { return {{c.E * c.M, 10 * c.E * c.M, 10 * c.E * c.M, c.M}, Activation::Relu}; }
LayerSpec rof_spec(const ModelConfig& c) { return {{c.M + 1, 10 * (c.M + 1), 10 * (c.M + 1), 1}, Activation::None}; }

std::string gcn_name(int layer, int channel) {
  return "gcn_l" + std::to_string(layer) + "_e" + std::to_string(channel);
}
std::string hnfe_name(int layer) { return "hnfe_l" + std::to_string(layer); }

ParamStore init_model(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  ParamStore store;
  auto add_mlp = [&](const std::string& name, const LayerSpec& spec) {
    Eigen::VectorXd p;
    init_mlp(p, spec, rng);
    store.add(name, {spec.num_params()}, std::move(p));
  };
  add_mlp("omega", omega_spec(cfg));
  add_mlp("mu_dot", mu_dot_spec(cfg));
  add_mlp("efe", efe_spec(cfg));
  add_mlp("nfe", nfe_spec(cfg));
  const double limit = std::sqrt(6.0 / cfg.M);  // Theta feeds a ReLU
  std::uniform_real_distribution<double> u(-limit, limit);
  for (int l = 1; l <= cfg.zeta; ++l) {
    for (int e = 1; e <= cfg.E; ++e) {
      Eigen::VectorXd theta(cfg.M * cfg.M);
      for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = u(rng);
      store.add(gcn_name(l, e), {cfg.M, cfg.M}, std::move(theta));
    }
    add_mlp(hnfe_name(l), hnfe_spec(cfg));
  }
  add_mlp("rof", rof_spec(cfg));
  return store;
}

std::vector<std::string> critic_param_names(const ModelConfig& cfg) {
  std::vector<std::string> names{"efe", "nfe", "rof"};
  for (int l = 1; l <= cfg.zeta; ++l) {
    for (int e = 1; e <= cfg.E; ++e) names.push_back(gcn_name(l, e));
    names.push_back(hnfe_name(l));
  }
  return names;
}

double infer_O(const ParamStore& params, const ModelConfig& cfg, const Eigen::VectorXd& s_i,
               const Eigen::VectorXd& s_j) {
  Eigen::MatrixXd x(1, s_i.size() + s_j.size());
  x << s_i.transpose(), s_j.transpose();
  return mlp_forward(params.data("omega"), omega_spec(cfg), x).output(0, 0);
}

PreprocessedStates preprocess(const ParamStore& params, const ModelConfig& cfg, const StateMatrix& S) {
  check_states(cfg, S);
  const int K = S.num_users();
  PreprocessedStates pre;
  pre.assoc = S.associations();
  pre.s_hat.resize(K);
  pre.I = Eigen::MatrixXd::Zero(K, K);
  pre.O = Eigen::MatrixXd::Zero(K, K);
  for (int k = 0; k < K; ++k) pre.s_hat(k) = S.values(pre.assoc[static_cast<std::size_t>(k)], k);
  const auto pairs = ordered_pairs(K);
  if (pairs.empty()) return pre;
  const auto omega = mlp_forward(params.data("omega"), omega_spec(cfg), omega_inputs(S, pairs));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    pre.I(i, j) = S.values(pre.assoc[static_cast<std::size_t>(j)], i);
    pre.O(i, j) = omega.output(static_cast<Eigen::Index>(p), 0);
  }
  return pre;
}

EdgeGraph actor_weights(const ParamStore& params, const ModelConfig& cfg, const StateMatrix& S) {
  return actor_forward(params, cfg, S).W;
}

CriticForward critic_forward(const ParamStore& params, const ModelConfig& cfg, const StateMatrix& S,
                             const EdgeGraph& W) {
  return critic_forward(params, cfg, preprocess(params, cfg, S), W);
}

CriticForward critic_forward(const ParamStore& params, const ModelConfig& cfg, PreprocessedStates pre,
                             const EdgeGraph& W) {
  const int K = pre.num_users();
  if (W.W.rows() != K || W.W.cols() != K) throw std::invalid_argument("critic_forward: W must be K x K");
  CriticForward f;
  f.pre = std::move(pre);
  f.pairs = ordered_pairs(K);

  f.G.assign(static_cast<std::size_t>(cfg.E), Eigen::MatrixXd::Zero(K, K));
  if (!f.pairs.empty()) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(f.pairs.size()), 3);
    for (std::size_t p = 0; p < f.pairs.size(); ++p) {
      const auto [i, j] = f.pairs[p];
      x.row(static_cast<Eigen::Index>(p)) << f.pre.I(i, j), f.pre.O(i, j), W.W(i, j);
    }
    f.efe = mlp_forward(params.data("efe"), efe_spec(cfg), x);
    for (std::size_t p = 0; p < f.pairs.size(); ++p) {
      const auto [i, j] = f.pairs[p];
      for (int e = 0; e < cfg.E; ++e) f.G[static_cast<std::size_t>(e)](i, j) = f.efe.output(static_cast<Eigen::Index>(p), e);
    }
  }

  f.nfe = mlp_forward(params.data("nfe"), nfe_spec(cfg), f.pre.s_hat);
  Eigen::MatrixXd H = f.nfe.output;
  for (int l = 1; l <= cfg.zeta; ++l) {
    std::vector<GcnCache> layer;
    Eigen::MatrixXd concat(K, cfg.E * cfg.M);
    for (int e = 1; e <= cfg.E; ++e) {
      const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> theta(
          params.data(gcn_name(l, e)).data(), cfg.M, cfg.M);
      layer.push_back(gcn_forward(H, f.G[static_cast<std::size_t>(e - 1)], theta));
      concat.middleCols((e - 1) * cfg.M, cfg.M) = layer.back().output;
    }
    f.gcn.push_back(std::move(layer));
    f.hnfe.push_back(mlp_forward(params.data(hnfe_name(l)), hnfe_spec(cfg), concat));
    H = f.hnfe.back().output;
  }
  Eigen::MatrixXd readout(K, cfg.M + 1);
  readout << H, f.pre.s_hat;
  f.rof = mlp_forward(params.data("rof"), rof_spec(cfg), readout);
  f.Q = f.rof.output.col(0);
  return f;
}

CriticBackward critic_backward(const ParamStore& params, const ModelConfig& cfg, const CriticForward& f,
                               const Eigen::VectorXd& dQ) {
  const int K = f.pre.num_users();
  CriticBackward out;
  out.W = Eigen::MatrixXd::Zero(K, K);

  auto rof = mlp_backward(params.data("rof"), rof_spec(cfg), f.rof, dQ);
  out.grads["rof"] = std::move(rof.params);
  Eigen::MatrixXd dH = rof.input.leftCols(cfg.M);

  std::vector<Eigen::MatrixXd> dG(static_cast<std::size_t>(cfg.E), Eigen::MatrixXd::Zero(K, K));
  for (int l = cfg.zeta; l >= 1; --l) {
    const auto lu = static_cast<std::size_t>(l - 1);
    auto hn = mlp_backward(params.data(hnfe_name(l)), hnfe_spec(cfg), f.hnfe[lu], dH);
    out.grads[hnfe_name(l)] = std::move(hn.params);
    Eigen::MatrixXd dH_prev = Eigen::MatrixXd::Zero(K, cfg.M);
    for (int e = 1; e <= cfg.E; ++e) {
      const auto eu = static_cast<std::size_t>(e - 1);
      const auto g = gcn_backward(f.gcn[lu][eu], hn.input.middleCols((e - 1) * cfg.M, cfg.M));
      dH_prev += g.H;
      dG[eu] += g.G;
      // Theta is stored row-major, so the flat gradient is the transpose's column-major data.
      const Eigen::MatrixXd gt = g.theta.transpose();
      out.grads[gcn_name(l, e)] = Eigen::Map<const Eigen::VectorXd>(gt.data(), gt.size());
    }
    dH = std::move(dH_prev);
  }
  out.grads["nfe"] = mlp_backward(params.data("nfe"), nfe_spec(cfg), f.nfe, dH).params;

  if (f.pairs.empty()) {
    out.grads["efe"] = Eigen::VectorXd::Zero(efe_spec(cfg).num_params());
    return out;
  }
  // Diagonals of G are fixed at 0, so only off-diagonal gradients reach the EFE.
  Eigen::MatrixXd dE(static_cast<Eigen::Index>(f.pairs.size()), cfg.E);
  for (std::size_t p = 0; p < f.pairs.size(); ++p) {
    const auto [i, j] = f.pairs[p];
    for (int e = 0; e < cfg.E; ++e) dE(static_cast<Eigen::Index>(p), e) = dG[static_cast<std::size_t>(e)](i, j);
  }
  auto efe = mlp_backward(params.data("efe"), efe_spec(cfg), f.efe, dE);
  out.grads["efe"] = std::move(efe.params);
  for (std::size_t p = 0; p < f.pairs.size(); ++p) {
    out.W(f.pairs[p].first, f.pairs[p].second) = efe.input(static_cast<Eigen::Index>(p), 2);
  }
  return out;
}

LossGrad inference_loss_grad(const ParamStore& params, const ModelConfig& cfg, const StateMatrix& S,
                             const SensingMatrix& truth) {
  check_states(cfg, S);
  const int K = S.num_users();
  LossGrad out;
  const auto pairs = ordered_pairs(K);
  if (pairs.empty()) {
    out.grads["omega"] = Eigen::VectorXd::Zero(omega_spec(cfg).num_params());
    return out;
  }
  // Run the network up to its logit so the gradient O - target stays exact when O saturates.
  const auto& p = params.data("omega");
  const LayerSpec logit_spec = with_output(omega_spec(cfg), Activation::None);
  const auto fwd = mlp_forward(p, logit_spec, omega_inputs(S, pairs));
  Eigen::MatrixXd dlogit(static_cast<Eigen::Index>(pairs.size()), 1);
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    const auto [i, j] = pairs[q];
    const double target = truth.sensed(i, j);
    const double o = sigmoid(fwd.output(static_cast<Eigen::Index>(q), 0));
    const double oc = std::clamp(o, kLogClamp, 1.0 - kLogClamp);
    out.loss += -target * std::log(oc) - (1.0 - target) * std::log(1.0 - oc);
    dlogit(static_cast<Eigen::Index>(q), 0) = o - target;
  }
  out.grads["omega"] = mlp_backward(p, logit_spec, fwd, dlogit).params;
  return out;
}

LossGrad critic_loss_grad(const ParamStore& params, const ModelConfig& cfg, const StateMatrix& S,
                          const EdgeGraph& W, const Eigen::VectorXd& r) {
  const auto fwd = critic_forward(params, cfg, S, W);
  if (r.size() != fwd.Q.size()) throw std::invalid_argument("critic_loss_grad: target size mismatch");
  const Eigen::VectorXd diff = fwd.Q - r;
  LossGrad out;
  out.loss = diff.squaredNorm();
  out.grads = critic_backward(params, cfg, fwd, 2.0 * diff).grads;
  return out;
}

int argmin_lowest(const Eigen::VectorXd& v) {
  int best = 0;
  for (Eigen::Index k = 1; k < v.size(); ++k) {
    if (v(k) < v(best)) best = static_cast<int>(k);
  }
  return best;
}

ActorLoss actor_loss_grad(const ParamStore& params, const ModelConfig& cfg, const StateMatrix& S) {
  auto act = actor_forward(params, cfg, S);
  const auto fwd = critic_forward(params, cfg, act.pre, act.W);
  ActorLoss out;
  out.Q = fwd.Q;
  out.argmin = argmin_lowest(fwd.Q);
  out.loss = -fwd.Q(out.argmin);
  out.W = act.W;
  if (act.pairs.empty()) {
    out.grads["mu_dot"] = Eigen::VectorXd::Zero(mu_dot_spec(cfg).num_params());
    return out;
  }
  Eigen::VectorXd dQ = Eigen::VectorXd::Zero(fwd.Q.size());
  dQ(out.argmin) = -1.0;
  const auto back = critic_backward(params, cfg, fwd, dQ);
  Eigen::MatrixXd dmu(static_cast<Eigen::Index>(act.pairs.size()), 1);
  for (std::size_t p = 0; p < act.pairs.size(); ++p) {
    dmu(static_cast<Eigen::Index>(p), 0) = back.W(act.pairs[p].first, act.pairs[p].second);
  }
  out.grads["mu_dot"] = mlp_backward(params.data("mu_dot"), mu_dot_spec(cfg), act.mu, dmu).params;
  return out;
}

}  // namespace rawgrl
