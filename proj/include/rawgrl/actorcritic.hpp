#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rawgrl/maxcut.hpp"
#include "rawgrl/netmodel.hpp"
#include "rawgrl/nnkernel.hpp"

namespace rawgrl {

// Architecture sizes. M is the node feature width, E the number of edge
// feature channels, zeta the number of graph convolution stages.
struct ModelConfig {
  int num_aps = 4;
  int M = 5;
  int E = 5;
  int zeta = 3;

  void validate() const;  // throws ConfigError
};

LayerSpec omega_spec(const ModelConfig& cfg);   // 2A -> 20A -> 20A -> 1, sigmoid
LayerSpec mu_dot_spec(const ModelConfig& cfg);  // 4 -> 40 -> 40 -> 1, sigmoid
LayerSpec efe_spec(const ModelConfig& cfg);     // 3 -> 30 -> 30 -> E, relu
LayerSpec nfe_spec(const ModelConfig& cfg);     // 1 -> 10 -> 10 -> M, relu
LayerSpec hnfe_spec(const ModelConfig& cfg);    // EM -> 10EM -> 10EM -> M, relu
LayerSpec rof_spec(const ModelConfig& cfg);     // M+1 -> 10(M+1) -> 10(M+1) -> 1, linear

std::string gcn_name(int layer, int channel);  // layer in 1..zeta, channel in 1..E
std::string hnfe_name(int layer);

// Randomly initialized store holding every network of the model.
ParamStore init_model(const ModelConfig& cfg, Rng& rng);
// Names of the entries trained by the critic loss.
std::vector<std::string> critic_param_names(const ModelConfig& cfg);

struct PreprocessedStates {
  std::vector<int> assoc;  // argmin over each column of S
  Eigen::VectorXd s_hat;   // K, normalized loss to own AP
  Eigen::MatrixXd I;       // K x K, I(i, j) = S(assoc[j], i), zero diagonal
  Eigen::MatrixXd O;       // K x K, inferred probability that j senses i, zero diagonal

  int num_users() const { return static_cast<int>(s_hat.size()); }
};

double infer_O(const ParamStore& params, const ModelConfig& cfg, const Eigen::VectorXd& s_i,
               const Eigen::VectorXd& s_j);
PreprocessedStates preprocess(const ParamStore& params, const ModelConfig& cfg, const StateMatrix& S);

// W(i, j) = mu_dot(s_hat_j, I_ij, s_hat_i, O_ij) for i != j; zero diagonal.
EdgeGraph actor_weights(const ParamStore& params, const ModelConfig& cfg, const StateMatrix& S);

struct CriticForward {
  Eigen::VectorXd Q;  // K estimated per-user throughputs (packets per RAW slot)
  PreprocessedStates pre;
  std::vector<std::pair<int, int>> pairs;  // ordered (i, j), i != j
  MlpCache efe;
  std::vector<Eigen::MatrixXd> G;  // E matrices, K x K
  MlpCache nfe;
  std::vector<std::vector<GcnCache>> gcn;  // [layer][channel]
  std::vector<MlpCache> hnfe;
  MlpCache rof;
};

struct CriticBackward {
  Gradients grads;    // critic entries only
  Eigen::MatrixXd W;  // gradient with respect to the edge weights, zero diagonal
};

CriticForward critic_forward(const ParamStore& params, const ModelConfig& cfg, const StateMatrix& S,
                             const EdgeGraph& W);
CriticForward critic_forward(const ParamStore& params, const ModelConfig& cfg, PreprocessedStates pre,
                             const EdgeGraph& W);
CriticBackward critic_backward(const ParamStore& params, const ModelConfig& cfg, const CriticForward& fwd,
                               const Eigen::VectorXd& dQ);

struct LossGrad {
  double loss = 0.0;
  Gradients grads;
};

// Summed cross-entropy of the sensing inference over ordered pairs i != j.
LossGrad inference_loss_grad(const ParamStore& params, const ModelConfig& cfg, const StateMatrix& S,
                             const SensingMatrix& truth);

// sum_k (r_k - Q_k)^2; gradients for the critic entries only.
LossGrad critic_loss_grad(const ParamStore& params, const ModelConfig& cfg, const StateMatrix& S,
                          const EdgeGraph& W, const Eigen::VectorXd& r);

struct ActorLoss {
  double loss = 0.0;  // -min_k Q_k
  Gradients grads;    // mu_dot only
  EdgeGraph W;
  Eigen::VectorXd Q;
  int argmin = 0;     // lowest index among the minimizers
};

ActorLoss actor_loss_grad(const ParamStore& params, const ModelConfig& cfg, const StateMatrix& S);

// Index of the smallest entry, lowest index on ties.
int argmin_lowest(const Eigen::VectorXd& v);

}  // namespace rawgrl
