#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rawgrl/rng.hpp"

namespace rawgrl {

enum class Activation { None, Relu, Sigmoid };

double sigmoid(double x);
// Inputs are clamped to [1e-6, 1 - 1e-6] first.
double sigmoid_inverse(double w);
double relu(double x);

inline constexpr double kSigmoidClamp = 1e-6;
inline constexpr double kReluBiasInit = 0.1;

// Dense stack dims[0] -> dims[1] -> ... -> dims.back(); hidden layers use ReLU.
struct LayerSpec {
  std::vector<int> dims;
  Activation output = Activation::None;

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  int num_layers() const { return static_cast<int>(dims.size()) - 1; }
  // Per layer: W (out x in, row-major) followed by b (out).
  int num_params() const;
  void validate() const;  // throws ConfigError
};

struct MlpCache {
  std::vector<Eigen::MatrixXd> inputs;  // per layer, N x in
  std::vector<Eigen::MatrixXd> pre;     // per layer, N x out (before activation)
  Eigen::MatrixXd output;
  const double* params = nullptr;       // identity of the parameter buffer used
  std::vector<int> dims;
};

struct MlpGrads {
  Eigen::VectorXd params;
  Eigen::MatrixXd input;
};

// Rows of x are independent samples.
MlpCache mlp_forward(const Eigen::VectorXd& params, const LayerSpec& spec, const Eigen::MatrixXd& x);
// Gradients of sum(output .* upstream). Throws std::logic_error if the cache
// was produced for a different parameter buffer or spec.
MlpGrads mlp_backward(const Eigen::VectorXd& params, const LayerSpec& spec, const MlpCache& cache,
                      const Eigen::MatrixXd& upstream);

// Uniform He (ReLU layers) or Xavier (other outputs) weights; biases are kReluBiasInit
// for ReLU layers and zero otherwise.
void init_mlp(Eigen::VectorXd& params, const LayerSpec& spec, Rng& rng);

// Normalized graph convolution ReLU(D^-1/2 (G + I) D^-1/2 H Theta), D_ii = 1 + sum_j G_ij.
struct GcnCache {
  Eigen::MatrixXd H, G, theta;
  Eigen::MatrixXd A_hat;   // K x K normalized adjacency
  Eigen::VectorXd degree;  // K
  Eigen::MatrixXd P;       // A_hat * H
  Eigen::MatrixXd Z;       // P * theta
  Eigen::MatrixXd output;
};

struct GcnGrads {
  Eigen::MatrixXd H, G, theta;
};

GcnCache gcn_forward(const Eigen::MatrixXd& H, const Eigen::MatrixXd& G, const Eigen::MatrixXd& theta);
GcnGrads gcn_backward(const GcnCache& cache, const Eigen::MatrixXd& upstream);

struct ParamEntry {
  std::vector<int> shape;
  Eigen::VectorXd data;  // row-major
  Eigen::VectorXd m, v;  // optimizer moments
  long step = 0;
};

using Gradients = std::map<std::string, Eigen::VectorXd>;

class ParamStore {
 public:
  // Throws std::logic_error if `name` exists or the shape and data disagree.
  ParamEntry& add(const std::string& name, std::vector<int> shape, Eigen::VectorXd data);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  ParamEntry& at(const std::string& name);
  const ParamEntry& at(const std::string& name) const;
  const Eigen::VectorXd& data(const std::string& name) const { return at(name).data; }
  std::vector<std::string> names() const;
  long total_size() const;
  bool all_finite() const;

  Gradients zero_grads() const;

  std::string to_json() const;
  static ParamStore from_json(const std::string& text);  // throws ConfigError
  void save(const std::string& path) const;              // throws IoError
  static ParamStore load(const std::string& path);       // throws IoError / ConfigError

  bool operator==(const ParamStore& other) const;

 private:
  std::map<std::string, ParamEntry> entries_;
};

enum class OptimizerKind { Adam, Sgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction, or plain SGD. Entries missing from `grads` are untouched.
void apply_gradients(ParamStore& params, const Gradients& grads, const OptimizerConfig& opt);
void adam_step(ParamStore& params, const Gradients& grads, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

// Max over checked coordinates of |analytic - numeric| / max(|analytic|, |numeric|, floor),
// with central differences of step h. At most `max_coords` coordinates are checked,
// sampled deterministically from `sample_seed` when the vector is larger.
double finite_diff_check(const std::function<double(const Eigen::VectorXd&)>& loss, const Eigen::VectorXd& point,
                         const Eigen::VectorXd& analytic, double h = 1e-5, int max_coords = 200,
                         std::uint64_t sample_seed = 0, double floor = 1e-7);

// Same, across every entry of a parameter store.
double finite_diff_check(const std::function<double(const ParamStore&)>& loss, const ParamStore& params,
                         const Gradients& analytic, double h = 1e-5, int max_coords_per_entry = 64,
                         std::uint64_t sample_seed = 0, double floor = 1e-7);

}  // namespace rawgrl
