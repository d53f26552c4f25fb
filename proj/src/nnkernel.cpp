#include "rawgrl/nnkernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rawgrl/errors.hpp"

namespace rawgrl {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Activation layer_activation(const LayerSpec& spec, int layer) {
  return layer + 1 < spec.num_layers() ? Activation::Relu : spec.output;
}

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation act) {
  switch (act) {
    case Activation::Relu:
      return z.cwiseMax(0.0);
    case Activation::Sigmoid:
      return z.unaryExpr([](double v) { return sigmoid(v); });
    case Activation::None:
      break;
  }
  return z;
}

// Derivative of the activation expressed through pre-activation z and output y.
Eigen::MatrixXd activation_grad(const Eigen::MatrixXd& z, const Eigen::MatrixXd& y, Activation act) {
  switch (act) {
    case Activation::Relu:
      return (z.array() > 0.0).cast<double>().matrix();
    case Activation::Sigmoid:
      return (y.array() * (1.0 - y.array())).matrix();
    case Activation::None:
      break;
  }
  return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

std::vector<Eigen::Index> sample_coords(Eigen::Index n, int max_coords, std::uint64_t seed) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  if (n > max_coords) {
    Rng rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(max_coords));
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

double relative_error(double a, double n, double floor) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sigmoid_inverse(double w) {
  const double c = std::clamp(w, kSigmoidClamp, 1.0 - kSigmoidClamp);
  return std::log(c / (1.0 - c));
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

int LayerSpec::num_params() const {
  int total = 0;
  for (int l = 0; l < num_layers(); ++l) {
    total += dims[static_cast<std::size_t>(l + 1)] * (dims[static_cast<std::size_t>(l)] + 1);
  }
  return total;
}

void LayerSpec::validate() const {
  if (dims.size() < 2) throw ConfigError("a layer spec needs at least 2 widths");
  for (int d : dims) {
    if (d < 1) throw ConfigError("layer widths must be >= 1");
  }
}

MlpCache mlp_forward(const Eigen::VectorXd& params, const LayerSpec& spec, const Eigen::MatrixXd& x) {
  spec.validate();
  if (params.size() != spec.num_params()) {
    throw std::invalid_argument("mlp_forward: expected " + std::to_string(spec.num_params()) + " params, got " +
                                std::to_string(params.size()));
  }
  if (x.cols() != spec.input_dim()) {
    throw std::invalid_argument("mlp_forward: input width " + std::to_string(x.cols()) + " != " +
                                std::to_string(spec.input_dim()));
  }
  MlpCache cache;
  cache.params = params.data();
  cache.dims = spec.dims;
  Eigen::MatrixXd a = x;
  Eigen::Index offset = 0;
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int in = spec.dims[static_cast<std::size_t>(l)];
    const int out = spec.dims[static_cast<std::size_t>(l + 1)];
    Eigen::Map<const RowMajor> W(params.data() + offset, out, in);
    Eigen::Map<const Eigen::VectorXd> b(params.data() + offset + Eigen::Index{out} * in, out);
    offset += Eigen::Index{out} * (in + 1);
    Eigen::MatrixXd z = a * W.transpose();
    z.rowwise() += b.transpose();
    cache.inputs.push_back(std::move(a));
    a = activate(z, layer_activation(spec, l));
    cache.pre.push_back(std::move(z));
  }
  cache.output = std::move(a);
  return cache;
}

MlpGrads mlp_backward(const Eigen::VectorXd& params, const LayerSpec& spec, const MlpCache& cache,
                      const Eigen::MatrixXd& upstream) {
  if (cache.params != params.data() || cache.dims != spec.dims ||
      static_cast<int>(cache.pre.size()) != spec.num_layers()) {
    throw std::logic_error("mlp_backward: cache does not belong to these parameters");
  }
  if (upstream.rows() != cache.output.rows() || upstream.cols() != cache.output.cols()) {
    throw std::invalid_argument("mlp_backward: upstream gradient shape mismatch");
  }
  MlpGrads g;
  g.params = Eigen::VectorXd::Zero(params.size());
  Eigen::MatrixXd delta = upstream;
  Eigen::Index offset = params.size();
  for (int l = spec.num_layers() - 1; l >= 0; --l) {
    const int in = spec.dims[static_cast<std::size_t>(l)];
    const int out = spec.dims[static_cast<std::size_t>(l + 1)];
    offset -= Eigen::Index{out} * (in + 1);
    const auto lu = static_cast<std::size_t>(l);
    const Eigen::MatrixXd y = l + 1 < spec.num_layers() ? cache.inputs[lu + 1] : cache.output;
    delta = delta.cwiseProduct(activation_grad(cache.pre[lu], y, layer_activation(spec, l)));

    Eigen::Map<RowMajor> dW(g.params.data() + offset, out, in);
    Eigen::Map<Eigen::VectorXd> db(g.params.data() + offset + Eigen::Index{out} * in, out);
    dW = delta.transpose() * cache.inputs[lu];
    db = delta.colwise().sum().transpose();
    Eigen::Map<const RowMajor> W(params.data() + offset, out, in);
    delta = delta * W;
  }
  g.input = std::move(delta);
  return g;
}

void init_mlp(Eigen::VectorXd& params, const LayerSpec& spec, Rng& rng) {
  spec.validate();
  params = Eigen::VectorXd::Zero(spec.num_params());
  Eigen::Index offset = 0;
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int in = spec.dims[static_cast<std::size_t>(l)];
    const int out = spec.dims[static_cast<std::size_t>(l + 1)];
    const double limit = layer_activation(spec, l) == Activation::Relu ? std::sqrt(6.0 / in)
                                                                        : std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index i = 0; i < Eigen::Index{out} * in; ++i) params(offset + i) = u(rng);
    // A small positive bias keeps ReLU units (hidden or output) from starting dead.
    if (layer_activation(spec, l) == Activation::Relu) {
      params.segment(offset + Eigen::Index{out} * in, out).setConstant(kReluBiasInit);
    }
    offset += Eigen::Index{out} * (in + 1);
  }
}

GcnCache gcn_forward(const Eigen::MatrixXd& H, const Eigen::MatrixXd& G, const Eigen::MatrixXd& theta) {
  const Eigen::Index K = H.rows();
  if (G.rows() != K || G.cols() != K || theta.rows() != H.cols()) {
    throw std::invalid_argument("gcn_forward: shape mismatch");
  }
  GcnCache c{H, G, theta, {}, {}, {}, {}, {}};
  c.degree = G.rowwise().sum().array() + 1.0;
  const Eigen::VectorXd s = c.degree.cwiseSqrt().cwiseInverse();
  c.A_hat = s.asDiagonal() * (G + Eigen::MatrixXd::Identity(K, K)) * s.asDiagonal();
  c.P = c.A_hat * H;
  c.Z = c.P * theta;
  c.output = c.Z.cwiseMax(0.0);
  return c;
}

GcnGrads gcn_backward(const GcnCache& c, const Eigen::MatrixXd& upstream) {
  const Eigen::MatrixXd dZ = upstream.cwiseProduct((c.Z.array() > 0.0).cast<double>().matrix());
  GcnGrads g;
  g.theta = c.P.transpose() * dZ;
  const Eigen::MatrixXd dP = dZ * c.theta.transpose();
  g.H = c.A_hat.transpose() * dP;
  const Eigen::MatrixXd dA = dP * c.H.transpose();

  // A_hat_ij = (G + I)_ij s_i s_j with s = d^-1/2 and d_i = 1 + sum_j G_ij.
  const Eigen::VectorXd s = c.degree.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd weighted = dA.cwiseProduct(c.A_hat);
  const Eigen::VectorXd d_degree =
      (-0.5 * (weighted.rowwise().sum() + weighted.colwise().sum().transpose()).array() / c.degree.array())
          .matrix();
  g.G = s.asDiagonal() * dA * s.asDiagonal();
  g.G.colwise() += d_degree;
  return g;
}

ParamEntry& ParamStore::add(const std::string& name, std::vector<int> shape, Eigen::VectorXd data) {
  if (contains(name)) throw std::logic_error("duplicate parameter entry " + name);
  const long expected = std::accumulate(shape.begin(), shape.end(), 1L, std::multiplies<>());
  if (expected != data.size()) throw std::logic_error("shape/data size mismatch for " + name);
  ParamEntry e;
  e.shape = std::move(shape);
  e.m = Eigen::VectorXd::Zero(data.size());
  e.v = Eigen::VectorXd::Zero(data.size());
  e.data = std::move(data);
  return entries_.emplace(name, std::move(e)).first->second;
}

ParamEntry& ParamStore::at(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("no parameter entry " + name);
  return it->second;
}

const ParamEntry& ParamStore::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("no parameter entry " + name);
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

long ParamStore::total_size() const {
  long n = 0;
  for (const auto& [_, e] : entries_) n += e.data.size();
  return n;
}

bool ParamStore::all_finite() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const auto& kv) { return kv.second.data.allFinite(); });
}

Gradients ParamStore::zero_grads() const {
  Gradients g;
  for (const auto& [name, e] : entries_) g.emplace(name, Eigen::VectorXd::Zero(e.data.size()));
  return g;
}

bool ParamStore::operator==(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  auto same = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.size() == b.size() && std::equal(a.data(), a.data() + a.size(), b.data());
  };
  for (const auto& [name, e] : entries_) {
    auto it = other.entries_.find(name);
    if (it == other.entries_.end()) return false;
    const auto& o = it->second;
    if (e.shape != o.shape || e.step != o.step || !same(e.data, o.data) || !same(e.m, o.m) || !same(e.v, o.v)) {
      return false;
    }
  }
  return true;
}

std::string ParamStore::to_json() const {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, e] : entries_) {
    j[name] = {{"shape", e.shape}, {"data", vec(e.data)}, {"m", vec(e.m)}, {"v", vec(e.v)}, {"step", e.step}};
  }
  return j.dump();
}

ParamStore ParamStore::from_json(const std::string& text) {
  auto vec = [](const nlohmann::json& a) {
    const auto v = a.get<std::vector<double>>();
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  try {
    const auto j = nlohmann::json::parse(text);
    ParamStore store;
    for (const auto& [name, entry] : j.items()) {
      auto& e = store.add(name, entry.at("shape").get<std::vector<int>>(), vec(entry.at("data")));
      if (entry.contains("m")) e.m = vec(entry.at("m"));
      if (entry.contains("v")) e.v = vec(entry.at("v"));
      if (entry.contains("step")) e.step = entry.at("step").get<long>();
      if (e.m.size() != e.data.size() || e.v.size() != e.data.size()) {
        throw ConfigError("optimizer state size mismatch for " + name);
      }
    }
    return store;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::logic_error& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

void ParamStore::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << to_json() << '\n';
  if (!out) throw IoError("write failed: " + path);
}

ParamStore ParamStore::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

void apply_gradients(ParamStore& params, const Gradients& grads, const OptimizerConfig& opt) {
  for (const auto& [name, g] : grads) {
    auto& e = params.at(name);
    if (g.size() != e.data.size()) throw std::invalid_argument("gradient size mismatch for " + name);
    ++e.step;
    if (opt.kind == OptimizerKind::Sgd) {
      e.data -= opt.lr * g;
      continue;
    }
    e.m = opt.beta1 * e.m + (1.0 - opt.beta1) * g;
    e.v = opt.beta2 * e.v + (1.0 - opt.beta2) * g.cwiseAbs2();
    const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(e.step));
    const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(e.step));
    e.data.array() -= opt.lr * (e.m.array() / c1) / ((e.v.array() / c2).sqrt() + opt.eps);
  }
}

void adam_step(ParamStore& params, const Gradients& grads, double lr, double beta1, double beta2, double eps) {
  apply_gradients(params, grads, {OptimizerKind::Adam, lr, beta1, beta2, eps});
}

double finite_diff_check(const std::function<double(const Eigen::VectorXd&)>& loss, const Eigen::VectorXd& point,
                         const Eigen::VectorXd& analytic, double h, int max_coords, std::uint64_t sample_seed,
                         double floor) {
  if (analytic.size() != point.size()) throw std::invalid_argument("finite_diff_check: size mismatch");
  Eigen::VectorXd p = point;
  double worst = 0.0;
  for (Eigen::Index i : sample_coords(p.size(), max_coords, sample_seed)) {
    const double orig = p(i);
    p(i) = orig + h;
    const double up = loss(p);
    p(i) = orig - h;
    const double down = loss(p);
    p(i) = orig;
    worst = std::max(worst, relative_error(analytic(i), (up - down) / (2.0 * h), floor));
  }
  return worst;
}

double finite_diff_check(const std::function<double(const ParamStore&)>& loss, const ParamStore& params,
                         const Gradients& analytic, double h, int max_coords_per_entry, std::uint64_t sample_seed,
                         double floor) {
  ParamStore p = params;
  double worst = 0.0;
  std::uint64_t salt = 0;
  for (const auto& name : p.names()) {
    auto it = analytic.find(name);
    if (it == analytic.end()) continue;
    auto& data = p.at(name).data;
    for (Eigen::Index i : sample_coords(data.size(), max_coords_per_entry, splitmix64(sample_seed + salt++))) {
      const double orig = data(i);
      data(i) = orig + h;
      const double up = loss(p);
      data(i) = orig - h;
      const double down = loss(p);
      data(i) = orig;
      worst = std::max(worst, relative_error(it->second(i), (up - down) / (2.0 * h), floor));
    }
  }
  return worst;
}

}  // namespace rawgrl
