#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "helpers.hpp"
#include "rawgrl/errors.hpp"
#include "rawgrl/nnkernel.hpp"

using namespace rawgrl;

namespace {

double weighted_output(const Eigen::VectorXd& p, const LayerSpec& spec, const Eigen::MatrixXd& x,
                       const Eigen::MatrixXd& up) {
  return (mlp_forward(p, spec, x).output.array() * up.array()).sum();
}

}  // namespace

TEST_CASE("activations") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(40.0) == doctest::Approx(1.0));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid_inverse(0.5) == doctest::Approx(0.0));
  CHECK(sigmoid_inverse(sigmoid(1.7)) == doctest::Approx(1.7));
  CHECK(std::isfinite(sigmoid_inverse(0.0)));
  CHECK(std::isfinite(sigmoid_inverse(1.0)));
  CHECK(sigmoid_inverse(0.0) == doctest::Approx(std::log(kSigmoidClamp / (1.0 - kSigmoidClamp))));
  CHECK(relu(-2.0) == 0.0);
  CHECK(relu(3.0) == 3.0);
}

TEST_CASE("layer spec") {
  LayerSpec s{{2, 3, 1}, Activation::Sigmoid};
  CHECK(s.num_params() == 2 * 3 + 3 + 3 + 1);
  CHECK(s.num_layers() == 2);
  CHECK_THROWS_AS(LayerSpec{{4}}.validate(), ConfigError);
  CHECK_THROWS_AS((LayerSpec{{4, 0, 1}}).validate(), ConfigError);
}

TEST_CASE("mlp forward on a hand-built network") {
  // 2 -> 2 (ReLU) -> 1 (identity). Row-major W then b per layer.
  LayerSpec s{{2, 2, 1}, Activation::None};
  Eigen::VectorXd p(9);
  p << 1, -1, 0.5, 2,  // W1
      0.1, -0.2,       // b1
      3, -1,           // W2
      0.25;            // b2
  Eigen::MatrixXd x(2, 2);
  x << 1, 2, -1, 0.5;
  const auto c = mlp_forward(p, s, x);
  // Row 0: h = relu(1-2+0.1, 0.5+4-0.2) = (0, 4.3); out = -4.3 + 0.25.
  CHECK(c.output(0, 0) == doctest::Approx(-4.05));
  // Row 1: h = relu(-1-0.5+0.1, -0.5+1-0.2) = (0, 0.3); out = -0.3 + 0.25.
  CHECK(c.output(1, 0) == doctest::Approx(-0.05));

  LayerSpec sig{{2, 2, 1}, Activation::Sigmoid};
  CHECK(mlp_forward(p, sig, x).output(0, 0) == doctest::Approx(sigmoid(-4.05)));
  CHECK_THROWS_AS(mlp_forward(p, s, Eigen::MatrixXd::Zero(1, 3)), std::invalid_argument);
  CHECK_THROWS_AS(mlp_forward(Eigen::VectorXd::Zero(3), s, x), std::invalid_argument);
}

TEST_CASE("zero parameters give constant outputs") {
  LayerSpec s{{8, 80, 80, 1}, Activation::Sigmoid};
  Rng rng(1);
  const auto c = mlp_forward(Eigen::VectorXd::Zero(s.num_params()), s, testutil::random_matrix(5, 8, rng));
  CHECK((c.output.array() == 0.5).all());
}

TEST_CASE("mlp backward matches finite differences") {
  Rng rng(3);
  for (Activation out : {Activation::None, Activation::Sigmoid, Activation::Relu}) {
    LayerSpec s{{4, 7, 6, 2}, out};
    Eigen::VectorXd p;
    init_mlp(p, s, rng);
    p += 0.05 * testutil::random_matrix(static_cast<int>(p.size()), 1, rng);  // nonzero biases
    const Eigen::MatrixXd x = testutil::random_matrix(6, 4, rng);
    const Eigen::MatrixXd up = testutil::random_matrix(6, 2, rng);
    const auto cache = mlp_forward(p, s, x);
    const auto g = mlp_backward(p, s, cache, up);
    CHECK(finite_diff_check([&](const Eigen::VectorXd& q) { return weighted_output(q, s, x, up); }, p, g.params,
                            1e-6, 400) < 1e-4);
    const Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
    const Eigen::VectorXd gx = Eigen::Map<const Eigen::VectorXd>(g.input.data(), g.input.size());
    const auto through_x = [&](const Eigen::VectorXd& v) {
      return weighted_output(p, s, Eigen::Map<const Eigen::MatrixXd>(v.data(), x.rows(), x.cols()), up);
    };
    CHECK(finite_diff_check(through_x, xv, gx, 1e-6) < 1e-4);
  }
}

TEST_CASE("mlp backward rejects a stale cache") {
  LayerSpec s{{2, 3, 1}, Activation::None};
  Rng rng(2);
  Eigen::VectorXd p, q;
  init_mlp(p, s, rng);
  init_mlp(q, s, rng);
  const auto cache = mlp_forward(p, s, Eigen::MatrixXd::Ones(1, 2));
  CHECK_THROWS_AS(mlp_backward(q, s, cache, Eigen::MatrixXd::Ones(1, 1)), std::logic_error);
  LayerSpec other{{2, 4, 1}, Activation::None};
  CHECK_THROWS_AS(mlp_backward(p, other, cache, Eigen::MatrixXd::Ones(1, 1)), std::logic_error);
}

TEST_CASE("initialization scale and biases") {
  LayerSpec s{{40, 400, 1}, Activation::Sigmoid};
  Rng rng(11);
  Eigen::VectorXd p;
  init_mlp(p, s, rng);
  const Eigen::VectorXd W1 = p.head(40 * 400);
  // He-uniform: variance 2 / fan_in.
  CHECK(W1.squaredNorm() / W1.size() == doctest::Approx(2.0 / 40).epsilon(0.05));
  CHECK((p.segment(40 * 400, 400).array() == kReluBiasInit).all());
  CHECK(p(p.size() - 1) == 0.0);
  // Xavier on the output layer: limit sqrt(6 / (400 + 1)).
  CHECK(p.segment(40 * 400 + 400, 400).cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 401));

  Rng a(5), b(5);
  Eigen::VectorXd pa, pb;
  init_mlp(pa, s, a);
  init_mlp(pb, s, b);
  CHECK(pa == pb);
}

TEST_CASE("gcn forward on a two-node graph") {
  Eigen::MatrixXd G(2, 2);
  G << 0, 1, 1, 0;
  Eigen::MatrixXd H(2, 1);
  H << 1, 3;
  const auto c = gcn_forward(H, G, Eigen::MatrixXd::Identity(1, 1));
  // Degrees 2, A_hat = [[1/2, 1/2], [1/2, 1/2]].
  CHECK(c.output(0, 0) == doctest::Approx(2.0));
  CHECK(c.output(1, 0) == doctest::Approx(2.0));

  // No edges: A_hat = I, output = relu(H theta).
  const auto e = gcn_forward(H, Eigen::MatrixXd::Zero(2, 2), -Eigen::MatrixXd::Identity(1, 1));
  CHECK(e.output.isZero());
  CHECK_THROWS_AS(gcn_forward(H, Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Identity(1, 1)),
                  std::invalid_argument);
}

TEST_CASE("gcn permutation equivariance") {
  Rng rng(12);
  const Eigen::MatrixXd G = testutil::random_weights(6, rng);
  const Eigen::MatrixXd H = testutil::random_matrix(6, 3, rng);
  const Eigen::MatrixXd T = testutil::random_matrix(3, 3, rng);
  Eigen::PermutationMatrix<Eigen::Dynamic> P(6);
  P.indices() << 3, 0, 5, 1, 4, 2;
  const auto base = gcn_forward(H, G, T).output;
  const Eigen::MatrixXd Gp = P * G * P.transpose();
  const auto perm = gcn_forward(P * H, Gp, T).output;
  CHECK((perm - P * base).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gcn backward matches finite differences") {
  Rng rng(13);
  const int K = 5, M = 4;
  const Eigen::MatrixXd G = testutil::random_weights(K, rng);
  const Eigen::MatrixXd H = testutil::random_matrix(K, M, rng);
  const Eigen::MatrixXd T = testutil::random_matrix(M, M, rng);
  const Eigen::MatrixXd up = testutil::random_matrix(K, M, rng);
  const auto g = gcn_backward(gcn_forward(H, G, T), up);
  const auto f = [&](const Eigen::MatrixXd& h, const Eigen::MatrixXd& gg, const Eigen::MatrixXd& t) {
    return (gcn_forward(h, gg, t).output.array() * up.array()).sum();
  };
  const auto flat = [](const Eigen::MatrixXd& m) { return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(m.data(), m.size())); };
  const auto shaped = [](const Eigen::VectorXd& v, Eigen::Index r, Eigen::Index c) {
    return Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(v.data(), r, c));
  };
  CHECK(finite_diff_check([&](const Eigen::VectorXd& v) { return f(shaped(v, K, M), G, T); }, flat(H), flat(g.H),
                          1e-6) < 1e-4);
  CHECK(finite_diff_check([&](const Eigen::VectorXd& v) { return f(H, shaped(v, K, K), T); }, flat(G), flat(g.G),
                          1e-6) < 1e-4);
  CHECK(finite_diff_check([&](const Eigen::VectorXd& v) { return f(H, G, shaped(v, M, M)); }, flat(T), flat(g.theta),
                          1e-6) < 1e-4);
}

TEST_CASE("adam first step moves each coordinate by lr against the gradient sign") {
  ParamStore ps;
  Eigen::VectorXd x(3);
  x << 1.0, -2.0, 0.5;
  ps.add("x", {3}, x);
  Gradients g{{"x", Eigen::Vector3d(0.3, -4.0, 0.0)}};
  adam_step(ps, g, 0.01);
  // Bias-corrected first step is lr * g / (|g| + eps).
  CHECK(ps.data("x")(0) == doctest::Approx(0.99).epsilon(1e-9));
  CHECK(ps.data("x")(1) == doctest::Approx(-1.99).epsilon(1e-9));
  CHECK(ps.data("x")(2) == 0.5);
  CHECK(ps.at("x").step == 1);

  OptimizerConfig sgd{OptimizerKind::Sgd, 0.1};
  apply_gradients(ps, g, sgd);
  CHECK(ps.data("x")(0) == doctest::Approx(0.99 - 0.03));
}

TEST_CASE("adam minimizes a quadratic") {
  ParamStore ps;
  ps.add("x", {2}, Eigen::Vector2d(3.0, -2.0));
  for (int i = 0; i < 2000; ++i) {
    Gradients g{{"x", 2.0 * (ps.data("x") - Eigen::Vector2d(1.0, 1.0))}};
    adam_step(ps, g, 0.01);
  }
  CHECK((ps.data("x") - Eigen::Vector2d(1.0, 1.0)).norm() < 1e-2);
}

TEST_CASE("finite difference checker") {
  const auto sq = [](const Eigen::VectorXd& v) { return v.squaredNorm(); };
  const Eigen::Vector3d p(1.0, -2.0, 0.5);
  CHECK(finite_diff_check(sq, p, 2.0 * p) < 1e-8);
  // A wrong gradient is caught: 3x instead of 2x gives relative error 1/3.
  CHECK(finite_diff_check(sq, p, 3.0 * p) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  // Both near zero: the floor keeps the error small instead of dividing by ~0.
  CHECK(finite_diff_check(sq, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()) < 1e-6);
  CHECK_THROWS_AS(finite_diff_check(sq, p, Eigen::VectorXd::Zero(2)), std::invalid_argument);
}

TEST_CASE("param store bookkeeping and json round trip") {
  ParamStore ps;
  Rng rng(14);
  ps.add("a", {2, 3}, testutil::random_matrix(6, 1, rng));
  ps.add("b", {4}, testutil::random_matrix(4, 1, rng));
  CHECK(ps.total_size() == 10);
  CHECK(ps.names() == std::vector<std::string>{"a", "b"});
  CHECK(ps.all_finite());
  CHECK_THROWS_AS(ps.add("a", {1}, Eigen::VectorXd::Zero(1)), std::logic_error);
  CHECK_THROWS_AS(ps.add("c", {2, 2}, Eigen::VectorXd::Zero(3)), std::logic_error);
  const auto zero = ps.zero_grads();
  CHECK(zero.at("a").size() == 6);
  CHECK(zero.at("a").isZero());

  adam_step(ps, {{"a", Eigen::VectorXd::Ones(6)}}, 1e-3);
  const auto text = ps.to_json();
  const auto back = ParamStore::from_json(text);
  CHECK(back == ps);
  CHECK(back.to_json() == text);
  CHECK(back.at("a").step == 1);

  const auto dir = std::filesystem::temp_directory_path() / "rawgrl_nn_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "p.json").string();
  ps.save(path);
  CHECK(ParamStore::load(path) == ps);
  CHECK_THROWS_AS(ParamStore::load((dir / "missing.json").string()), IoError);
  CHECK_THROWS_AS(ParamStore::from_json("{\"a\": 1}"), ConfigError);

  ParamStore bad;
  bad.add("x", {1}, Eigen::VectorXd::Constant(1, std::nan("")));
  CHECK_FALSE(bad.all_finite());
}
