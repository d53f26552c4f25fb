#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "rawgrl/errors.hpp"
#include "rawgrl/maxcut.hpp"

using namespace rawgrl;

namespace {


bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("sdp trivial instances") {
  const auto one = solve_maxcut_sdp(Eigen::MatrixXd::Zero(1, 1));
  CHECK(one.X(0, 0) == 1.0);
  CHECK(one.objective == 0.0);

  Eigen::MatrixXd two(2, 2);
  two << 0, 0.7, 1.3, 0;
  const auto s = solve_maxcut_sdp(two);
  // Both ordered pairs count: (0.7 + 1.3) (1 - (-1)) / 2.
  CHECK(s.X(0, 1) == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(s.objective == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("sdp optimum matches an interior-point reference") {
  // Optima computed offline with cvxpy (SCS, eps 1e-9) on the same matrices.
  Eigen::MatrixXd A(6, 6);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) A(i, j) = i == j ? 0.0 : ((i * 7 + j * 3) % 10) / 10.0;
  }
  CHECK(solve_maxcut_sdp(A).objective == doctest::Approx(9.0).epsilon(1e-6));

  Eigen::MatrixXd C5 = Eigen::MatrixXd::Zero(5, 5);
  for (int i = 0; i < 5; ++i) C5(i, (i + 1) % 5) = C5((i + 1) % 5, i) = 1.0;
  // Unit 5-cycle: 5 (1 + cos(pi / 5)).
  CHECK(solve_maxcut_sdp(C5).objective == doctest::Approx(5.0 * (1.0 + std::cos(std::numbers::pi / 5))).epsilon(1e-6));

  Eigen::MatrixXd C(7, 7);
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 7; ++j) C(i, j) = i == j ? 0.0 : ((i * i + 3 * j + 1) % 11) / 10.0;
  }
  CHECK(solve_maxcut_sdp(C).objective == doctest::Approx(14.621485111266276).epsilon(1e-6));
}

TEST_CASE("sdp feasibility, upper bound and symmetrization invariance") {
  Rng rng(17);
  for (int t = 0; t < 30; ++t) {
    const int n = 3 + t % 6;
    const Eigen::MatrixXd W = testutil::random_weights(n, rng);
    const auto s = solve_maxcut_sdp(W);
    CHECK((s.X.diagonal().array() - 1.0).abs().maxCoeff() < 1e-9);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.X);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-6);
    CHECK(s.objective >= brute_force_maxcut(W, 2).value * (1.0 - 1e-6));
    const Eigen::MatrixXd sym = 0.5 * (W + W.transpose());
    CHECK(solve_maxcut_sdp(sym).objective == doctest::Approx(s.objective).epsilon(1e-7));
  }
}

TEST_CASE("sdp reports non-convergence") {
  Rng rng(2);
  const Eigen::MatrixXd W = testutil::random_weights(8, rng);
  try {
    solve_maxcut_sdp(W, 1e-6, 1, 0);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.residual() > 0.0);
  }
}

TEST_CASE("hyperplane rounding") {
  Rng rng(4);
  SdpSolution ones{Eigen::MatrixXd::Ones(4, 4), 0.0, 0};
  const auto y = gw_round(ones, Eigen::MatrixXd::Ones(4, 4) - Eigen::MatrixXd::Identity(4, 4), rng, 5);
  CHECK(std::all_of(y.begin(), y.end(), [&](int v) { return v == y[0]; }));

  Eigen::MatrixXd X(2, 2);
  X << 1, -1, -1, 1;
  Eigen::MatrixXd W(2, 2);
  W << 0, 1, 1, 0;
  for (int t = 0; t < 20; ++t) {
    const auto y2 = gw_round({X, 1.0, 0}, W, rng, 1);
    CHECK(y2[0] != y2[1]);
  }
}

TEST_CASE("rounding quality against brute force on 8-node graphs") {
  Rng rng(123);
  for (int t = 0; t < 100; ++t) {
    const Eigen::MatrixXd W = testutil::random_weights(8, rng);
    const auto y = gw_round(solve_maxcut_sdp(W), W, rng, 20);
    CHECK(cut_value(W, y) >= 0.87854 * brute_force_maxcut(W, 2).value);
  }
}

TEST_CASE("cut value") {
  Eigen::MatrixXd W = Eigen::MatrixXd::Ones(4, 4) - Eigen::MatrixXd::Identity(4, 4);
  CHECK(cut_value(W, {0, 0, 0, 0}) == 0.0);
  CHECK(cut_value(W, {0, 1, 2, 3}) == 12.0);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
  D(0, 1) = 0.3;
  D(1, 0) = 0.7;
  CHECK(cut_value(D, {0, 1}) == doctest::Approx(1.0));
}

TEST_CASE("brute force max cut") {
  Eigen::MatrixXd pair = Eigen::MatrixXd::Zero(2, 2);
  pair(0, 1) = 0.25;
  pair(1, 0) = 0.5;
  const auto p = brute_force_maxcut(pair, 2);
  CHECK(p.value == doctest::Approx(0.75));
  CHECK(p.groups[0] != p.groups[1]);

  const Eigen::MatrixXd tri = Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3);
  // Of the 2^3 patterns the best keeps one pair together: 2 crossing pairs, both directions.
  CHECK(brute_force_maxcut(tri, 2).value == 4.0);
  CHECK(brute_force_maxcut(tri, 4).value == 6.0);
  CHECK(brute_force_maxcut(Eigen::MatrixXd::Zero(3, 3), 2).groups == std::vector<int>{0, 0, 0});
  CHECK_THROWS_AS(brute_force_maxcut(Eigen::MatrixXd::Zero(13, 13), 2), ConfigError);

  // Cross-check the restricted-growth enumeration against plain enumeration of Z^K.
  Rng rng(9);
  const Eigen::MatrixXd W = testutil::random_weights(6, rng);
  double best = 0.0;
  std::vector<int> z(6);
  for (int code = 0; code < 729; ++code) {
    int c = code;
    for (int k = 0; k < 6; ++k, c /= 3) z[static_cast<std::size_t>(k)] = c % 3;
    best = std::max(best, cut_value(W, z));
  }
  CHECK(brute_force_maxcut(W, 3).value == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("recursive graph cut") {
  Rng rng(5);
  Eigen::MatrixXd W = testutil::random_weights(7, rng);
  EdgeGraph g{W};
  const auto z1 = do_graph_cut(1, g, rng);
  CHECK(z1.groups == std::vector<int>(7, 0));
  CHECK_THROWS_AS(do_graph_cut(3, g, rng), ConfigError);

  EdgeGraph e{Eigen::MatrixXd::Zero(3, 3)};
  e.W(0, 1) = e.W(1, 0) = 1.0;
  const auto z = do_graph_cut(2, e, rng);
  CHECK(z.groups[0] != z.groups[1]);

  std::vector<BisectionRecord> trace;
  const auto z8 = do_graph_cut(8, g, rng, {}, &trace);
  CHECK_NOTHROW(z8.validate());
  CHECK(z8.num_groups == 8);
  CHECK(!trace.empty());
  CHECK(trace.size() <= 7);
  CHECK(trace.front().size == 7);
  for (const auto& r : trace) CHECK(r.realized_cut <= r.sdp_objective + 1e-6);
}

TEST_CASE("exact-mode bisection reaches the brute-force optimum") {
  Rng rng(31);
  CutOptions exact;
  exact.exact = true;
  for (int t = 0; t < 10; ++t) {
    EdgeGraph g{testutil::random_weights(6, rng)};
    const auto z = do_graph_cut(2, g, rng, exact);
    CHECK(cut_value(g.W, z.groups) == doctest::Approx(brute_force_maxcut(g.W, 2).value).epsilon(1e-12));
  }
}

TEST_CASE("indicator weights recover any two-group target") {
  Rng rng(8);
  CutOptions exact;
  exact.exact = true;
  for (int t = 0; t < 20; ++t) {
    const int K = 2 + t % 5;
    std::vector<int> target(static_cast<std::size_t>(K));
    std::uniform_int_distribution<int> bit(0, 1);
    for (auto& v : target) v = bit(rng);
    EdgeGraph g{Eigen::MatrixXd::Zero(K, K)};
    for (int i = 0; i < K; ++i) {
      for (int j = 0; j < K; ++j) g.W(i, j) = target[static_cast<std::size_t>(i)] != target[static_cast<std::size_t>(j)];
    }
    CHECK(same_partition(do_graph_cut(2, g, rng, exact).groups, target));
    // With both sides populated the relaxation is tight and rounding recovers it too.
    if (g.W.sum() > 0) CHECK(same_partition(do_graph_cut(2, g, rng).groups, target));
  }
}

TEST_CASE("edge graph validation and json round trip") {
  Rng rng(6);
  EdgeGraph g{testutil::random_weights(5, rng)};
  CHECK_NOTHROW(g.validate());
  const auto back = edge_graph_from_json(edge_graph_to_json(g));
  CHECK(back.W == g.W);
  EdgeGraph bad = g;
  bad.W(0, 0) = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = g;
  bad.W(1, 2) = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(edge_graph_from_json("{\"W\": [[0, 1], [1]]}"), ConfigError);
  CHECK_THROWS_AS(edge_graph_from_json("not json"), ConfigError);
}

TEST_CASE("interior-point fallback reaches the same optimum") {
  Eigen::MatrixXd C(7, 7);
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 7; ++j) C(i, j) = i == j ? 0.0 : ((i * i + 3 * j + 1) % 11) / 10.0;
  }
  // Too few sweeps for the coordinate ascent, enough for the fallback.
  const auto s = solve_maxcut_sdp(C, 1e-6, 3);
  CHECK(s.ipm_iterations > 0);
  CHECK(s.objective == doctest::Approx(14.621485111266276).epsilon(1e-6));
  CHECK((s.X.diagonal().array() - 1.0).abs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.X);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-6);

  // Near-uniform weights: a flat optimal face where the coordinate ascent crawls.
  Rng rng(77);
  Eigen::MatrixXd U = testutil::random_weights(10, rng) * 0.15;
  U.array() += 0.44;
  U.diagonal().setZero();
  const auto fast = solve_maxcut_sdp(U);
  const auto ipm = solve_maxcut_sdp(U, 1e-6, 3);
  CHECK(fast.objective == doctest::Approx(ipm.objective).epsilon(2e-6));
}
