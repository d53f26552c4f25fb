#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "rawgrl/baselines.hpp"
#include "rawgrl/errors.hpp"

using namespace rawgrl;

TEST_CASE("random grouping") {
  Rng rng(1);
  CHECK(rand_group(5, 1, rng).groups == std::vector<int>(5, 0));

  const int draws = 100000, Z = 4;
  std::vector<int> counts(Z);
  const auto z = rand_group(draws, Z, rng);
  CHECK_NOTHROW(z.validate());
  for (int g : z.groups) ++counts[static_cast<std::size_t>(g)];
  const double sigma = std::sqrt(draws * 0.25 * 0.75);
  for (int c : counts) CHECK(std::abs(c - draws / 4.0) <= 3 * sigma);

  Rng a(9), b(9);
  CHECK(rand_group(30, 4, a) == rand_group(30, 4, b));
}

TEST_CASE("round-robin grouping") {
  // Two APs; lower normalized loss marks the association.
  StateMatrix S{Eigen::MatrixXd(2, 4)};
  S.values << -0.5, -0.9, -0.5, -0.9,  //
      -0.8, -0.2, -0.8, -0.2;
  // Associations (1, 0, 1, 0): sorted order is users 1, 3, 0, 2, labelled 1, 0, 1, 0.
  const auto z = unif_group(S, 2);
  CHECK(z.groups == std::vector<int>{1, 1, 0, 0});

  StateMatrix sorted{Eigen::MatrixXd::Constant(1, 4, -0.5)};
  CHECK(unif_group(sorted, 2).groups == std::vector<int>{1, 0, 1, 0});
  CHECK(unif_group(sorted, 4).groups == std::vector<int>{1, 2, 3, 0});

  const auto scen = testutil::small_scenario(23, 4);
  const auto real = generate_realization(scen, 3);
  const auto S2 = observe_states(real, scen);
  const auto u = unif_group(S2, 4);
  CHECK(u == unif_group(S2, 4));
  const auto assoc = S2.associations();
  for (int ap = 0; ap < 4; ++ap) {
    std::vector<int> per(4);
    for (int k = 0; k < 23; ++k) {
      if (assoc[static_cast<std::size_t>(k)] == ap) ++per[static_cast<std::size_t>(u.groups[static_cast<std::size_t>(k)])];
    }
    CHECK(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()) <= 1);
  }
}

TEST_CASE("fixed-rule edge weights") {
  const auto scen = testutil::small_scenario(8, 2);
  const auto real = generate_realization(scen, 4);
  const auto S = observe_states(real, scen);
  ModelConfig model;
  Rng rng(5);
  const auto params = init_model(model, rng);

  const auto mcon = fixed_rule_weights(BaselineKind::Mcon, S, params, model, scen);
  const auto mhid = fixed_rule_weights(BaselineKind::Mhid, S, params, model, scen);
  const auto mint = fixed_rule_weights(BaselineKind::Mint, S, params, model, scen);
  for (const auto* g : {&mcon, &mhid, &mint}) CHECK_NOTHROW(g->validate());
  const Eigen::MatrixXd sum = mcon.W + mhid.W;
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) CHECK(sum(i, j) == doctest::Approx(i == j ? 0.0 : 1.0));
  }
  CHECK(mint.W.maxCoeff() == 1.0);

  // Two users at equal loss to one AP with noise far below the signal: phi' is about 1 both ways.
  ScenarioConfig one_ap = scen;
  one_ap.ap_positions = {{0.0, 0.0}};
  StateMatrix eq{Eigen::MatrixXd::Constant(1, 2, -0.5)};
  const auto pair = fixed_rule_weights(BaselineKind::Mint, eq, params, model, one_ap);
  CHECK(pair.W(0, 1) == 1.0);
  CHECK(pair.W(1, 0) == 1.0);

  CHECK_THROWS_AS(fixed_rule_weights(BaselineKind::Rand, S, params, model, scen), ConfigError);
  CHECK_THROWS_AS(fixed_rule_weights(BaselineKind::Unif, S, params, model, scen), ConfigError);
}

TEST_CASE("baseline names") {
  CHECK(parse_baseline("MINT") == BaselineKind::Mint);
  CHECK(parse_baseline("rand") == BaselineKind::Rand);
  CHECK(baseline_name(BaselineKind::Mhid) == "mhid");
  CHECK_THROWS_AS(parse_baseline("graph-coloring"), ConfigError);
}
