#include <doctest.h>

#include "helpers.hpp"
#include "rawgrl/desim.hpp"
#include "rawgrl/errors.hpp"

using namespace rawgrl;

namespace {

ScenarioConfig saturated(ScenarioConfig cfg) {
  cfg.arrival_interval_mean = 1e-6;
  return cfg;
}

void check_conservation(const ThroughputReport& r) {
  for (int k = 0; k < r.num_users(); ++k) {
    const auto ku = static_cast<std::size_t>(k);
    CHECK(r.arrived[ku] == r.delivered[ku] + r.dropped[ku] + r.queued[ku]);
    CHECK(r.delivered[ku] == r.successes.row(k).sum());
    CHECK(r.attempts[ku] >= r.delivered[ku]);
    // Every exchange finishes inside its RAW slot, so each attempt is settled.
    CHECK(r.attempts[ku] - r.delivered[ku] ==
          r.collision_failures[ku] + r.interference_failures[ku] + r.noise_failures[ku]);
  }
}

}  // namespace

TEST_CASE("group assignment validation") {
  CHECK_NOTHROW((GroupAssignment{{0, 1, 1, 0}, 2}).validate());
  CHECK_THROWS_AS((GroupAssignment{{0, 2}, 2}).validate(), ConfigError);
  CHECK_THROWS_AS((GroupAssignment{{0, 1}, 3}).validate(), ConfigError);
  CHECK_THROWS_AS((GroupAssignment{{-1}, 1}).validate(), ConfigError);
}

TEST_CASE("sinr without interferers equals the link snr") {
  ScenarioConfig cfg;
  const auto real = generate_realization(cfg, 3);
  const int ap = real.assoc[0];
  CHECK(sinr_at_ap(real, cfg, 0, {}, ap) == doctest::Approx(real.snr[0]));
  CHECK(sinr_at_ap(real, cfg, 0, {1}, ap) < real.snr[0]);
}

TEST_CASE("single saturated user approaches the analytic DCF bound") {
  ScenarioConfig cfg = saturated(testutil::small_scenario(1, 1));
  const auto real = realization_from_positions(cfg, {{490.0, 490.0}});
  REQUIRE(real.packet_duration[0] == doctest::Approx(100e-6));
  MacConfig mac;
  const auto r = run_sim(real, cfg, GroupAssignment{{0}, 1}, 400, mac, 11);
  // Mean backoff is (cw_min - 1) / 2 slots for a draw uniform on [0, cw_min).
  const double cycle = mac.difs + 0.5 * (mac.cw_min - 1) * mac.mac_slot + real.packet_duration[0] + mac.sifs +
                       mac.ack_duration;
  const double bound = cfg.raw_slot_duration / cycle;
  CHECK(r.rate(0) == doctest::Approx(bound).epsilon(0.10));
  CHECK(r.rate(0) <= bound * 1.02);
  check_conservation(r);
}

TEST_CASE("conservation, off-slot silence and determinism on random cases") {
  for (int c = 0; c < 12; ++c) {
    Rng rng(1000 + c);
    const int K = 2 + c % 9;
    const int Z = 1 << (c % 3);
    ScenarioConfig cfg = testutil::small_scenario(K, Z);
    if (c % 2) cfg.arrival_interval_mean = 2e-3;
    const auto real = generate_realization(cfg, 77 + c);
    GroupAssignment z{std::vector<int>(static_cast<std::size_t>(K)), Z};
    std::uniform_int_distribution<int> pick(0, Z - 1);
    for (auto& g : z.groups) g = pick(rng);
    const auto a = run_sim(real, cfg, z, 120, MacConfig{}, 5 + c);
    const auto b = run_sim(real, cfg, z, 120, MacConfig{}, 5 + c);
    CHECK(a.successes == b.successes);
    CHECK(a.dropped == b.dropped);
    check_conservation(a);
    for (int k = 0; k < K; ++k) {
      for (int t = 0; t < a.num_slots(); ++t) {
        if (t % Z != z.groups[static_cast<std::size_t>(k)]) REQUIRE(a.successes(k, t) == 0);
      }
    }
  }
}

TEST_CASE("stateful simulator continues where it stopped") {
  ScenarioConfig cfg = testutil::small_scenario(6, 2);
  const auto real = generate_realization(cfg, 8);
  const GroupAssignment z{{0, 1, 0, 1, 0, 1}, 2};
  Simulator sim(real, cfg, MacConfig{}, 99);
  sim.set_groups(z);
  const Eigen::MatrixXi first = sim.run(50);
  const Eigen::MatrixXi second = sim.run(70);
  const auto whole = run_sim(real, cfg, z, 120, MacConfig{}, 99);
  CHECK(first == whole.successes.leftCols(50));
  CHECK(second == whole.successes.rightCols(70));
  CHECK(sim.slots_elapsed() == 120);
}

TEST_CASE("hidden users fail by interference, contending users by collision") {
  ScenarioConfig cfg = saturated(testutil::small_scenario(2, 1));
  cfg.ap_positions = {{0.0, 0.0}};

  const auto hidden = realization_from_positions(cfg, {{-700.0, 0.0}, {700.0, 0.0}});
  REQUIRE(hidden.user_user_loss(0, 1) > cfg.sense_threshold_db);
  const auto h = run_sim(hidden, cfg, GroupAssignment{{0, 0}, 1}, 100, MacConfig{}, 3);
  CHECK(h.interference_failures[0] + h.interference_failures[1] > 0);
  CHECK(h.collision_failures[0] + h.collision_failures[1] == 0);

  const auto near = realization_from_positions(cfg, {{-100.0, 0.0}, {100.0, 0.0}});
  const auto n = run_sim(near, cfg, GroupAssignment{{0, 0}, 1}, 100, MacConfig{}, 3);
  CHECK(n.interference_failures[0] + n.interference_failures[1] == 0);
  CHECK(n.collision_failures[0] + n.collision_failures[1] > 0);
  // Carrier sensing keeps contending users far more productive than hidden ones.
  CHECK(n.rate.sum() > h.rate.sum());

  // Separating the hidden pair into different groups removes the interference.
  const auto split = run_sim(hidden, cfg, GroupAssignment{{0, 1}, 2}, 100, MacConfig{}, 3);
  CHECK(split.interference_failures[0] + split.interference_failures[1] == 0);
}

TEST_CASE("run_sim argument checks") {
  ScenarioConfig cfg = testutil::small_scenario(3, 4);
  const auto real = generate_realization(cfg, 1);
  CHECK_THROWS_AS(run_sim(real, cfg, GroupAssignment{{0, 1, 2}, 4}, 3, MacConfig{}, 1), ConfigError);
  CHECK_THROWS_AS(run_sim(real, cfg, GroupAssignment{{0, 1}, 4}, 10, MacConfig{}, 1), ConfigError);
  MacConfig bad;
  bad.cw_max = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("idle groups produce silent slots") {
  ScenarioConfig cfg = testutil::small_scenario(3, 4);
  const auto real = generate_realization(cfg, 2);
  const auto r = run_sim(real, cfg, GroupAssignment{{0, 0, 0}, 4}, 40, MacConfig{}, 2);
  for (int t = 0; t < 40; ++t) {
    if (t % 4 != 0) CHECK(r.successes.col(t).sum() == 0);
  }
  CHECK(r.rate.sum() > 0);
}
