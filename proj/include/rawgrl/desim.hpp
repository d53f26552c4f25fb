#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <vector>

#include "rawgrl/netmodel.hpp"
#include "rawgrl/rng.hpp"

namespace rawgrl {

// Group labels are 0-based: user k transmits only in RAW slots t (0-based)
// with t mod num_groups == groups[k].
struct GroupAssignment {
  std::vector<int> groups;
  int num_groups = 1;

  int num_users() const { return static_cast<int>(groups.size()); }
  // Throws ConfigError if num_groups is not a power of 2 or a label is out of range.
  void validate() const;
  bool operator==(const GroupAssignment&) const = default;
};

// DCF timing. Defaults are 802.11ah 1 MHz-class values.
struct MacConfig {
  int cw_min = 15;
  int cw_max = 1023;
  double mac_slot = 52e-6;
  double difs = 264e-6;
  double sifs = 160e-6;
  double ack_duration = 240e-6;
  int max_retries = 7;

  void validate() const;
};

struct ThroughputReport {
  Eigen::MatrixXi successes;  // K x T, packets delivered per RAW slot
  Eigen::VectorXd rate;       // K, mean packets per RAW slot over all T slots
  std::vector<long> arrived, delivered, dropped, queued;
  std::vector<long> attempts;
  std::vector<long> collision_failures;     // overlapped only by users the sender senses
  std::vector<long> interference_failures;  // overlapped by at least one hidden user
  std::vector<long> noise_failures;         // no overlap at all

  int num_users() const { return static_cast<int>(successes.rows()); }
  int num_slots() const { return static_cast<int>(successes.cols()); }
  double worst_case() const { return rate.size() ? rate.minCoeff() : 0.0; }
};

// SINR (linear) at `ap` for `tx_user`'s transmission while `concurrent` also
// transmit.
double sinr_at_ap(const NetworkRealization& real, const ScenarioConfig& cfg, int tx_user,
                  const std::vector<int>& concurrent, int ap);

// Stateful CSMA/CA simulator over RAW slots. Queues, backoff state and the
// clock persist across run() calls, so groups and the realization may be
// swapped between calls (online operation, mobility).
class Simulator {
 public:
  Simulator(NetworkRealization real, ScenarioConfig cfg, MacConfig mac, std::uint64_t seed);

  void set_groups(const GroupAssignment& z);
  // Keeps per-user queue and MAC state; only geometry-derived quantities change.
  void set_realization(NetworkRealization real);

  // Advances `slots` RAW slots; returns the K x slots success counts.
  Eigen::MatrixXi run(int slots);

  long slots_elapsed() const { return slot_index_; }
  const NetworkRealization& realization() const { return real_; }

  // Cumulative per-user counters since construction.
  const std::vector<long>& arrived() const { return arrived_; }
  const std::vector<long>& delivered() const { return delivered_; }
  const std::vector<long>& dropped() const { return dropped_; }
  std::vector<long> queued() const;
  const std::vector<long>& attempts() const { return attempts_; }
  const std::vector<long>& collision_failures() const { return collision_failures_; }
  const std::vector<long>& interference_failures() const { return interference_failures_; }
  const std::vector<long>& noise_failures() const { return noise_failures_; }

 private:
  using Nanos = std::int64_t;

  enum class Phase { Idle, WaitIdle, Difs, Backoff, Hold, Transmitting, AwaitAck };

  struct UserState {
    Phase phase = Phase::Idle;
    Nanos phase_start = 0;
    int backoff = -1;  // remaining slots; -1 means not drawn yet
    int cw = 0;
    int retries = 0;
    int queue = 0;
    int busy = 0;      // sensed exchanges in progress
    Nanos next_arrival = 0;
    Nanos tx_end = 0;
    Nanos exchange_end = 0;
    double min_sinr = 0.0;
    bool overlapped_sensed = false;
    bool overlapped_hidden = false;
    bool outcome_success = false;
  };

  void refresh_geometry();
  void absorb_arrivals(int k, Nanos until);
  void enqueue(int k);
  void run_owned_slot(int group, Nanos start, Nanos end, Eigen::MatrixXi& out, int column);
  void begin_access(int k, Nanos now);
  void freeze_backoff(int k, Nanos now);
  void start_transmissions(const std::vector<int>& starters, Nanos now);
  void end_data(int k);
  void end_exchange(int k, Nanos now, Eigen::MatrixXi& out, int column);
  void update_overlaps();
  int draw_backoff(int cw);
  Nanos to_nanos(double seconds) const;

  NetworkRealization real_;
  ScenarioConfig cfg_;
  MacConfig mac_;
  GroupAssignment groups_;

  Nanos slot_ns_, difs_ns_, sifs_ns_, ack_ns_, raw_ns_;
  std::vector<Nanos> airtime_ns_;
  Eigen::MatrixXd rx_power_mw_;  // K x A
  Eigen::MatrixXi senses_;       // K x K, senses_(i, j) = 1 iff i and j sense each other
  double noise_mw_;

  std::vector<UserState> users_;
  std::vector<int> active_tx_;
  std::vector<Rng> arrival_rng_;
  Rng backoff_rng_;
  Rng decode_rng_;
  long slot_index_ = 0;

  std::vector<long> arrived_, delivered_, dropped_, attempts_;
  std::vector<long> collision_failures_, interference_failures_, noise_failures_;
};

// One-shot simulation of T RAW slots. Throws ConfigError if T < Z or z is invalid.
ThroughputReport run_sim(const NetworkRealization& real, const ScenarioConfig& cfg, const GroupAssignment& z,
                         int slots, const MacConfig& mac, std::uint64_t seed);

}  // namespace rawgrl
