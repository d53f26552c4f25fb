#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "rawgrl/rng.hpp"

namespace rawgrl {

inline constexpr double kSpeedOfLight = 299792458.0;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Static description of the simulated deployment. Units are noted per field;
// all powers are in dBm and all losses are positive attenuation in dB.
struct ScenarioConfig {
  double area_half_width = 1000.0;  // meters; area is [-h, h]^2
  std::vector<Point> ap_positions{{500.0, 500.0}, {-500.0, 500.0}, {500.0, -500.0}, {-500.0, -500.0}};
  int num_users = 20;
  double carrier_freq = 1e9;        // Hz
  double bandwidth = 1e6;           // Hz
  double tx_power_dbm = 0.0;
  double noise_dbm = -94.0;         // N0 * B
  double sense_threshold_db = 95.0;
  int packet_bits = 800;
  double max_error = 1e-5;
  int queue_capacity = 5;
  double arrival_interval_mean = 0.02;  // seconds
  double raw_slot_duration = 0.01;      // seconds
  int num_groups = 4;
  double mobility_speed = 0.0;          // m/s

  int num_aps() const { return static_cast<int>(ap_positions.size()); }

  // Throws ConfigError on the first violated invariant.
  void validate() const;
};

// Ground truth of one network instance. Matrices are indexed [user, ap] and
// [user, user]; user and AP indices are 0-based.
struct NetworkRealization {
  std::vector<Point> user_positions;
  std::vector<Point> ap_positions;
  std::vector<double> headings;      // radians, used by mobility
  Eigen::MatrixXd user_ap_loss;      // K x A, dB
  Eigen::MatrixXd user_user_loss;    // K x K, dB, zero diagonal
  std::vector<int> assoc;            // K
  std::vector<double> packet_duration;  // K, seconds
  std::vector<double> snr;           // K, linear

  int num_users() const { return static_cast<int>(user_positions.size()); }
  int num_aps() const { return static_cast<int>(ap_positions.size()); }
};

// Exact (bitwise) equality of every field.
bool identical(const NetworkRealization& a, const NetworkRealization& b);

// Normalized, censored A x K path-loss observations. values(a, k) in [-1, 1].
struct StateMatrix {
  Eigen::MatrixXd values;

  int num_aps() const { return static_cast<int>(values.rows()); }
  int num_users() const { return static_cast<int>(values.cols()); }
  // Column-wise argmin with lowest-index tie-break.
  std::vector<int> associations() const;
};

// Binary K x K: sensed(i, j) = 1 iff user j can sense user i. Zero diagonal.
struct SensingMatrix {
  Eigen::MatrixXd sensed;
};

double friis_path_loss(double distance, double freq);

// Index of the minimum entry; ties resolve to the lowest index.
int associate(std::span<const double> loss_row);

double q_function(double x);

// Finite-blocklength decoding error probability for SNR/SINR `snr` (linear),
// airtime `duration` (s), `bits` payload and `bandwidth` (Hz).
double decode_error_prob(double snr, double duration, int bits, double bandwidth);

// Linear SNR for a link with the given loss.
double snr_from_loss(double loss_db, const ScenarioConfig& cfg);

// The discrete airtime ladder packet durations are chosen from (ascending).
const std::vector<double>& mcs_duration_ladder();

// Smallest ladder duration meeting max_error for a user whose loss to its
// associated AP is `loss_to_assoc`. Throws ConfigError("user unservable").
double select_packet_duration(double loss_to_assoc, const ScenarioConfig& cfg);

NetworkRealization generate_realization(const ScenarioConfig& cfg, std::uint64_t seed);

// Builds a realization for fixed user positions (used by tests and mobility).
NetworkRealization realization_from_positions(const ScenarioConfig& cfg, std::vector<Point> users,
                                              std::vector<double> headings = {});

StateMatrix observe_states(const NetworkRealization& real, const ScenarioConfig& cfg);

SensingMatrix sensing_matrix(const NetworkRealization& real, const ScenarioConfig& cfg);

NetworkRealization step_mobility(const NetworkRealization& real, const ScenarioConfig& cfg, double dt,
                                 double speed, Rng& rng);

}  // namespace rawgrl
