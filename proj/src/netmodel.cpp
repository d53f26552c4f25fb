#include "rawgrl/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rawgrl/errors.hpp"

namespace rawgrl {

namespace {

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Coincident devices would put the Friis model at d = 0; pairwise distances are
// floored at 10 cm, well inside the near field where the model is moot anyway.
constexpr double kMinPairDistance = 0.1;

bool inside(const Point& p, double half_width) {
  return p.x > -half_width && p.x < half_width && p.y > -half_width && p.y < half_width;
}

bool same_bits(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data(), a.data() + a.size(), b.data());
}

}  // namespace

void ScenarioConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(std::isfinite(area_half_width) && area_half_width > 0, "area_half_width must be > 0");
  require(!ap_positions.empty(), "at least one AP is required");
  require(num_users >= 1, "num_users must be >= 1");
  require(std::isfinite(carrier_freq) && carrier_freq > 0, "carrier_freq must be > 0");
  require(std::isfinite(bandwidth) && bandwidth > 0, "bandwidth must be > 0");
  require(std::isfinite(tx_power_dbm) && std::isfinite(noise_dbm), "powers must be finite");
  require(std::isfinite(sense_threshold_db) && sense_threshold_db > 0, "sense_threshold_db must be > 0");
  require(packet_bits >= 1, "packet_bits must be >= 1");
  require(max_error > 0 && max_error < 1, "max_error must lie in (0, 1)");
  require(queue_capacity >= 1, "queue_capacity must be >= 1");
  require(std::isfinite(arrival_interval_mean) && arrival_interval_mean > 0,
          "arrival_interval_mean must be > 0");
  require(std::isfinite(raw_slot_duration) && raw_slot_duration > 0, "raw_slot_duration must be > 0");
  require(num_groups >= 1 && (num_groups & (num_groups - 1)) == 0, "num_groups must be a power of 2");
  require(std::isfinite(mobility_speed) && mobility_speed >= 0, "mobility_speed must be >= 0");
}

bool identical(const NetworkRealization& a, const NetworkRealization& b) {
  auto same_points = [](const std::vector<Point>& p, const std::vector<Point>& q) {
    return std::equal(p.begin(), p.end(), q.begin(), q.end(),
                      [](const Point& u, const Point& v) { return u.x == v.x && u.y == v.y; });
  };
  return same_points(a.user_positions, b.user_positions) && same_points(a.ap_positions, b.ap_positions) &&
         a.headings == b.headings && same_bits(a.user_ap_loss, b.user_ap_loss) &&
         same_bits(a.user_user_loss, b.user_user_loss) && a.assoc == b.assoc &&
         a.packet_duration == b.packet_duration && a.snr == b.snr;
}

std::vector<int> StateMatrix::associations() const {
  std::vector<int> out(static_cast<std::size_t>(num_users()));
  for (int k = 0; k < num_users(); ++k) {
    int best = 0;
    for (int a = 1; a < num_aps(); ++a) {
      if (values(a, k) < values(best, k)) best = a;
    }
    out[static_cast<std::size_t>(k)] = best;
  }
  return out;
}

double friis_path_loss(double d, double freq) {
  if (!(d > 0) || !(freq > 0)) throw std::domain_error("friis_path_loss: distance and frequency must be > 0");
  return 20.0 * std::log10(4.0 * std::numbers::pi * d * freq / kSpeedOfLight);
}

int associate(std::span<const double> loss_row) {
  if (loss_row.empty()) throw std::invalid_argument("associate: empty loss row");
  return static_cast<int>(std::min_element(loss_row.begin(), loss_row.end()) - loss_row.begin());
}

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double decode_error_prob(double snr, double duration, int bits, double bandwidth) {
  const double blocklength = duration * bandwidth;
  const double dispersion = 1.0 - 1.0 / ((1.0 + snr) * (1.0 + snr));
  if (!(dispersion > 0)) return 1.0;
  const double numer = -bits * std::numbers::ln2 + blocklength * std::log1p(snr);
  return q_function(numer / std::sqrt(blocklength * dispersion));
}

double snr_from_loss(double loss_db, const ScenarioConfig& cfg) {
  return std::pow(10.0, (cfg.tx_power_dbm - loss_db - cfg.noise_dbm) / 10.0);
}

const std::vector<double>& mcs_duration_ladder() {
  static const std::vector<double> ladder = [] {
    constexpr int kSteps = 16;
    constexpr double kShortest = 100e-6;
    constexpr double kLongest = 8e-3;
    std::vector<double> v(kSteps);
    const double ratio = std::pow(kLongest / kShortest, 1.0 / (kSteps - 1));
    for (int i = 0; i < kSteps; ++i) v[static_cast<std::size_t>(i)] = kShortest * std::pow(ratio, i);
    v.back() = kLongest;
    return v;
  }();
  return ladder;
}

double select_packet_duration(double loss_to_assoc, const ScenarioConfig& cfg) {
  const double snr = snr_from_loss(loss_to_assoc, cfg);
  for (double d : mcs_duration_ladder()) {
    if (decode_error_prob(snr, d, cfg.packet_bits, cfg.bandwidth) <= cfg.max_error) return d;
  }
  throw ConfigError("user unservable: no MCS duration meets max_error at loss " +
                    std::to_string(loss_to_assoc) + " dB");
}

NetworkRealization realization_from_positions(const ScenarioConfig& cfg, std::vector<Point> users,
                                              std::vector<double> headings) {
  const int K = static_cast<int>(users.size());
  const int A = cfg.num_aps();
  NetworkRealization r;
  r.user_positions = std::move(users);
  r.ap_positions = cfg.ap_positions;
  r.headings = headings.empty() ? std::vector<double>(static_cast<std::size_t>(K), 0.0) : std::move(headings);
  r.user_ap_loss.resize(K, A);
  r.user_user_loss = Eigen::MatrixXd::Zero(K, K);
  r.assoc.resize(static_cast<std::size_t>(K));
  r.packet_duration.resize(static_cast<std::size_t>(K));
  r.snr.resize(static_cast<std::size_t>(K));

  for (int k = 0; k < K; ++k) {
    const auto& pk = r.user_positions[static_cast<std::size_t>(k)];
    for (int a = 0; a < A; ++a) {
      const double d = std::max(kMinPairDistance, distance(pk, r.ap_positions[static_cast<std::size_t>(a)]));
      r.user_ap_loss(k, a) = friis_path_loss(d, cfg.carrier_freq);
    }
    for (int j = k + 1; j < K; ++j) {
      const double d = std::max(kMinPairDistance, distance(pk, r.user_positions[static_cast<std::size_t>(j)]));
      r.user_user_loss(k, j) = r.user_user_loss(j, k) = friis_path_loss(d, cfg.carrier_freq);
    }
    const Eigen::VectorXd row = r.user_ap_loss.row(k).transpose();
    const int a = associate(std::span<const double>(row.data(), static_cast<std::size_t>(A)));
    const auto ku = static_cast<std::size_t>(k);
    r.assoc[ku] = a;
    r.snr[ku] = snr_from_loss(r.user_ap_loss(k, a), cfg);
    r.packet_duration[ku] = select_packet_duration(r.user_ap_loss(k, a), cfg);
  }
  return r;
}

NetworkRealization generate_realization(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  std::uniform_real_distribution<double> coord(-cfg.area_half_width, cfg.area_half_width);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::vector<Point> users(static_cast<std::size_t>(cfg.num_users));
  std::vector<double> headings(users.size());
  for (std::size_t k = 0; k < users.size(); ++k) {
    for (;;) {
      const double x = coord(rng);
      const double y = coord(rng);
      users[k] = {x, y};
      const bool on_ap = std::any_of(cfg.ap_positions.begin(), cfg.ap_positions.end(),
                                     [&](const Point& ap) { return ap.x == x && ap.y == y; });
      if (!on_ap) break;
    }
    headings[k] = angle(rng);
  }
  return realization_from_positions(cfg, std::move(users), std::move(headings));
}

StateMatrix observe_states(const NetworkRealization& real, const ScenarioConfig& cfg) {
  const double smax = cfg.sense_threshold_db;
  StateMatrix s;
  s.values.resize(real.num_aps(), real.num_users());
  for (int k = 0; k < real.num_users(); ++k) {
    for (int a = 0; a < real.num_aps(); ++a) {
      const double raw = real.user_ap_loss(k, a);
      const double measured = raw <= smax ? raw : 2.0 * smax;
      s.values(a, k) = measured / smax - 1.0;
    }
  }
  return s;
}

SensingMatrix sensing_matrix(const NetworkRealization& real, const ScenarioConfig& cfg) {
  const int K = real.num_users();
  SensingMatrix o{Eigen::MatrixXd::Zero(K, K)};
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      if (i != j && real.user_user_loss(i, j) <= cfg.sense_threshold_db) o.sensed(i, j) = 1.0;
    }
  }
  return o;
}

NetworkRealization step_mobility(const NetworkRealization& real, const ScenarioConfig& cfg, double dt,
                                 double speed, Rng& rng) {
  if (speed < 0) throw std::invalid_argument("step_mobility: speed must be >= 0");
  if (speed == 0 || dt == 0) return real;

  const double h = cfg.area_half_width;
  const double step = speed * dt;
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::vector<Point> users = real.user_positions;
  std::vector<double> headings = real.headings;

  for (std::size_t k = 0; k < users.size(); ++k) {
    const Point p = users[k];
    auto advance = [&](double heading) { return Point{p.x + step * std::cos(heading), p.y + step * std::sin(heading)}; };
    Point next = advance(headings[k]);
    if (!inside(next, h)) {
      // Rejection sampling gives a heading uniform over the directions that
      // keep the user strictly inside.
      bool placed = false;
      for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
        const double theta = angle(rng);
        const Point candidate = advance(theta);
        if (inside(candidate, h)) {
          headings[k] = theta;
          next = candidate;
          placed = true;
        }
      }
      if (!placed) {
        const double to_center = std::atan2(-p.y, -p.x);
        headings[k] = to_center;
        next = advance(to_center);
        next.x = std::clamp(next.x, -h * (1 - 1e-9), h * (1 - 1e-9));
        next.y = std::clamp(next.y, -h * (1 - 1e-9), h * (1 - 1e-9));
      }
    }
    users[k] = next;
  }
  return realization_from_positions(cfg, std::move(users), std::move(headings));
}

}  // namespace rawgrl
