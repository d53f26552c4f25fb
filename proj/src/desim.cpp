#include "rawgrl/desim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rawgrl/errors.hpp"

namespace rawgrl {

namespace {

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

}  // namespace

void GroupAssignment::validate() const {
  if (num_groups < 1 || (num_groups & (num_groups - 1)) != 0) {
    throw ConfigError("number of groups must be a power of 2, got " + std::to_string(num_groups));
  }
  for (int g : groups) {
    if (g < 0 || g >= num_groups) {
      throw ConfigError("group label " + std::to_string(g) + " outside [0, " + std::to_string(num_groups) + ")");
    }
  }
}

void MacConfig::validate() const {
  if (cw_min < 1 || cw_max < cw_min) throw ConfigError("require 1 <= cw_min <= cw_max");
  if (!(mac_slot > 0 && difs > 0 && sifs > 0 && ack_duration > 0)) throw ConfigError("MAC durations must be > 0");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

double sinr_at_ap(const NetworkRealization& real, const ScenarioConfig& cfg, int tx_user,
                  const std::vector<int>& concurrent, int ap) {
  const double signal = dbm_to_mw(cfg.tx_power_dbm - real.user_ap_loss(tx_user, ap));
  double denom = dbm_to_mw(cfg.noise_dbm);
  for (int i : concurrent) {
    if (i != tx_user) denom += dbm_to_mw(cfg.tx_power_dbm - real.user_ap_loss(i, ap));
  }
  return signal / denom;
}

Simulator::Simulator(NetworkRealization real, ScenarioConfig cfg, MacConfig mac, std::uint64_t seed)
    : real_(std::move(real)),
      cfg_(std::move(cfg)),
      mac_(mac),
      backoff_rng_(make_rng(seed, Stream::Backoff)),
      decode_rng_(make_rng(seed, Stream::Decode)) {
  cfg_.validate();
  mac_.validate();
  const int K = real_.num_users();
  const auto Ku = static_cast<std::size_t>(K);
  slot_ns_ = to_nanos(mac_.mac_slot);
  difs_ns_ = to_nanos(mac_.difs);
  sifs_ns_ = to_nanos(mac_.sifs);
  ack_ns_ = to_nanos(mac_.ack_duration);
  raw_ns_ = to_nanos(cfg_.raw_slot_duration);

  groups_.groups.assign(Ku, 0);
  groups_.num_groups = 1;
  users_.resize(Ku);
  arrived_.assign(Ku, 0);
  delivered_.assign(Ku, 0);
  dropped_.assign(Ku, 0);
  attempts_.assign(Ku, 0);
  collision_failures_.assign(Ku, 0);
  interference_failures_.assign(Ku, 0);
  noise_failures_.assign(Ku, 0);

  std::exponential_distribution<double> gap(1.0 / cfg_.arrival_interval_mean);
  for (int k = 0; k < K; ++k) {
    arrival_rng_.push_back(make_rng(seed, Stream::Arrivals, static_cast<std::uint64_t>(k)));
    auto& u = users_[static_cast<std::size_t>(k)];
    u.cw = mac_.cw_min;
    u.next_arrival = std::max<Nanos>(1, to_nanos(gap(arrival_rng_.back())));
  }
  refresh_geometry();
}

Simulator::Nanos Simulator::to_nanos(double seconds) const { return std::llround(seconds * 1e9); }

void Simulator::refresh_geometry() {
  const int K = real_.num_users();
  const int A = real_.num_aps();
  airtime_ns_.resize(static_cast<std::size_t>(K));
  rx_power_mw_.resize(K, A);
  senses_ = Eigen::MatrixXi::Zero(K, K);
  noise_mw_ = dbm_to_mw(cfg_.noise_dbm);
  for (int k = 0; k < K; ++k) {
    airtime_ns_[static_cast<std::size_t>(k)] =
        static_cast<Nanos>(std::ceil(real_.packet_duration[static_cast<std::size_t>(k)] * 1e9 - 1e-6));
    for (int a = 0; a < A; ++a) rx_power_mw_(k, a) = dbm_to_mw(cfg_.tx_power_dbm - real_.user_ap_loss(k, a));
    for (int j = 0; j < K; ++j) {
      if (j != k && real_.user_user_loss(k, j) <= cfg_.sense_threshold_db) senses_(k, j) = 1;
    }
  }
}

void Simulator::set_groups(const GroupAssignment& z) {
  z.validate();
  if (z.num_users() != real_.num_users()) throw ConfigError("group assignment size does not match user count");
  groups_ = z;
}

void Simulator::set_realization(NetworkRealization real) {
  if (real.num_users() != real_.num_users()) throw ConfigError("realization user count changed");
  real_ = std::move(real);
  refresh_geometry();
}

std::vector<long> Simulator::queued() const {
  std::vector<long> q;
  q.reserve(users_.size());
  for (const auto& u : users_) q.push_back(u.queue);
  return q;
}

int Simulator::draw_backoff(int cw) { return std::uniform_int_distribution<int>(0, cw - 1)(backoff_rng_); }

void Simulator::enqueue(int k) {
  auto& u = users_[static_cast<std::size_t>(k)];
  ++arrived_[static_cast<std::size_t>(k)];
  if (u.queue < cfg_.queue_capacity) {
    ++u.queue;
    return;
  }
  // Full queue: the oldest packet is discarded. The head-of-line packet cannot
  // be discarded while on air, so then the next-oldest goes (or the arrival
  // itself when the queue holds a single packet).
  ++dropped_[static_cast<std::size_t>(k)];
  const bool on_air = u.phase == Phase::Transmitting || u.phase == Phase::AwaitAck;
  if (!on_air) {
    u.retries = 0;
    u.cw = mac_.cw_min;
  }
}

void Simulator::absorb_arrivals(int k, Nanos until) {
  auto& u = users_[static_cast<std::size_t>(k)];
  std::exponential_distribution<double> gap(1.0 / cfg_.arrival_interval_mean);
  while (u.next_arrival < until) {
    enqueue(k);
    u.next_arrival += std::max<Nanos>(1, to_nanos(gap(arrival_rng_[static_cast<std::size_t>(k)])));
  }
}

void Simulator::begin_access(int k, Nanos now) {
  auto& u = users_[static_cast<std::size_t>(k)];
  if (u.queue == 0) {
    u.phase = Phase::Idle;
  } else if (u.busy > 0) {
    u.phase = Phase::WaitIdle;
  } else {
    u.phase = Phase::Difs;
    u.phase_start = now;
  }
}

void Simulator::freeze_backoff(int k, Nanos now) {
  auto& u = users_[static_cast<std::size_t>(k)];
  if (u.phase == Phase::Backoff) {
    const auto consumed = static_cast<int>((now - u.phase_start) / slot_ns_);
    u.backoff = std::max(0, u.backoff - consumed);
  }
}

void Simulator::update_overlaps() {
  for (int k : active_tx_) {
    auto& u = users_[static_cast<std::size_t>(k)];
    const int ap = real_.assoc[static_cast<std::size_t>(k)];
    double interference = 0.0;
    for (int i : active_tx_) {
      if (i == k) continue;
      interference += rx_power_mw_(i, ap);
      if (senses_(k, i)) {
        u.overlapped_sensed = true;
      } else {
        u.overlapped_hidden = true;
      }
    }
    u.min_sinr = std::min(u.min_sinr, rx_power_mw_(k, ap) / (noise_mw_ + interference));
  }
}

void Simulator::start_transmissions(const std::vector<int>& starters, Nanos now) {
  const int K = real_.num_users();
  for (int k : starters) {
    auto& u = users_[static_cast<std::size_t>(k)];
    u.phase = Phase::Transmitting;
    u.tx_end = now + airtime_ns_[static_cast<std::size_t>(k)];
    u.exchange_end = u.tx_end + sifs_ns_ + ack_ns_;
    u.min_sinr = std::numeric_limits<double>::infinity();
    u.overlapped_sensed = u.overlapped_hidden = false;
    u.backoff = -1;
    ++attempts_[static_cast<std::size_t>(k)];
    active_tx_.push_back(k);
  }
  const int owned = static_cast<int>(slot_index_ % groups_.num_groups);
  for (int k : starters) {
    for (int j = 0; j < K; ++j) {
      if (j == k || !senses_(k, j) || groups_.groups[static_cast<std::size_t>(j)] != owned) continue;
      auto& v = users_[static_cast<std::size_t>(j)];
      if (v.busy++ > 0) continue;
      if (v.phase == Phase::Backoff) {
        freeze_backoff(j, now);
        v.phase = Phase::WaitIdle;
      } else if (v.phase == Phase::Difs) {
        v.phase = Phase::WaitIdle;
      }
    }
  }
  update_overlaps();
}

void Simulator::end_data(int k) {
  auto& u = users_[static_cast<std::size_t>(k)];
  const double err = decode_error_prob(u.min_sinr, real_.packet_duration[static_cast<std::size_t>(k)],
                                       cfg_.packet_bits, cfg_.bandwidth);
  u.outcome_success = std::uniform_real_distribution<double>(0.0, 1.0)(decode_rng_) >= err;
  std::erase(active_tx_, k);
  u.phase = Phase::AwaitAck;
}

void Simulator::end_exchange(int k, Nanos now, Eigen::MatrixXi& out, int column) {
  const int K = real_.num_users();
  const auto ku = static_cast<std::size_t>(k);
  const int owned = static_cast<int>(slot_index_ % groups_.num_groups);
  for (int j = 0; j < K; ++j) {
    if (j == k || !senses_(k, j) || groups_.groups[static_cast<std::size_t>(j)] != owned) continue;
    auto& v = users_[static_cast<std::size_t>(j)];
    if (--v.busy == 0 && v.phase == Phase::WaitIdle) begin_access(j, now);
  }

  auto& u = users_[ku];
  if (u.outcome_success) {
    --u.queue;
    ++delivered_[ku];
    ++out(k, column);
    u.retries = 0;
    u.cw = mac_.cw_min;
  } else {
    if (u.overlapped_hidden) {
      ++interference_failures_[ku];
    } else if (u.overlapped_sensed) {
      ++collision_failures_[ku];
    } else {
      ++noise_failures_[ku];
    }
    if (++u.retries > mac_.max_retries) {
      --u.queue;
      ++dropped_[ku];
      u.retries = 0;
      u.cw = mac_.cw_min;
    } else {
      u.cw = std::min(2 * u.cw + 1, mac_.cw_max);
    }
  }
  u.backoff = draw_backoff(u.cw);
  begin_access(k, now);
}

void Simulator::run_owned_slot(int group, Nanos start, Nanos end, Eigen::MatrixXi& out, int column) {
  const int K = real_.num_users();
  std::vector<int> members;
  for (int k = 0; k < K; ++k) {
    if (groups_.groups[static_cast<std::size_t>(k)] == group) members.push_back(k);
  }
  for (int k : members) {
    absorb_arrivals(k, start);
    auto& u = users_[static_cast<std::size_t>(k)];
    u.busy = 0;
    begin_access(k, start);
  }
  active_tx_.clear();

  std::vector<int> ready;
  for (;;) {
    constexpr Nanos kNever = std::numeric_limits<Nanos>::max();
    Nanos now = kNever;
    for (int k : members) {
      const auto& u = users_[static_cast<std::size_t>(k)];
      if (u.next_arrival < end) now = std::min(now, u.next_arrival);
      switch (u.phase) {
        case Phase::Difs:
          if (u.phase_start + difs_ns_ < end) now = std::min(now, u.phase_start + difs_ns_);
          break;
        case Phase::Backoff:
          if (u.phase_start + u.backoff * slot_ns_ < end) now = std::min(now, u.phase_start + u.backoff * slot_ns_);
          break;
        case Phase::Transmitting:
          now = std::min(now, u.tx_end);
          break;
        case Phase::AwaitAck:
          now = std::min(now, u.exchange_end);
          break;
        default:
          break;
      }
    }
    if (now == kNever) break;

    for (int k : members) {
      const auto& u = users_[static_cast<std::size_t>(k)];
      if (u.phase == Phase::Transmitting && u.tx_end == now) end_data(k);
    }
    for (int k : members) {
      const auto& u = users_[static_cast<std::size_t>(k)];
      if (u.phase == Phase::AwaitAck && u.exchange_end == now) end_exchange(k, now, out, column);
    }
    for (int k : members) {
      auto& u = users_[static_cast<std::size_t>(k)];
      if (u.next_arrival == now) {
        absorb_arrivals(k, now + 1);
        if (u.phase == Phase::Idle) begin_access(k, now);
      }
    }
    ready.clear();
    for (int k : members) {
      auto& u = users_[static_cast<std::size_t>(k)];
      if (u.phase == Phase::Difs && u.phase_start + difs_ns_ == now) {
        if (u.backoff < 0) u.backoff = draw_backoff(u.cw);
        u.phase = Phase::Backoff;
        u.phase_start = now;
      }
      if (u.phase == Phase::Backoff && u.phase_start + u.backoff * slot_ns_ == now) {
        u.backoff = 0;
        const Nanos finish = now + airtime_ns_[static_cast<std::size_t>(k)] + sifs_ns_ + ack_ns_;
        if (finish <= end) {
          ready.push_back(k);
        } else {
          u.phase = Phase::Hold;
        }
      }
    }
    if (!ready.empty()) start_transmissions(ready, now);
  }

  for (int k : members) {
    freeze_backoff(k, end);
    users_[static_cast<std::size_t>(k)].phase = Phase::Idle;
    users_[static_cast<std::size_t>(k)].busy = 0;
  }
}

Eigen::MatrixXi Simulator::run(int slots) {
  const int K = real_.num_users();
  Eigen::MatrixXi out = Eigen::MatrixXi::Zero(K, slots);
  for (int s = 0; s < slots; ++s, ++slot_index_) {
    const Nanos start = slot_index_ * raw_ns_;
    const Nanos end = start + raw_ns_;
    const int group = static_cast<int>(slot_index_ % groups_.num_groups);
    for (int k = 0; k < K; ++k) {
      if (groups_.groups[static_cast<std::size_t>(k)] != group) absorb_arrivals(k, end);
    }
    run_owned_slot(group, start, end, out, s);
    for (int k = 0; k < K; ++k) absorb_arrivals(k, end);
  }
  return out;
}

ThroughputReport run_sim(const NetworkRealization& real, const ScenarioConfig& cfg, const GroupAssignment& z,
                         int slots, const MacConfig& mac, std::uint64_t seed) {
  z.validate();
  if (slots < z.num_groups) {
    throw ConfigError("simulation needs at least as many slots as groups (T=" + std::to_string(slots) +
                      ", Z=" + std::to_string(z.num_groups) + ")");
  }
  Simulator sim(real, cfg, mac, seed);
  sim.set_groups(z);
  ThroughputReport rep;
  rep.successes = sim.run(slots);
  rep.rate = rep.successes.cast<double>().rowwise().sum() / static_cast<double>(slots);
  rep.arrived = sim.arrived();
  rep.delivered = sim.delivered();
  rep.dropped = sim.dropped();
  rep.queued = sim.queued();
  rep.attempts = sim.attempts();
  rep.collision_failures = sim.collision_failures();
  rep.interference_failures = sim.interference_failures();
  rep.noise_failures = sim.noise_failures();
  return rep;
}

}  // namespace rawgrl
