#include "rawgrl/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "rawgrl/errors.hpp"

namespace rawgrl {

BaselineKind parse_baseline(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "rand") return BaselineKind::Rand;
  if (lower == "unif") return BaselineKind::Unif;
  if (lower == "mcon") return BaselineKind::Mcon;
  if (lower == "mhid") return BaselineKind::Mhid;
  if (lower == "mint") return BaselineKind::Mint;
  throw ConfigError("unknown baseline '" + name + "' (expected rand, unif, mcon, mhid or mint)");
}

std::string baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::Rand: return "rand";
    case BaselineKind::Unif: return "unif";
    case BaselineKind::Mcon: return "mcon";
    case BaselineKind::Mhid: return "mhid";
    case BaselineKind::Mint: return "mint";
  }
  return "?";
}

GroupAssignment rand_group(int num_users, int num_groups, Rng& rng) {
  GroupAssignment z{std::vector<int>(static_cast<std::size_t>(num_users)), num_groups};
  z.validate();
  std::uniform_int_distribution<int> pick(0, num_groups - 1);
  for (auto& g : z.groups) g = pick(rng);
  return z;
}

GroupAssignment unif_group(const StateMatrix& S, int num_groups) {
  const auto assoc = S.associations();
  std::vector<int> order(assoc.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return assoc[static_cast<std::size_t>(a)] < assoc[static_cast<std::size_t>(b)];
  });
  GroupAssignment z{std::vector<int>(assoc.size()), num_groups};
  z.validate();
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    z.groups[static_cast<std::size_t>(order[pos])] = static_cast<int>((pos + 1) % static_cast<std::size_t>(num_groups));
  }
  return z;
}

EdgeGraph fixed_rule_weights(BaselineKind kind, const StateMatrix& S, const ParamStore& params,
                             const ModelConfig& model, const ScenarioConfig& scenario) {
  const int K = S.num_users();
  EdgeGraph g{Eigen::MatrixXd::Zero(K, K)};
  switch (kind) {
    case BaselineKind::Mcon:
    case BaselineKind::Mhid: {
      const auto pre = preprocess(params, model, S);
      for (int i = 0; i < K; ++i) {
        for (int j = 0; j < K; ++j) {
          if (i != j) g.W(i, j) = kind == BaselineKind::Mcon ? pre.O(i, j) : 1.0 - pre.O(i, j);
        }
      }
      return g;
    }
    case BaselineKind::Mint: {
      const auto assoc = S.associations();
      const double smax = scenario.sense_threshold_db;
      auto rx_mw = [&](int user, int ap) {
        const double loss_db = (S.values(ap, user) + 1.0) * smax;
        return std::pow(10.0, (scenario.tx_power_dbm - loss_db) / 10.0);
      };
      const double noise_mw = std::pow(10.0, scenario.noise_dbm / 10.0);
      for (int i = 0; i < K; ++i) {
        for (int j = 0; j < K; ++j) {
          if (i == j) continue;
          const int ap = assoc[static_cast<std::size_t>(j)];
          g.W(i, j) = rx_mw(j, ap) / (noise_mw + rx_mw(i, ap));
        }
      }
      const double peak = g.W.maxCoeff();
      if (peak > 0) g.W /= peak;
      return g;
    }
    case BaselineKind::Rand:
    case BaselineKind::Unif:
      break;
  }
  throw ConfigError(baseline_name(kind) + " is not a graph max-cut baseline");
}

}  // namespace rawgrl
