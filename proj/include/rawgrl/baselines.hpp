#pragma once

#include <string>

#include "rawgrl/actorcritic.hpp"
#include "rawgrl/desim.hpp"
#include "rawgrl/maxcut.hpp"

namespace rawgrl {

enum class BaselineKind { Rand, Unif, Mcon, Mhid, Mint };

BaselineKind parse_baseline(const std::string& name);  // case-insensitive; throws ConfigError
std::string baseline_name(BaselineKind kind);

// Each user independently uniform over the Z groups.
GroupAssignment rand_group(int num_users, int num_groups, Rng& rng);

// Users stably sorted by associated AP (ties by user index); the user at
// 1-based sorted position i gets group i mod Z.
GroupAssignment unif_group(const StateMatrix& S, int num_groups);

// MCON: W = O, MHID: W = 1 - O, MINT: pairwise SINR on linear powers scaled by
// its instance maximum. Throws ConfigError for RAND / UNIF.
EdgeGraph fixed_rule_weights(BaselineKind kind, const StateMatrix& S, const ParamStore& params,
                             const ModelConfig& model, const ScenarioConfig& scenario);

}  // namespace rawgrl
