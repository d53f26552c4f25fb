#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rawgrl/desim.hpp"
#include "rawgrl/rng.hpp"

namespace rawgrl {

// Directed pairwise weights between users; W(i, i) = 0 and off-diagonal entries in [0, 1].
struct EdgeGraph {
  Eigen::MatrixXd W;

  int num_users() const { return static_cast<int>(W.rows()); }
  // Throws ConfigError if W is not square, has a nonzero diagonal or entries outside [0, 1].
  void validate() const;
};

struct SdpSolution {
  Eigen::MatrixXd X;
  double objective = 0.0;
  int sweeps = 0;
  int ipm_iterations = 0;  // nonzero when the interior-point fallback produced X
};

// Max-cut SDP relaxation: maximize sum_{i != j} w_ij (1 - X_ij) / 2 subject to
// diag(X) = 1, X psd. Solved by block coordinate ascent on a rank n+1
// factorization X = V V^T, stopping on a row change below `tol` or a duality gap
// below tol * max(1, objective). If `max_sweeps` pass without either, a primal-dual
// interior-point solve (at most `max_ipm_iterations`) takes over; when that also misses the
// gap target, ConvergenceError carries the last gap.
SdpSolution solve_maxcut_sdp(const Eigen::MatrixXd& W, double tol = 1e-6, int max_sweeps = 5000,
                             int max_ipm_iterations = 100);

// Random-hyperplane rounding; best of `trials` sign patterns by the cut value on W.
std::vector<int> gw_round(const SdpSolution& sol, const Eigen::MatrixXd& W, Rng& rng, int trials = 20);

// sum_{i != j} W_ij [z_i != z_j]
double cut_value(const Eigen::MatrixXd& W, const std::vector<int>& z);

struct BruteForceCut {
  std::vector<int> groups;
  double value = 0.0;
};

// Exhaustive search over assignments with at most Z groups, enumerated in
// restricted-growth order so that relabelings are visited once. The first
// maximizer wins. Throws ConfigError for K > 12.
BruteForceCut brute_force_maxcut(const Eigen::MatrixXd& W, int num_groups);

struct CutOptions {
  int rounding_trials = 20;
  bool exact = false;  // brute-force every bisection instead of SDP + rounding
  double sdp_tol = 1e-6;
  int max_sweeps = 5000;
};

// One bisection of the recursion tree.
struct BisectionRecord {
  int depth = 0;
  int size = 0;
  double sdp_objective = 0.0;  // 0 in exact mode
  double realized_cut = 0.0;
};

// Recursive bisection of all users into num_groups (a power of 2) groups.
// Users rounded to -1 go to the left subtree; leaves are labeled 0..Z-1 from
// left to right. Subsets with fewer than two users are passed through unsplit.
GroupAssignment do_graph_cut(int num_groups, const EdgeGraph& graph, Rng& rng, const CutOptions& opts = {},
                             std::vector<BisectionRecord>* trace = nullptr);

std::string edge_graph_to_json(const EdgeGraph& g);
EdgeGraph edge_graph_from_json(const std::string& text);  // throws ConfigError
void save_edge_graph(const EdgeGraph& g, const std::string& path);  // throws IoError
EdgeGraph load_edge_graph(const std::string& path);                 // throws IoError / ConfigError

}  // namespace rawgrl
