#include "rawgrl/maxcut.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "rawgrl/errors.hpp"

namespace rawgrl {

namespace {

bool is_power_of_two(int z) { return z >= 1 && (z & (z - 1)) == 0; }

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& W) {
  Eigen::MatrixXd s = 0.5 * (W + W.transpose());
  s.diagonal().setZero();
  return s;
}

std::vector<int> bisect_exact(const Eigen::MatrixXd& W) {
  const auto best = brute_force_maxcut(W, 2);
  std::vector<int> y(best.groups.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = best.groups[i] == 0 ? -1 : 1;
  return y;
}

void split(const Eigen::MatrixXd& W, const std::vector<int>& members, int groups, int base, int depth, Rng& rng,
           const CutOptions& opts, std::vector<int>& labels, std::vector<BisectionRecord>* trace) {
  if (groups == 1 || members.size() < 2) {
    for (int k : members) labels[static_cast<std::size_t>(k)] = base;
    return;
  }
  const auto n = static_cast<Eigen::Index>(members.size());
  Eigen::MatrixXd sub(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) sub(i, j) = W(members[static_cast<std::size_t>(i)], members[static_cast<std::size_t>(j)]);
  }

  BisectionRecord rec{depth, static_cast<int>(n), 0.0, 0.0};
  std::vector<int> y;
  if (opts.exact) {
    y = bisect_exact(sub);
  } else {
    const auto sol = solve_maxcut_sdp(sub, opts.sdp_tol, opts.max_sweeps);
    rec.sdp_objective = sol.objective;
    y = gw_round(sol, sub, rng, opts.rounding_trials);
  }
  rec.realized_cut = cut_value(sub, y);
  if (trace) trace->push_back(rec);

  std::vector<int> left, right;
  for (std::size_t i = 0; i < members.size(); ++i) (y[i] < 0 ? left : right).push_back(members[i]);
  const int half = groups / 2;
  split(W, left, half, base, depth + 1, rng, opts, labels, trace);
  split(W, right, half, base + half, depth + 1, rng, opts, labels, trace);
}

// Positive definite test plus Cholesky reuse for the step-length search.
bool positive_definite(const Eigen::MatrixXd& M) {
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  return llt.info() == Eigen::Success;
}

double step_to_boundary(const Eigen::MatrixXd& M, const Eigen::MatrixXd& dM) {
  double alpha = 1.0;
  while (alpha > 1e-12 && !positive_definite(M + alpha * dM)) alpha *= 0.8;
  return alpha < 1.0 ? 0.95 * alpha : alpha;
}

struct IpmResult {
  Eigen::MatrixXd X;
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Primal-dual path following for min <w, X> s.t. diag(X) = 1, X psd, with dual
// max sum(y) s.t. Z = w - diag(y) psd. X = I and a diagonally dominant Z start strictly
// feasible; the Newton system reduces to (X o Z^-1) dy = 1 - mu diag(Z^-1).
IpmResult interior_point(const Eigen::MatrixXd& w, double tol, int max_iter) {
  const Eigen::Index n = w.rows();
  IpmResult r;
  Eigen::MatrixXd X = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd y = -(w.cwiseAbs().rowwise().sum().array() + 1.0).matrix();
  Eigen::MatrixXd Z = w;
  Z.diagonal() -= y;
  const double total = 0.5 * w.sum();
  for (int it = 1; it <= max_iter; ++it) {
    // <w, X> - sum(y) = <Z, X> because diag(X) = 1; this form cannot go negative by cancellation.
    const double gap = (Z.array() * X.array()).sum();
    const double value = total - 0.5 * (w.array() * X.array()).sum();
    r.gap = 0.5 * gap;
    if (r.gap <= tol * std::max(1.0, value)) {
      r.converged = true;
      break;
    }
    r.iterations = it;
    const double mu = 0.25 * gap / static_cast<double>(n);
    const Eigen::MatrixXd Zinv = Z.llt().solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd schur = X.cwiseProduct(Zinv);
    const Eigen::VectorXd rhs = Eigen::VectorXd::Ones(n) - mu * Zinv.diagonal();
    const Eigen::VectorXd dy = schur.ldlt().solve(rhs);
    Eigen::MatrixXd dX = mu * Zinv - X + X * dy.asDiagonal() * Zinv;
    dX = 0.5 * (dX + dX.transpose()).eval();
    dX.diagonal().setZero();
    Eigen::MatrixXd dZ = Eigen::MatrixXd::Zero(n, n);
    dZ.diagonal() = -dy;
    const double ap = step_to_boundary(X, dX);
    const double ad = step_to_boundary(Z, dZ);
    X += ap * dX;
    y += ad * dy;
    Z.diagonal() -= ad * dy;
  }
  if (!r.converged) {
    const double value = total - 0.5 * (w.array() * X.array()).sum();
    r.gap = 0.5 * (Z.array() * X.array()).sum();
    r.converged = r.gap <= tol * std::max(1.0, value);
  }
  r.X = X;
  return r;
}

}  // namespace

void EdgeGraph::validate() const {
  if (W.rows() != W.cols()) throw ConfigError("edge graph must be square");
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
      const double w = W(i, j);
      if (i == j ? w != 0.0 : !(w >= 0.0 && w <= 1.0)) {
        throw ConfigError("edge weight W(" + std::to_string(i) + "," + std::to_string(j) + ") = " +
                          std::to_string(w) + " violates 0 diagonal / [0,1] off-diagonal");
      }
    }
  }
}

SdpSolution solve_maxcut_sdp(const Eigen::MatrixXd& W, double tol, int max_sweeps, int max_ipm_iterations) {
  const Eigen::Index n = W.rows();
  if (n < 1 || W.cols() != n) throw std::invalid_argument("solve_maxcut_sdp: need a square matrix with n >= 1");
  const Eigen::MatrixXd w = symmetrized(W);
  if ((w.array() < 0).any()) throw std::invalid_argument("solve_maxcut_sdp: weights must be nonnegative");

  // Rows of V are the unit vectors; fixed-seed start keeps the solver deterministic.
  const Eigen::Index rank = n + 1;
  Rng init(0x6d61786375747364ULL + static_cast<std::uint64_t>(n));
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd V(n, rank);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index r = 0; r < rank; ++r) V(i, r) = gauss(init);
    V.row(i).normalize();
  }

  // Certificate: with norms g_i = |sum_j w_ij v_j|, y_i = -g_i - shift is feasible for the dual of
  // min <w, X> once shift lifts w + diag(g) to PSD, so the primal value is within `gap` of optimal.
  // This matters on near-uniform weights, where rows keep drifting along a flat optimal face
  // long after the objective has settled.
  const double total = 0.5 * w.sum();
  const auto duality_gap = [&](const Eigen::VectorXd& norms) {
    Eigen::MatrixXd lifted = w;
    lifted.diagonal() += norms;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lifted, Eigen::EigenvaluesOnly);
    const double shift = std::max(0.0, -eig.eigenvalues()(0));
    const double inner = (w.array() * (V * V.transpose()).array()).sum();
    return std::max(0.0, inner + norms.sum() + static_cast<double>(n) * shift);
  };

  SdpSolution sol;
  double change = 0.0;
  Eigen::VectorXd norms(n);
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    change = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::RowVectorXd g = -(w.row(i) * V);
      const double norm = g.norm();
      norms(i) = norm;
      if (norm <= 0.0) continue;  // isolated vertex: any unit vector is optimal
      g /= norm;
      change = std::max(change, (g - V.row(i)).norm());
      V.row(i) = g;
    }
    bool done = change < tol;
    if (!done && sweep % 10 == 0) {
      for (Eigen::Index i = 0; i < n; ++i) norms(i) = (w.row(i) * V).norm();
      const double value = total - 0.5 * (w.array() * (V * V.transpose()).array()).sum();
      done = 0.5 * duality_gap(norms) <= tol * std::max(1.0, value);
    }
    if (done) {
      sol.sweeps = sweep;
      sol.X = V * V.transpose();
      sol.X.diagonal().setOnes();
      sol.objective = 0.5 * (w.array() * (1.0 - sol.X.array())).sum();
      return sol;
    }
  }
  const auto ipm = interior_point(w, tol, max_ipm_iterations);
  if (!ipm.converged) {
    throw ConvergenceError("max-cut SDP did not converge in " + std::to_string(max_sweeps) +
                               " sweeps (max row change " + std::to_string(change) + ", interior-point gap " +
                               std::to_string(ipm.gap) + ")",
                           ipm.gap);
  }
  sol.sweeps = max_sweeps;
  sol.ipm_iterations = std::max(1, ipm.iterations);
  sol.X = ipm.X;
  sol.X.diagonal().setOnes();
  sol.objective = 0.5 * (w.array() * (1.0 - sol.X.array())).sum();
  return sol;
}

std::vector<int> gw_round(const SdpSolution& sol, const Eigen::MatrixXd& W, Rng& rng, int trials) {
  const Eigen::Index n = sol.X.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sol.X);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd L = eig.eigenvectors() * root.asDiagonal();

  std::normal_distribution<double> gauss;
  std::vector<int> best, y(static_cast<std::size_t>(n));
  double best_value = -1.0;
  Eigen::VectorXd delta(n);
  for (int t = 0; t < std::max(1, trials); ++t) {
    for (Eigen::Index i = 0; i < n; ++i) delta(i) = gauss(rng);
    const Eigen::VectorXd proj = L * delta;
    for (Eigen::Index i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = proj(i) >= 0.0 ? 1 : -1;
    const double value = cut_value(W, y);
    if (value > best_value) {
      best_value = value;
      best = y;
    }
  }
  return best;
}

double cut_value(const Eigen::MatrixXd& W, const std::vector<int>& z) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
      if (i != j && z[static_cast<std::size_t>(i)] != z[static_cast<std::size_t>(j)]) total += W(i, j);
    }
  }
  return total;
}

BruteForceCut brute_force_maxcut(const Eigen::MatrixXd& W, int num_groups) {
  constexpr int kMaxUsers = 12;
  const int K = static_cast<int>(W.rows());
  if (K > kMaxUsers) throw ConfigError("brute_force_maxcut supports at most 12 users, got " + std::to_string(K));
  if (num_groups < 1) throw ConfigError("brute_force_maxcut needs num_groups >= 1");

  BruteForceCut best{std::vector<int>(static_cast<std::size_t>(K), 0), -1.0};
  std::vector<int> z(static_cast<std::size_t>(K), 0);
  // Depth-first over restricted-growth strings with the cut accumulated incrementally.
  auto visit = [&](auto&& self, int k, int used, double value) -> void {
    if (k == K) {
      if (value > best.value) {
        best.value = value;
        best.groups = z;
      }
      return;
    }
    const int limit = std::min(used + 1, num_groups);
    for (int c = 0; c < limit; ++c) {
      double gain = 0.0;
      for (int j = 0; j < k; ++j) {
        if (z[static_cast<std::size_t>(j)] != c) gain += W(k, j) + W(j, k);
      }
      z[static_cast<std::size_t>(k)] = c;
      self(self, k + 1, std::max(used, c + 1), value + gain);
    }
  };
  visit(visit, 0, 0, 0.0);
  if (K == 0) best.value = 0.0;
  return best;
}

GroupAssignment do_graph_cut(int num_groups, const EdgeGraph& graph, Rng& rng, const CutOptions& opts,
                             std::vector<BisectionRecord>* trace) {
  if (!is_power_of_two(num_groups)) {
    throw ConfigError("number of groups must be a power of 2, got " + std::to_string(num_groups));
  }
  const int K = graph.num_users();
  std::vector<int> members(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) members[static_cast<std::size_t>(k)] = k;
  GroupAssignment z{std::vector<int>(static_cast<std::size_t>(K), 0), num_groups};
  split(graph.W, members, num_groups, 0, 0, rng, opts, z.groups, trace);
  return z;
}

std::string edge_graph_to_json(const EdgeGraph& g) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < g.W.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < g.W.cols(); ++j) row.push_back(g.W(i, j));
    rows.push_back(std::move(row));
  }
  return nlohmann::json{{"W", rows}}.dump();
}

EdgeGraph edge_graph_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto& rows = j.at("W");
    const auto n = static_cast<Eigen::Index>(rows.size());
    EdgeGraph g{Eigen::MatrixXd(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& row = rows.at(static_cast<std::size_t>(i));
      if (static_cast<Eigen::Index>(row.size()) != n) throw ConfigError("edge graph JSON is not square");
      for (Eigen::Index k = 0; k < n; ++k) g.W(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
    g.validate();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed edge graph JSON: ") + e.what());
  }
}

void save_edge_graph(const EdgeGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << edge_graph_to_json(g) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

EdgeGraph load_edge_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return edge_graph_from_json(buf.str());
}

}  // namespace rawgrl
