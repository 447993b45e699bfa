#pragma once

#include <string>

#include <Eigen/Dense>

namespace safecert {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// minimize c'x subject to G x <= h, x free.
struct LinearProgram {
  RowMatrix G;
  Eigen::VectorXd h;
  Eigen::VectorXd c;

  int num_rows() const { return static_cast<int>(G.rows()); }
  int num_vars() const { return static_cast<int>(G.cols()); }
};

struct LpOptions {
  /// Reduced-cost tolerance in the equilibrated problem.
  double optimality_tol = 1e-10;
  double pivot_tol = 1e-9;
  int max_iterations = 500000;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int degenerate_streak = 40;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

std::string ToString(LpStatus status);

struct LpResult {
  LpStatus status = LpStatus::kIterationLimit;
  /// Optimizer when optimal; the point of least worst-case (row-scaled)
  /// violation when infeasible.
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
};

/// Dense two-phase revised simplex applied to the dual
///   minimize h'y  s.t.  G'y = -c, y >= 0,
/// whose simplex multipliers are the primal solution. The basis is only
/// num_vars x num_vars, so problems with many rows and few variables (the
/// scenario programs) stay cheap. Rows and columns are equilibrated first.
/// Pivoting is deterministic: Dantzig pricing with lowest-index ties, and
/// Bland's rule during long degenerate stretches.
LpResult SolveLinearProgram(const LinearProgram& lp, const LpOptions& options = {});

}  // namespace safecert
