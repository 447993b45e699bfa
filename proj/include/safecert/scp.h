#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "safecert/core.h"
#include "safecert/linear_program.h"
#include "safecert/sampling.h"

namespace safecert {

class ScpLayout;

struct ScpOptions {
  /// Box bound on every certificate coefficient and on each supply-rate
  /// entry (and on sigma, phi unless level_bound is set). The program is
  /// positively homogeneous, so some normalization is required for a finite
  /// optimum.
  double coeff_bound = 200.0;
  /// Box bound on sigma and phi; unset means coeff_bound. Certificate
  /// values scale like coeff_bound times the largest basis value, which can
  /// dwarf coeff_bound itself.
  std::optional<double> level_bound;
  /// Enforced separation phi - sigma >= gap.
  double gap = 1e-3;
  double feasibility_tol = 1e-8;
  /// After the primary solve, minimize eta over the optimal face (eta + beta
  /// held at its optimum). The optimum of eta + beta is not unique in
  /// general and this picks the point with the most level-set slack.
  bool minimize_eta_second = true;
  /// When set, bounds every difference quotient of B between neighbouring
  /// points of the slope grid (see ScpData) by this value. This normalizes
  /// the certificate by its slope instead of by its coefficients.
  std::optional<double> slope_bound;

  double LevelBound() const { return level_bound.value_or(coeff_bound); }
  /// Bound carried by variable `index` of `layout`.
  double BoundOf(const ScpLayout& layout, int index) const;

  void Validate() const;
};

/// Thrown when the sample set leaves the initial or unsafe box without a
/// single sample, so the corresponding level-set condition is unconstrained.
class CoverageError : public InvalidInputError {
 public:
  using InvalidInputError::InvalidInputError;
};

/// Position of every decision variable
/// [coeffs, sigma, phi, S11 (upper triangle), S12, S22 (upper triangle), eta, beta].
class ScpLayout {
 public:
  ScpLayout(int terms, int input_dim, int state_dim);

  int terms() const { return terms_; }
  int input_dim() const { return p_; }
  int state_dim() const { return n_; }

  int coeff(int j) const { return j; }
  int sigma() const { return terms_; }
  int phi() const { return terms_ + 1; }
  int s11(int a, int b) const;
  int s12(int a, int b) const;
  int s22(int a, int b) const;
  int eta() const { return size_ - 2; }
  int beta() const { return size_ - 1; }
  int size() const { return size_; }
  /// Variables that carry a box bound (everything but eta, beta).
  int bounded_count() const { return size_ - 2; }

  std::string VariableName(int index) const;

  /// d/dS of supply(S, d, x), written into row[s11(0,0) .. ].
  void SupplyGradient(const Eigen::VectorXd& d, const Eigen::VectorXd& x,
                      Eigen::Ref<Eigen::RowVectorXd> row) const;

 private:
  int terms_, p_, n_;
  int s11_begin_, s12_begin_, s22_begin_, size_;
};

enum class RowGroup { kInitial, kUnsafe, kDecrease, kSupplyBound, kGap, kSlope, kBound };

std::string ToString(RowGroup group);

/// Points feeding each constraint group.
struct ScpData {
  std::vector<Eigen::VectorXd> initial_points;
  std::vector<Eigen::VectorXd> unsafe_points;
  std::vector<SamplePair> transitions;
  /// Axis-neighbour pairs of a grid over the bounding box of all sampled
  /// states and successors, at the sampling spacing.
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> slope_pairs;
};

/// Initial/unsafe rows come from the x part of every pair lying in the
/// respective box; every pair yields a decrease row and a supply-bound row.
/// Slope pairs are only turned into rows when ScpOptions::slope_bound is set.
/// Throws CoverageError when either box holds no sample.
ScpData SelectScpData(const SubsystemClass& cls, const SampleSet& samples);

struct ScpProblem {
  ScpLayout layout;
  StcTemplate stc_template;
  ScpOptions options;
  LinearProgram lp;
  std::vector<RowGroup> row_groups;

  int CountRows(RowGroup group) const;
};

ScpProblem BuildScp(const StcTemplate& tmpl, int input_dim, const ScpData& data,
                    const ScpOptions& options);
ScpProblem BuildScp(const SubsystemClass& cls, const SampleSet& samples, const ScpOptions& options);

enum class ScpStatus { kOptimal, kInfeasible, kUnbounded };

std::string ToString(ScpStatus status);

struct ScpSolution {
  CoefficientVector coeffs;
  double sigma = 0.0;
  double phi = 0.0;
  SupplyRate supply = SupplyRate::Zero(1, 1);
  double eta = 0.0;
  double beta = 0.0;
  double objective = 0.0;
  ScpStatus status = ScpStatus::kInfeasible;
  /// For non-optimal outcomes: which constraint group is violated most.
  std::string diagnosis;
  int iterations = 0;

  /// Flattened variable vector in `layout` order.
  Eigen::VectorXd ToVector(const ScpLayout& layout) const;
  static ScpSolution FromVector(const ScpLayout& layout, const Eigen::VectorXd& v);
};

ScpSolution SolveScp(const ScpProblem& problem, const LpOptions& lp_options = {});

/// Worst violation per constraint group, recomputed from the core
/// evaluators. Each violation is divided by max(1, sum of absolute values
/// of the terms of its row), so the tolerance is relative to the row's scale.
struct ResidualReport {
  double initial = 0.0;
  double unsafe = 0.0;
  double decrease = 0.0;
  double supply_bound = 0.0;
  double gap = 0.0;
  double slope = 0.0;
  double bounds = 0.0;
  double tolerance = 0.0;

  double Max() const;
  bool Passed() const { return Max() <= tolerance; }
};

ResidualReport CheckSolution(const ScpSolution& solution, const StcTemplate& tmpl,
                             const ScpData& data, const ScpOptions& options);
ResidualReport CheckSolution(const ScpSolution& solution, const SubsystemClass& cls,
                             const SampleSet& samples, const ScpOptions& options);

/// CPLEX LP text format, for cross-checking with external solvers.
void WriteLpFormat(const ScpProblem& problem, std::ostream& os);

}  // namespace safecert
