#include "safecert/linear_program.h"

#include <cmath>
#include <limits>
#include <vector>

namespace safecert {

std::string ToString(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kIterationLimit: return "iteration-limit";
  }
  return "unknown";
}

namespace {

// G x <= h rewritten as (R G T) x' <= R h with x = T x'.
struct Equilibrated {
  RowMatrix G;
  Eigen::VectorXd h;
  Eigen::VectorXd c;
  Eigen::VectorXd col_scale;
  bool zero_row_infeasible = false;
};

void ScaleRows(RowMatrix& G, Eigen::VectorXd& h) {
  for (Eigen::Index j = 0; j < G.rows(); ++j) {
    const double s = G.row(j).cwiseAbs().maxCoeff();
    if (s > 0.0) {
      G.row(j) /= s;
      h[j] /= s;
    }
  }
}

Equilibrated Equilibrate(const LinearProgram& lp) {
  Equilibrated eq;
  const int n = lp.num_vars();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < lp.G.rows(); ++j) {
    if (lp.G.row(j).cwiseAbs().maxCoeff() > 0.0) {
      keep.push_back(j);
    } else if (lp.h[j] < 0.0) {
      eq.zero_row_infeasible = true;
    }
  }
  eq.G.resize(static_cast<Eigen::Index>(keep.size()), n);
  eq.h.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    eq.G.row(r) = lp.G.row(keep[r]);
    eq.h[r] = lp.h[keep[r]];
  }
  ScaleRows(eq.G, eq.h);
  eq.col_scale = Eigen::VectorXd::Ones(n);
  if (eq.G.rows() > 0) {
    for (int k = 0; k < n; ++k) {
      const double s = eq.G.col(k).cwiseAbs().maxCoeff();
      if (s > 0.0) {
        eq.col_scale[k] = 1.0 / s;
        eq.G.col(k) /= s;
      }
    }
    ScaleRows(eq.G, eq.h);
  }
  eq.c = lp.c.cwiseProduct(eq.col_scale);
  return eq;
}

enum class PhaseResult { kOptimal, kUnbounded, kIterationLimit };

// Standard form  sum_j sgn_i G_ji lambda_j (+ a_i) = sgn_i b_i >= 0, lambda, a >= 0.
// Variable k < m is lambda_k, k >= m is the artificial a_{k-m}.
class DualStandardForm {
 public:
  DualStandardForm(const RowMatrix& G, const Eigen::VectorXd& b, const Eigen::VectorXd& h,
                   const LpOptions& options)
      : G_(G), h_(h), options_(options), m_(static_cast<int>(G.rows())),
        n_(static_cast<int>(G.cols())) {
    sgn_ = Eigen::VectorXd::Ones(n_);
    for (int i = 0; i < n_; ++i) {
      if (b[i] < 0.0) sgn_[i] = -1.0;
    }
    rhs_ = b.cwiseProduct(sgn_);
    work_rhs_ = rhs_;
    basis_.resize(n_);
    is_basic_.assign(m_ + n_, 0);
    for (int i = 0; i < n_; ++i) {
      basis_[i] = m_ + i;
      is_basic_[m_ + i] = 1;
    }
  }

  int iterations() const { return iterations_; }
  const Eigen::VectorXd& multipliers() const { return y_; }
  const Eigen::VectorXd& sign() const { return sgn_; }

  PhaseResult Run(bool phase_one) {
    int streak = 0;
    bool bland = false;
    for (;;) {
      if (iterations_ >= options_.max_iterations) return PhaseResult::kIterationLimit;
      Factor(phase_one);

      // Reduced costs of the lambda columns: cost_j - (sgn o G_j) . y.
      const Eigen::VectorXd w = sgn_.cwiseProduct(y_);
      const Eigen::VectorXd r = (phase_one ? Eigen::VectorXd::Zero(m_) : h_) - G_ * w;
      int entering = -1;
      double best = 0.0;
      for (int j = 0; j < m_; ++j) {
        if (is_basic_[j]) continue;
        const double cost = phase_one ? 0.0 : h_[j];
        if (r[j] >= -options_.optimality_tol * (1.0 + std::abs(cost))) continue;
        if (bland) {
          entering = j;
          break;
        }
        if (entering < 0 || r[j] < best) {
          entering = j;
          best = r[j];
        }
      }
      if (entering < 0) return PhaseResult::kOptimal;

      const Eigen::VectorXd dir = lu_.solve(Column(entering));
      const double cutoff = std::max(options_.pivot_tol, 1e-9 * dir.cwiseAbs().maxCoeff());
      const double slack = 1e-9 * (1.0 + work_rhs_.cwiseAbs().maxCoeff());
      double bound = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n_; ++i) {
        if (dir[i] > cutoff) bound = std::min(bound, (std::max(x_basic_[i], 0.0) + slack) / dir[i]);
      }
      if (!std::isfinite(bound)) return PhaseResult::kUnbounded;
      // Harris two-pass ratio test; Bland's rule takes the lowest index instead.
      int leave = -1;
      for (int i = 0; i < n_; ++i) {
        if (dir[i] <= cutoff) continue;
        if (std::max(x_basic_[i], 0.0) / dir[i] > bound) continue;
        if (leave < 0 || (bland ? basis_[i] < basis_[leave] : dir[i] > dir[leave])) leave = i;
      }
      const double tmin = std::max(x_basic_[leave], 0.0) / dir[leave];
      streak = tmin <= 1e-13 ? streak + 1 : 0;
      bland = streak > options_.degenerate_streak;

      is_basic_[basis_[leave]] = 0;
      basis_[leave] = entering;
      is_basic_[entering] = 1;
      ++iterations_;
    }
  }

  double ArtificialInfeasibility() {
    Factor(true);
    double total = 0.0;
    for (int i = 0; i < n_; ++i) {
      if (basis_[i] >= m_) total += std::max(x_basic_[i], 0.0);
    }
    return total;
  }

  double rhs_norm() const { return rhs_.lpNorm<1>(); }

  // Shifts the right-hand side so that every basic variable of the current
  // basis sits strictly above zero by a small, distinct amount. This breaks
  // the heavy degeneracy of the scenario programs.
  void Perturb(bool phase_one) {
    work_rhs_ = rhs_;
    Factor(phase_one);
    const double scale = 1e-8 * (1.0 + rhs_.cwiseAbs().maxCoeff());
    Eigen::VectorXd shifted(n_);
    for (int i = 0; i < n_; ++i) {
      const double u = std::fmod(0.6180339887498949 * (i + 1), 1.0);
      shifted[i] = std::max(x_basic_[i], 0.0) + scale * (1.0 + u);
    }
    work_rhs_ = BasisMatrix() * shifted;
  }

  void Restore() { work_rhs_ = rhs_; }

  // Dual simplex pivots on the true right-hand side until the basic
  // variables are non-negative again; reduced costs stay non-negative.
  // Gives up after `cap` pivots, restoring the entry basis, whose
  // multipliers stay primal feasible and optimal for the shifted problem.
  PhaseResult DualCleanup(int cap) {
    const std::vector<int> saved_basis = basis_;
    const std::vector<char> saved_is_basic = is_basic_;
    for (int pivots = 0;; ++pivots) {
      if (iterations_ >= options_.max_iterations || pivots >= cap) {
        basis_ = saved_basis;
        is_basic_ = saved_is_basic;
        Factor(false);
        return PhaseResult::kIterationLimit;
      }
      Factor(false);
      const double tol = 1e-9 * (1.0 + rhs_.cwiseAbs().maxCoeff());
      int leave = -1;
      for (int i = 0; i < n_; ++i) {
        if (x_basic_[i] < -tol && (leave < 0 || x_basic_[i] < x_basic_[leave])) leave = i;
      }
      if (leave < 0) return PhaseResult::kOptimal;
      const Eigen::VectorXd v = lu_t_.solve(Eigen::VectorXd::Unit(n_, leave));
      const Eigen::VectorXd alpha = G_ * sgn_.cwiseProduct(v);
      const Eigen::VectorXd r = h_ - G_ * sgn_.cwiseProduct(y_);
      // Harris two-pass ratio test: among near-minimal ratios take the
      // largest pivot.
      const double cutoff = std::max(options_.pivot_tol, 1e-7 * alpha.cwiseAbs().maxCoeff());
      double bound = std::numeric_limits<double>::infinity();
      for (int j = 0; j < m_; ++j) {
        if (is_basic_[j] || alpha[j] >= -cutoff) continue;
        bound = std::min(bound, (std::max(r[j], 0.0) + options_.optimality_tol) / -alpha[j]);
      }
      int entering = -1;
      for (int j = 0; j < m_; ++j) {
        if (is_basic_[j] || alpha[j] >= -cutoff) continue;
        if (std::max(r[j], 0.0) / -alpha[j] > bound) continue;
        if (entering < 0 || alpha[j] < alpha[entering]) entering = j;
      }
      if (entering < 0) {
        basis_ = saved_basis;
        is_basic_ = saved_is_basic;
        Factor(false);
        return PhaseResult::kUnbounded;
      }
      is_basic_[basis_[leave]] = 0;
      basis_[leave] = entering;
      is_basic_[entering] = 1;
      ++iterations_;
    }
  }

  // Pivots basic artificials (at zero level) out of the basis wherever a
  // lambda column has a usable entry in their row.
  void DriveOutArtificials() {
    for (int pos = 0; pos < n_; ++pos) {
      if (basis_[pos] < m_) continue;
      Factor(true);
      const Eigen::VectorXd v = lu_t_.solve(Eigen::VectorXd::Unit(n_, pos));
      const Eigen::VectorXd alpha = G_ * sgn_.cwiseProduct(v);
      int best = -1;
      for (int j = 0; j < m_; ++j) {
        if (is_basic_[j]) continue;
        if (std::abs(alpha[j]) > 1e-9 && (best < 0 || std::abs(alpha[j]) > std::abs(alpha[best]))) {
          best = j;
        }
      }
      if (best < 0) continue;  // redundant equation, the artificial stays at zero
      is_basic_[basis_[pos]] = 0;
      basis_[pos] = best;
      is_basic_[best] = 1;
    }
  }

  // Multipliers of the final basis with one step of iterative refinement.
  Eigen::VectorXd RefinedMultipliers() {
    Factor(false);
    const Eigen::MatrixXd B = BasisMatrix();
    Eigen::VectorXd cb(n_);
    for (int i = 0; i < n_; ++i) cb[i] = basis_[i] < m_ ? h_[basis_[i]] : 0.0;
    Eigen::VectorXd y = y_;
    y += lu_t_.solve(cb - B.transpose() * y);
    return y;
  }

 private:
  Eigen::VectorXd Column(int k) const {
    if (k < m_) return sgn_.cwiseProduct(G_.row(k).transpose());
    return Eigen::VectorXd::Unit(n_, k - m_);
  }

  Eigen::MatrixXd BasisMatrix() const {
    Eigen::MatrixXd B(n_, n_);
    for (int i = 0; i < n_; ++i) B.col(i) = Column(basis_[i]);
    return B;
  }

  void Factor(bool phase_one) {
    const Eigen::MatrixXd B = BasisMatrix();
    lu_.compute(B);
    lu_t_.compute(B.transpose());
    x_basic_ = lu_.solve(work_rhs_);
    Eigen::VectorXd cb(n_);
    for (int i = 0; i < n_; ++i) {
      const int k = basis_[i];
      cb[i] = phase_one ? (k >= m_ ? 1.0 : 0.0) : (k < m_ ? h_[k] : 0.0);
    }
    y_ = lu_t_.solve(cb);
  }

  const RowMatrix& G_;
  const Eigen::VectorXd& h_;
  const LpOptions& options_;
  int m_;
  int n_;
  Eigen::VectorXd sgn_;
  Eigen::VectorXd rhs_;
  Eigen::VectorXd work_rhs_;
  std::vector<int> basis_;
  std::vector<char> is_basic_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_t_;
  Eigen::VectorXd x_basic_;
  Eigen::VectorXd y_;
  int iterations_ = 0;
};

enum class CoreStatus { kOptimal, kDualInfeasible, kDualUnbounded, kIterationLimit };

struct CoreResult {
  CoreStatus status;
  Eigen::VectorXd x;  // equilibrated coordinates
  int iterations;
};

CoreResult SolveEquilibrated(const RowMatrix& G, const Eigen::VectorXd& h, const Eigen::VectorXd& c,
                             const LpOptions& options) {
  const Eigen::VectorXd b = -c;
  DualStandardForm form(G, b, h, options);
  form.Perturb(true);
  PhaseResult phase = form.Run(true);
  if (phase == PhaseResult::kIterationLimit) return {CoreStatus::kIterationLimit, {}, form.iterations()};
  form.Restore();
  if (form.ArtificialInfeasibility() > 1e-9 * (1.0 + form.rhs_norm())) {
    return {CoreStatus::kDualInfeasible, {}, form.iterations()};
  }
  form.DriveOutArtificials();
  form.Perturb(false);
  phase = form.Run(false);
  if (phase == PhaseResult::kIterationLimit) return {CoreStatus::kIterationLimit, {}, form.iterations()};
  if (phase == PhaseResult::kUnbounded) return {CoreStatus::kDualUnbounded, {}, form.iterations()};
  form.Restore();
  form.DualCleanup(std::max(200, 4 * static_cast<int>(G.cols())));
  return {CoreStatus::kOptimal, form.sign().cwiseProduct(form.RefinedMultipliers()),
          form.iterations()};
}

// minimize t  s.t.  G x - t <= h, -t <= 0 (rows already equilibrated).
CoreResult LeastViolation(const RowMatrix& G, const Eigen::VectorXd& h, const LpOptions& options,
                          double* violation) {
  const Eigen::Index m = G.rows(), n = G.cols();
  RowMatrix Ga = RowMatrix::Zero(m + 1, n + 1);
  Ga.topLeftCorner(m, n) = G;
  Ga.col(n).head(m).setConstant(-1.0);
  Ga(m, n) = -1.0;
  Eigen::VectorXd ha(m + 1);
  ha << h, 0.0;
  Eigen::VectorXd ca = Eigen::VectorXd::Zero(n + 1);
  ca[n] = 1.0;
  CoreResult r = SolveEquilibrated(Ga, ha, ca, options);
  if (r.status == CoreStatus::kOptimal) {
    *violation = r.x[n];
    r.x = r.x.head(n).eval();
  }
  return r;
}

}  // namespace

LpResult SolveLinearProgram(const LinearProgram& lp, const LpOptions& options) {
  if (lp.h.size() != lp.G.rows() || lp.c.size() != lp.G.cols()) {
    throw std::invalid_argument("SolveLinearProgram: inconsistent dimensions");
  }
  LpResult result;
  const Equilibrated eq = Equilibrate(lp);
  if (eq.zero_row_infeasible) {
    result.status = LpStatus::kInfeasible;
    result.x = Eigen::VectorXd::Zero(lp.num_vars());
    return result;
  }

  CoreResult core = SolveEquilibrated(eq.G, eq.h, eq.c, options);
  result.iterations = core.iterations;
  switch (core.status) {
    case CoreStatus::kOptimal:
      result.status = LpStatus::kOptimal;
      result.x = eq.col_scale.cwiseProduct(core.x);
      result.objective = lp.c.dot(result.x);
      return result;
    case CoreStatus::kIterationLimit:
      result.status = LpStatus::kIterationLimit;
      return result;
    case CoreStatus::kDualUnbounded:
    case CoreStatus::kDualInfeasible: {
      double violation = 0.0;
      CoreResult aux = LeastViolation(eq.G, eq.h, options, &violation);
      result.iterations += aux.iterations;
      if (aux.status != CoreStatus::kOptimal) {
        result.status = LpStatus::kIterationLimit;
        return result;
      }
      result.x = eq.col_scale.cwiseProduct(aux.x);
      result.objective = lp.c.dot(result.x);
      const bool feasible = violation <= 1e-9;
      if (core.status == CoreStatus::kDualUnbounded || !feasible) {
        result.status = LpStatus::kInfeasible;
      } else {
        result.status = LpStatus::kUnbounded;
      }
      return result;
    }
  }
  return result;
}

}  // namespace safecert
