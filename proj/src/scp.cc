#include "safecert/scp.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace safecert {

void ScpOptions::Validate() const {
  if (!(coeff_bound > 0.0) || !std::isfinite(coeff_bound)) {
    throw InvalidInputError("ScpOptions: coeff_bound must be finite and positive");
  }
  if (slope_bound && (!(*slope_bound > 0.0) || !std::isfinite(*slope_bound))) {
    throw InvalidInputError("ScpOptions: slope_bound must be finite and positive");
  }
  if (level_bound && (!(*level_bound > 0.0) || !std::isfinite(*level_bound))) {
    throw InvalidInputError("ScpOptions: level_bound must be finite and positive");
  }
  if (!(gap >= 0.0)) throw InvalidInputError("ScpOptions: gap must be non-negative");
  if (!(feasibility_tol > 0.0)) throw InvalidInputError("ScpOptions: feasibility_tol must be positive");
}

double ScpOptions::BoundOf(const ScpLayout& layout, int index) const {
  return index == layout.sigma() || index == layout.phi() ? LevelBound() : coeff_bound;
}

ScpLayout::ScpLayout(int terms, int input_dim, int state_dim)
    : terms_(terms), p_(input_dim), n_(state_dim) {
  if (terms < 1 || input_dim < 1 || state_dim < 1) {
    throw InvalidInputError("ScpLayout: dimensions must be positive");
  }
  s11_begin_ = terms_ + 2;
  s12_begin_ = s11_begin_ + p_ * (p_ + 1) / 2;
  s22_begin_ = s12_begin_ + p_ * n_;
  size_ = s22_begin_ + n_ * (n_ + 1) / 2 + 2;
}

namespace {

// Row-major index of (a, b), a <= b, in the upper triangle of a dim x dim matrix.
int UpperIndex(int a, int b, int dim) {
  if (a > b) std::swap(a, b);
  return a * dim - a * (a - 1) / 2 + (b - a);
}

}  // namespace

int ScpLayout::s11(int a, int b) const { return s11_begin_ + UpperIndex(a, b, p_); }
int ScpLayout::s12(int a, int b) const { return s12_begin_ + a * n_ + b; }
int ScpLayout::s22(int a, int b) const { return s22_begin_ + UpperIndex(a, b, n_); }

std::string ScpLayout::VariableName(int index) const {
  if (index < terms_) return "c" + std::to_string(index);
  if (index == sigma()) return "sigma";
  if (index == phi()) return "phi";
  if (index == eta()) return "eta";
  if (index == beta()) return "beta";
  for (int a = 0; a < p_; ++a) {
    for (int b = a; b < p_; ++b) {
      if (s11(a, b) == index) return "s11_" + std::to_string(a) + "_" + std::to_string(b);
    }
    for (int b = 0; b < n_; ++b) {
      if (s12(a, b) == index) return "s12_" + std::to_string(a) + "_" + std::to_string(b);
    }
  }
  for (int a = 0; a < n_; ++a) {
    for (int b = a; b < n_; ++b) {
      if (s22(a, b) == index) return "s22_" + std::to_string(a) + "_" + std::to_string(b);
    }
  }
  throw InvalidInputError("ScpLayout: variable index out of range");
}

void ScpLayout::SupplyGradient(const Eigen::VectorXd& d, const Eigen::VectorXd& x,
                               Eigen::Ref<Eigen::RowVectorXd> row) const {
  for (int a = 0; a < p_; ++a) {
    for (int b = a; b < p_; ++b) row[s11(a, b)] = (a == b ? 1.0 : 2.0) * d[a] * d[b];
    for (int b = 0; b < n_; ++b) row[s12(a, b)] = 2.0 * d[a] * x[b];
  }
  for (int a = 0; a < n_; ++a) {
    for (int b = a; b < n_; ++b) row[s22(a, b)] = (a == b ? 1.0 : 2.0) * x[a] * x[b];
  }
}

std::string ToString(RowGroup group) {
  switch (group) {
    case RowGroup::kInitial: return "initial-level";
    case RowGroup::kUnsafe: return "unsafe-level";
    case RowGroup::kDecrease: return "decrease";
    case RowGroup::kSupplyBound: return "supply-bound";
    case RowGroup::kGap: return "level-gap";
    case RowGroup::kSlope: return "slope";
    case RowGroup::kBound: return "variable-bound";
  }
  return "unknown";
}

std::string ToString(ScpStatus status) {
  switch (status) {
    case ScpStatus::kOptimal: return "optimal";
    case ScpStatus::kInfeasible: return "infeasible";
    case ScpStatus::kUnbounded: return "unbounded";
  }
  return "unknown";
}

namespace {

bool InBox(const IntervalBox& box, const Eigen::VectorXd& p) {
  return box.Contains(p, 1e-9 * (1.0 + p.cwiseAbs().maxCoeff()));
}

}  // namespace

ScpData SelectScpData(const SubsystemClass& cls, const SampleSet& samples) {
  if (samples.pairs.empty()) throw InvalidInputError("SelectScpData: empty sample set");
  ScpData data;
  data.transitions = samples.pairs;
  for (const auto& pair : samples.pairs) {
    if (pair.x.size() != cls.state_dim() || pair.d.size() != cls.input_dim() ||
        pair.next.size() != cls.state_dim()) {
      throw InvalidInputError("SelectScpData: sample dimensions differ from class '" + cls.id() + "'");
    }
    if (InBox(cls.safety().initial(), pair.x)) data.initial_points.push_back(pair.x);
    if (InBox(cls.safety().unsafe(), pair.x)) data.unsafe_points.push_back(pair.x);
  }
  if (data.initial_points.empty()) {
    throw CoverageError("class '" + cls.id() +
                        "': no sample lies in the initial box; use a denser state grid");
  }
  if (data.unsafe_points.empty()) {
    throw CoverageError("class '" + cls.id() +
                        "': no sample lies in the unsafe box; use a denser state grid");
  }

  const int n = cls.state_dim();
  Eigen::VectorXd lo = samples.pairs.front().x, hi = lo;
  for (const auto& pair : samples.pairs) {
    lo = lo.cwiseMin(pair.x).cwiseMin(pair.next);
    hi = hi.cwiseMax(pair.x).cwiseMax(pair.next);
  }
  std::vector<int> counts(n);
  for (int k = 0; k < n; ++k) {
    const double width = cls.state_box().width(k);
    double spacing = width / 10.0;
    if (static_cast<int>(samples.grid_counts.size()) > k && samples.grid_counts[k] > 1) {
      spacing = width / (samples.grid_counts[k] - 1);
    }
    counts[k] = spacing > 0.0 ? std::max(2, static_cast<int>(std::ceil((hi[k] - lo[k]) / spacing - 1e-9)) + 1)
                              : 1;
    if (!(hi[k] > lo[k])) counts[k] = 1;
  }
  const auto grid = GridSamples(IntervalBox(lo, hi), counts);
  // Lexicographic order with the last coordinate fastest.
  std::vector<int> stride(n, 1);
  for (int k = n - 2; k >= 0; --k) stride[k] = stride[k + 1] * counts[k + 1];
  for (int idx = 0; idx < static_cast<int>(grid.size()); ++idx) {
    for (int k = 0; k < n; ++k) {
      if ((idx / stride[k]) % counts[k] + 1 < counts[k]) {
        data.slope_pairs.emplace_back(grid[idx], grid[idx + stride[k]]);
      }
    }
  }
  return data;
}

int ScpProblem::CountRows(RowGroup group) const {
  return static_cast<int>(std::count(row_groups.begin(), row_groups.end(), group));
}

ScpProblem BuildScp(const StcTemplate& tmpl, int input_dim, const ScpData& data,
                    const ScpOptions& options) {
  options.Validate();
  if (data.initial_points.empty() || data.unsafe_points.empty()) {
    throw CoverageError("BuildScp: initial and unsafe groups both need at least one sample");
  }
  const ScpLayout layout(tmpl.term_count(), input_dim, tmpl.state_dim());
  const int l = layout.terms();
  const int slope_rows = options.slope_bound ? 2 * static_cast<int>(data.slope_pairs.size()) : 0;
  const int rows = static_cast<int>(data.initial_points.size() + data.unsafe_points.size() +
                                    2 * data.transitions.size()) +
                   1 + slope_rows + 2 * layout.bounded_count();

  ScpProblem problem{layout, tmpl, options, {}, {}};
  LinearProgram& lp = problem.lp;
  lp.G = RowMatrix::Zero(rows, layout.size());
  lp.h = Eigen::VectorXd::Zero(rows);
  lp.c = Eigen::VectorXd::Zero(layout.size());
  lp.c[layout.eta()] = 1.0;
  lp.c[layout.beta()] = 1.0;
  problem.row_groups.reserve(rows);

  int r = 0;
  // B(x) - sigma - eta <= 0
  for (const auto& x : data.initial_points) {
    lp.G.row(r).head(l) = tmpl.Basis(x).transpose();
    lp.G(r, layout.sigma()) = -1.0;
    lp.G(r, layout.eta()) = -1.0;
    problem.row_groups.push_back(RowGroup::kInitial);
    ++r;
  }
  // -B(x) + phi - eta <= 0
  for (const auto& x : data.unsafe_points) {
    lp.G.row(r).head(l) = -tmpl.Basis(x).transpose();
    lp.G(r, layout.phi()) = 1.0;
    lp.G(r, layout.eta()) = -1.0;
    problem.row_groups.push_back(RowGroup::kUnsafe);
    ++r;
  }
  // B(f) - B(x) - supply(d, x) - eta <= 0
  for (const auto& s : data.transitions) {
    if (s.d.size() != input_dim) throw InvalidInputError("BuildScp: input dimension mismatch");
    lp.G.row(r).head(l) = (tmpl.Basis(s.next) - tmpl.Basis(s.x)).transpose();
    Eigen::RowVectorXd supply = Eigen::RowVectorXd::Zero(layout.size());
    layout.SupplyGradient(s.d, s.x, supply);
    lp.G.row(r) -= supply;
    lp.G(r, layout.eta()) = -1.0;
    problem.row_groups.push_back(RowGroup::kDecrease);
    ++r;
  }
  // supply(d, x) - beta <= 0
  for (const auto& s : data.transitions) {
    Eigen::RowVectorXd supply = Eigen::RowVectorXd::Zero(layout.size());
    layout.SupplyGradient(s.d, s.x, supply);
    lp.G.row(r) = supply;
    lp.G(r, layout.beta()) = -1.0;
    problem.row_groups.push_back(RowGroup::kSupplyBound);
    ++r;
  }
  // sigma - phi <= -gap
  lp.G(r, layout.sigma()) = 1.0;
  lp.G(r, layout.phi()) = -1.0;
  lp.h[r] = -options.gap;
  problem.row_groups.push_back(RowGroup::kGap);
  ++r;
  // +-(B(a) - B(b)) <= slope_bound * |a - b|
  if (options.slope_bound) {
    for (const auto& [a, b] : data.slope_pairs) {
      const Eigen::RowVectorXd diff = (tmpl.Basis(a) - tmpl.Basis(b)).transpose();
      const double cap = *options.slope_bound * (a - b).norm();
      for (double sign : {1.0, -1.0}) {
        lp.G.row(r).head(l) = sign * diff;
        lp.h[r] = cap;
        problem.row_groups.push_back(RowGroup::kSlope);
        ++r;
      }
    }
  }
  for (int k = 0; k < layout.bounded_count(); ++k) {
    lp.G(r, k) = 1.0;
    lp.h[r] = options.BoundOf(layout, k);
    problem.row_groups.push_back(RowGroup::kBound);
    ++r;
    lp.G(r, k) = -1.0;
    lp.h[r] = options.BoundOf(layout, k);
    problem.row_groups.push_back(RowGroup::kBound);
    ++r;
  }
  return problem;
}

ScpProblem BuildScp(const SubsystemClass& cls, const SampleSet& samples, const ScpOptions& options) {
  return BuildScp(cls.stc_template(), cls.input_dim(), SelectScpData(cls, samples), options);
}

Eigen::VectorXd ScpSolution::ToVector(const ScpLayout& layout) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(layout.size());
  v.head(layout.terms()) = coeffs.values();
  v[layout.sigma()] = sigma;
  v[layout.phi()] = phi;
  for (int a = 0; a < layout.input_dim(); ++a) {
    for (int b = a; b < layout.input_dim(); ++b) v[layout.s11(a, b)] = supply.s11()(a, b);
    for (int b = 0; b < layout.state_dim(); ++b) v[layout.s12(a, b)] = supply.s12()(a, b);
  }
  for (int a = 0; a < layout.state_dim(); ++a) {
    for (int b = a; b < layout.state_dim(); ++b) v[layout.s22(a, b)] = supply.s22()(a, b);
  }
  v[layout.eta()] = eta;
  v[layout.beta()] = beta;
  return v;
}

ScpSolution ScpSolution::FromVector(const ScpLayout& layout, const Eigen::VectorXd& v) {
  const int p = layout.input_dim(), n = layout.state_dim();
  Eigen::MatrixXd s11(p, p), s12(p, n), s22(n, n);
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) s11(a, b) = v[layout.s11(a, b)];
    for (int b = 0; b < n; ++b) s12(a, b) = v[layout.s12(a, b)];
  }
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) s22(a, b) = v[layout.s22(a, b)];
  }
  ScpSolution sol;
  sol.coeffs = CoefficientVector(v.head(layout.terms()));
  sol.sigma = v[layout.sigma()];
  sol.phi = v[layout.phi()];
  sol.supply = SupplyRate(s11, s12, s22);
  sol.eta = v[layout.eta()];
  sol.beta = v[layout.beta()];
  sol.objective = sol.eta + sol.beta;
  return sol;
}

namespace {

// Smallest eta and beta that satisfy every row for the other variables as
// returned by the solver.
void TightenEtaBeta(const ScpProblem& problem, ScpSolution& sol) {
  const ScpLayout& layout = problem.layout;
  Eigen::VectorXd v = sol.ToVector(layout);
  v[layout.eta()] = 0.0;
  v[layout.beta()] = 0.0;
  const Eigen::VectorXd rest = problem.lp.G * v - problem.lp.h;
  double eta = -std::numeric_limits<double>::infinity(), beta = eta;
  for (int r = 0; r < problem.lp.num_rows(); ++r) {
    if (problem.lp.G(r, layout.eta()) == -1.0) eta = std::max(eta, rest[r]);
    if (problem.lp.G(r, layout.beta()) == -1.0) beta = std::max(beta, rest[r]);
  }
  if (std::isfinite(eta)) sol.eta = eta;
  if (std::isfinite(beta)) sol.beta = beta;
  sol.objective = sol.eta + sol.beta;
}

}  // namespace

ScpSolution SolveScp(const ScpProblem& problem, const LpOptions& lp_options) {
  const LpResult lp = SolveLinearProgram(problem.lp, lp_options);
  if (lp.status == LpStatus::kIterationLimit) {
    ScpSolution sol = ScpSolution::FromVector(problem.layout,
                                              Eigen::VectorXd::Zero(problem.layout.size()));
    sol.status = ScpStatus::kInfeasible;
    sol.diagnosis = "simplex iteration limit reached";
    sol.iterations = lp.iterations;
    return sol;
  }
  ScpSolution sol = ScpSolution::FromVector(problem.layout, lp.x);
  sol.iterations = lp.iterations;
  if (lp.status == LpStatus::kOptimal && problem.options.minimize_eta_second) {
    const ScpLayout& layout = problem.layout;
    LinearProgram second;
    const int rows = problem.lp.num_rows();
    second.G.resize(rows + 1, layout.size());
    second.G.topRows(rows) = problem.lp.G;
    second.G.row(rows).setZero();
    second.G(rows, layout.eta()) = 1.0;
    second.G(rows, layout.beta()) = 1.0;
    second.h.resize(rows + 1);
    second.h.head(rows) = problem.lp.h;
    second.h[rows] = lp.objective + 1e-10 * std::max(1.0, std::abs(lp.objective));
    second.c = Eigen::VectorXd::Zero(layout.size());
    second.c[layout.eta()] = 1.0;
    const LpResult refined = SolveLinearProgram(second, lp_options);
    sol.iterations += refined.iterations;
    if (refined.status == LpStatus::kOptimal) {
      const int iterations = sol.iterations;
      sol = ScpSolution::FromVector(layout, refined.x);
      sol.iterations = iterations;
    }
  }
  switch (lp.status) {
    case LpStatus::kOptimal:
      sol.status = ScpStatus::kOptimal;
      TightenEtaBeta(problem, sol);
      break;
    case LpStatus::kUnbounded:
      // Impossible with box bounds and at least one level-set row per group.
      sol.status = ScpStatus::kUnbounded;
      sol.diagnosis = "objective unbounded below";
      break;
    default: {
      sol.status = ScpStatus::kInfeasible;
      const Eigen::VectorXd slack = problem.lp.G * lp.x - problem.lp.h;
      int worst = 0;
      for (int r = 1; r < slack.size(); ++r) {
        if (slack[r] > slack[worst]) worst = r;
      }
      std::ostringstream os;
      os << "most violated group: " << ToString(problem.row_groups[worst]) << " (by "
         << slack[worst] << ")";
      sol.diagnosis = os.str();
      break;
    }
  }
  return sol;
}

double ResidualReport::Max() const {
  return std::max({initial, unsafe, decrease, supply_bound, gap, slope, bounds});
}

namespace {

double TemplateMagnitude(const StcTemplate& tmpl, const CoefficientVector& c,
                         const Eigen::VectorXd& x) {
  return c.values().cwiseProduct(tmpl.Basis(x)).cwiseAbs().sum();
}

double SupplyMagnitude(const SupplyRate& s, const Eigen::VectorXd& d, const Eigen::VectorXd& x) {
  const Eigen::VectorXd ad = d.cwiseAbs(), ax = x.cwiseAbs();
  return ad.dot(s.s11().cwiseAbs() * ad) + 2.0 * ad.dot(s.s12().cwiseAbs() * ax) +
         ax.dot(s.s22().cwiseAbs() * ax);
}

void Record(double& slot, double lhs, double rhs, double magnitude) {
  slot = std::max(slot, (lhs - rhs) / std::max(1.0, magnitude));
}

}  // namespace

ResidualReport CheckSolution(const ScpSolution& sol, const StcTemplate& tmpl, const ScpData& data,
                             const ScpOptions& options) {
  ResidualReport rep;
  rep.tolerance = options.feasibility_tol;
  rep.initial = rep.unsafe = rep.decrease = rep.supply_bound = rep.gap = rep.bounds =
      -std::numeric_limits<double>::infinity();
  const double eta = sol.eta, beta = sol.beta;
  for (const auto& x : data.initial_points) {
    const double b = EvalTemplate(tmpl, sol.coeffs, x);
    Record(rep.initial, b - sol.sigma, eta,
           TemplateMagnitude(tmpl, sol.coeffs, x) + std::abs(sol.sigma) + std::abs(eta));
  }
  for (const auto& x : data.unsafe_points) {
    const double b = EvalTemplate(tmpl, sol.coeffs, x);
    Record(rep.unsafe, -b + sol.phi, eta,
           TemplateMagnitude(tmpl, sol.coeffs, x) + std::abs(sol.phi) + std::abs(eta));
  }
  for (const auto& s : data.transitions) {
    const double supply = EvalSupply(sol.supply, s.d, s.x);
    const double lhs = EvalTemplate(tmpl, sol.coeffs, s.next) - EvalTemplate(tmpl, sol.coeffs, s.x);
    Record(rep.decrease, lhs - supply, eta,
           TemplateMagnitude(tmpl, sol.coeffs, s.next) + TemplateMagnitude(tmpl, sol.coeffs, s.x) +
               SupplyMagnitude(sol.supply, s.d, s.x) + std::abs(eta));
    Record(rep.supply_bound, supply, beta, SupplyMagnitude(sol.supply, s.d, s.x) + std::abs(beta));
  }
  Record(rep.gap, sol.sigma + options.gap, sol.phi, std::abs(sol.sigma) + std::abs(sol.phi));
  rep.slope = -std::numeric_limits<double>::infinity();
  if (options.slope_bound) {
    for (const auto& [a, b] : data.slope_pairs) {
      const double diff = EvalTemplate(tmpl, sol.coeffs, a) - EvalTemplate(tmpl, sol.coeffs, b);
      Record(rep.slope, std::abs(diff), *options.slope_bound * (a - b).norm(),
             TemplateMagnitude(tmpl, sol.coeffs, a) + TemplateMagnitude(tmpl, sol.coeffs, b));
    }
  }
  auto bound = [&](double v, double cap) { Record(rep.bounds, std::abs(v), cap, cap); };
  for (int j = 0; j < sol.coeffs.size(); ++j) bound(sol.coeffs[j], options.coeff_bound);
  bound(sol.sigma, options.LevelBound());
  bound(sol.phi, options.LevelBound());
  for (const Eigen::MatrixXd* m : {&sol.supply.s11(), &sol.supply.s12(), &sol.supply.s22()}) {
    for (Eigen::Index k = 0; k < m->size(); ++k) bound(m->data()[k], options.coeff_bound);
  }
  // Empty groups contribute nothing.
  for (double* slot : {&rep.initial, &rep.unsafe, &rep.decrease, &rep.supply_bound, &rep.slope}) {
    if (!std::isfinite(*slot)) *slot = 0.0;
  }
  return rep;
}

ResidualReport CheckSolution(const ScpSolution& solution, const SubsystemClass& cls,
                             const SampleSet& samples, const ScpOptions& options) {
  return CheckSolution(solution, cls.stc_template(), SelectScpData(cls, samples), options);
}

void WriteLpFormat(const ScpProblem& problem, std::ostream& os) {
  const ScpLayout& layout = problem.layout;
  const LinearProgram& lp = problem.lp;
  os << std::setprecision(17);
  os << "\\ scenario program: " << lp.num_rows() << " rows, " << lp.num_vars() << " variables\n";
  os << "Minimize\n obj: " << layout.VariableName(layout.eta()) << " + "
     << layout.VariableName(layout.beta()) << "\nSubject To\n";
  for (int r = 0; r < lp.num_rows(); ++r) {
    if (problem.row_groups[r] == RowGroup::kBound) continue;
    os << " r" << r << ":";
    bool any = false;
    for (int k = 0; k < lp.num_vars(); ++k) {
      const double v = lp.G(r, k);
      if (v == 0.0) continue;
      os << (v < 0 ? " - " : (any ? " + " : " ")) << std::abs(v) << " " << layout.VariableName(k);
      any = true;
    }
    os << " <= " << lp.h[r] << "\n";
  }
  os << "Bounds\n";
  for (int k = 0; k < layout.bounded_count(); ++k) {
    const double cap = problem.options.BoundOf(layout, k);
    os << " " << -cap << " <= " << layout.VariableName(k) << " <= " << cap << "\n";
  }
  os << " " << layout.VariableName(layout.eta()) << " free\n";
  os << " " << layout.VariableName(layout.beta()) << " free\nEnd\n";
}

}  // namespace safecert
