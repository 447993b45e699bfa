#include "safecert/core.h"

#include <cmath>
#include <sstream>

namespace safecert {

namespace {

std::string DescribeVector(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index k = 0; k < v.size(); ++k) os << (k ? ", " : "") << v[k];
  os << ")";
  return os.str();
}

bool IsSymmetric(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12;
}

}  // namespace

IntervalBox::IntervalBox(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() < 1) throw InvalidInputError("IntervalBox: dimension must be >= 1");
  if (lower_.size() != upper_.size()) {
    throw InvalidInputError("IntervalBox: lower and upper have different dimensions");
  }
  for (Eigen::Index k = 0; k < lower_.size(); ++k) {
    if (!std::isfinite(lower_[k]) || !std::isfinite(upper_[k]) || lower_[k] > upper_[k]) {
      throw InvalidInputError("IntervalBox: invalid bounds " + DescribeVector(lower_) +
                              " .. " + DescribeVector(upper_));
    }
  }
}

IntervalBox IntervalBox::Interval(double lower, double upper) {
  return IntervalBox(Eigen::VectorXd::Constant(1, lower), Eigen::VectorXd::Constant(1, upper));
}

IntervalBox IntervalBox::Product(const IntervalBox& a, const IntervalBox& b) {
  Eigen::VectorXd lo(a.dim() + b.dim()), hi(a.dim() + b.dim());
  lo << a.lower(), b.lower();
  hi << a.upper(), b.upper();
  return IntervalBox(std::move(lo), std::move(hi));
}

bool IntervalBox::IsPoint() const { return (upper_ - lower_).maxCoeff() == 0.0; }

bool IntervalBox::Contains(const Eigen::VectorXd& p, double tol) const {
  if (p.size() != lower_.size()) return false;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p[k] < lower_[k] - tol || p[k] > upper_[k] + tol) return false;
  }
  return true;
}

bool IntervalBox::ContainsBox(const IntervalBox& other, double tol) const {
  return Contains(other.lower_, tol) && Contains(other.upper_, tol);
}

bool IntervalBox::Intersects(const IntervalBox& other) const {
  if (other.dim() != dim()) return false;
  for (int k = 0; k < dim(); ++k) {
    if (other.upper_[k] < lower_[k] || other.lower_[k] > upper_[k]) return false;
  }
  return true;
}

Eigen::VectorXd IntervalBox::Clamp(const Eigen::VectorXd& p) const {
  return p.cwiseMax(lower_).cwiseMin(upper_);
}

SafetySpec::SafetySpec(IntervalBox initial, IntervalBox unsafe)
    : initial_(std::move(initial)), unsafe_(std::move(unsafe)) {
  if (initial_.dim() != unsafe_.dim()) {
    throw InvalidInputError("SafetySpec: initial and unsafe boxes differ in dimension");
  }
  if (initial_.Intersects(unsafe_)) {
    throw InvalidInputError("SafetySpec: initial and unsafe boxes overlap");
  }
}

StcTemplate::StcTemplate(int state_dim, std::vector<std::vector<int>> exponents)
    : state_dim_(state_dim), exponents_(std::move(exponents)) {
  if (state_dim_ < 1) throw InvalidInputError("StcTemplate: state_dim must be >= 1");
  if (exponents_.empty()) throw InvalidInputError("StcTemplate: at least one term required");
  for (const auto& e : exponents_) {
    if (static_cast<int>(e.size()) != state_dim_) {
      throw InvalidInputError("StcTemplate: exponent vector length differs from state_dim");
    }
    for (int p : e) {
      if (p < 0) throw InvalidInputError("StcTemplate: negative exponent");
    }
  }
}

namespace {

// Appends every exponent vector of total degree `remaining` over coordinates
// [k, n), highest power of coordinate k first.
void AppendDegree(int k, int remaining, std::vector<int>& current,
                  std::vector<std::vector<int>>& out) {
  const int n = static_cast<int>(current.size());
  if (k == n - 1) {
    current[k] = remaining;
    out.push_back(current);
    return;
  }
  for (int p = remaining; p >= 0; --p) {
    current[k] = p;
    AppendDegree(k + 1, remaining - p, current, out);
  }
}

}  // namespace

StcTemplate StcTemplate::FullPolynomial(int state_dim, int degree) {
  if (state_dim < 1 || degree < 0) {
    throw InvalidInputError("StcTemplate::FullPolynomial: invalid dimension or degree");
  }
  std::vector<std::vector<int>> terms;
  std::vector<int> current(state_dim, 0);
  for (int total = degree; total >= 0; --total) AppendDegree(0, total, current, terms);
  return StcTemplate(state_dim, std::move(terms));
}

Eigen::VectorXd StcTemplate::Basis(const Eigen::VectorXd& x) const {
  if (x.size() != state_dim_) {
    throw InvalidInputError("StcTemplate::Basis: point dimension " + std::to_string(x.size()) +
                            " != state_dim " + std::to_string(state_dim_));
  }
  Eigen::VectorXd out(term_count());
  for (int j = 0; j < term_count(); ++j) {
    double v = 1.0;
    for (int k = 0; k < state_dim_; ++k) {
      for (int p = 0; p < exponents_[j][k]; ++p) v *= x[k];
    }
    out[j] = v;
  }
  return out;
}

double EvalTemplate(const StcTemplate& tmpl, const CoefficientVector& coeffs,
                    const Eigen::VectorXd& x) {
  if (coeffs.size() != tmpl.term_count()) {
    throw InvalidInputError("EvalTemplate: " + std::to_string(coeffs.size()) +
                            " coefficients for a template with " +
                            std::to_string(tmpl.term_count()) + " terms");
  }
  return coeffs.values().dot(tmpl.Basis(x));
}

SupplyRate::SupplyRate(Eigen::MatrixXd s11, Eigen::MatrixXd s12, Eigen::MatrixXd s22)
    : s11_(std::move(s11)), s12_(std::move(s12)), s22_(std::move(s22)) {
  if (!IsSymmetric(s11_)) throw InvalidInputError("SupplyRate: S11 must be square symmetric");
  if (!IsSymmetric(s22_)) throw InvalidInputError("SupplyRate: S22 must be square symmetric");
  if (s12_.rows() != s11_.rows() || s12_.cols() != s22_.rows()) {
    throw InvalidInputError("SupplyRate: S12 must be input_dim x state_dim");
  }
}

SupplyRate SupplyRate::Zero(int input_dim, int state_dim) {
  return SupplyRate(Eigen::MatrixXd::Zero(input_dim, input_dim),
                    Eigen::MatrixXd::Zero(input_dim, state_dim),
                    Eigen::MatrixXd::Zero(state_dim, state_dim));
}

Eigen::MatrixXd SupplyRate::FullMatrix() const {
  const int p = input_dim(), n = state_dim();
  Eigen::MatrixXd full(p + n, p + n);
  full.topLeftCorner(p, p) = s11_;
  full.topRightCorner(p, n) = s12_;
  full.bottomLeftCorner(n, p) = s12_.transpose();
  full.bottomRightCorner(n, n) = s22_;
  return full;
}

double EvalSupply(const SupplyRate& rate, const Eigen::VectorXd& d, const Eigen::VectorXd& x) {
  if (d.size() != rate.input_dim() || x.size() != rate.state_dim()) {
    throw InvalidInputError("EvalSupply: vector dimensions do not match the supply rate");
  }
  return d.dot(rate.s11() * d) + 2.0 * d.dot(rate.s12() * x) + x.dot(rate.s22() * x);
}

SubsystemClass::SubsystemClass(std::string id, IntervalBox state_box, IntervalBox input_box,
                               SafetySpec safety, StcTemplate tmpl, TransitionOracle oracle)
    : id_(std::move(id)),
      state_box_(std::move(state_box)),
      input_box_(std::move(input_box)),
      safety_(std::move(safety)),
      template_(std::move(tmpl)),
      oracle_(std::move(oracle)) {
  if (safety_.initial().dim() != state_box_.dim()) {
    throw InvalidInputError("class '" + id_ + "': safety boxes differ from state dimension");
  }
  if (!state_box_.ContainsBox(safety_.initial()) || !state_box_.ContainsBox(safety_.unsafe())) {
    throw InvalidInputError("class '" + id_ + "': initial and unsafe boxes must lie in the state box");
  }
  if (template_.state_dim() != state_box_.dim()) {
    throw InvalidInputError("class '" + id_ + "': template dimension differs from state dimension");
  }
}

Eigen::VectorXd SubsystemClass::Step(const Eigen::VectorXd& x, const Eigen::VectorXd& d) const {
  if (!oracle_) throw InvalidInputError("class '" + id_ + "' has no transition oracle");
  if (x.size() != state_dim() || d.size() != input_dim()) {
    throw InvalidInputError("class '" + id_ + "': step called with wrong dimensions");
  }
  Eigen::VectorXd next = oracle_(x, d);
  if (next.size() != state_dim() || !next.allFinite()) {
    throw DataFaultError("class '" + id_ + "': oracle returned an invalid state at x=" +
                         DescribeVector(x) + ", d=" + DescribeVector(d));
  }
  return next;
}

}  // namespace safecert
