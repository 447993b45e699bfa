#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace safecert {

/// Thrown when a caller hands in data that violates an operation's contract
/// (dimension mismatch, empty set, inverted bounds, ...).
class InvalidInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a black-box oracle or an external data file produces values
/// the pipeline cannot use (NaN, infinities).
class DataFaultError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned closed box [lower, upper] in R^n.
class IntervalBox {
 public:
  IntervalBox(Eigen::VectorXd lower, Eigen::VectorXd upper);

  /// Convenience for one-dimensional boxes.
  static IntervalBox Interval(double lower, double upper);

  /// Cartesian product a x b (coordinates of a first).
  static IntervalBox Product(const IntervalBox& a, const IntervalBox& b);

  int dim() const { return static_cast<int>(lower_.size()); }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  double width(int k) const { return upper_[k] - lower_[k]; }
  Eigen::VectorXd Center() const { return 0.5 * (lower_ + upper_); }

  /// Euclidean length of the main diagonal.
  double Diagonal() const { return (upper_ - lower_).norm(); }

  /// True when every coordinate has zero width.
  bool IsPoint() const;

  /// Membership with an absolute slack `tol` on every face.
  bool Contains(const Eigen::VectorXd& p, double tol = 0.0) const;
  bool ContainsBox(const IntervalBox& other, double tol = 0.0) const;

  /// Closed boxes intersect (sharing a face counts).
  bool Intersects(const IntervalBox& other) const;

  Eigen::VectorXd Clamp(const Eigen::VectorXd& p) const;

  bool operator==(const IntervalBox& other) const {
    return lower_ == other.lower_ && upper_ == other.upper_;
  }

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

/// Initial and unsafe sets of one subsystem; the two never intersect.
class SafetySpec {
 public:
  SafetySpec(IntervalBox initial, IntervalBox unsafe);

  const IntervalBox& initial() const { return initial_; }
  const IntervalBox& unsafe() const { return unsafe_; }

 private:
  IntervalBox initial_;
  IntervalBox unsafe_;
};

/// Monomial basis of a storage certificate B(c, x) = sum_j c_j prod_k x_k^e_jk.
class StcTemplate {
 public:
  StcTemplate(int state_dim, std::vector<std::vector<int>> exponents);

  /// All monomials of total degree <= `degree`, ordered by descending degree
  /// and, within one degree, by descending power of the first coordinate.
  static StcTemplate FullPolynomial(int state_dim, int degree);

  int state_dim() const { return state_dim_; }
  int term_count() const { return static_cast<int>(exponents_.size()); }
  const std::vector<std::vector<int>>& exponents() const { return exponents_; }

  /// Values of the basis functions at x.
  Eigen::VectorXd Basis(const Eigen::VectorXd& x) const;

  bool operator==(const StcTemplate& other) const {
    return state_dim_ == other.state_dim_ && exponents_ == other.exponents_;
  }

 private:
  int state_dim_;
  std::vector<std::vector<int>> exponents_;
};

class CoefficientVector {
 public:
  CoefficientVector() = default;
  explicit CoefficientVector(Eigen::VectorXd values) : values_(std::move(values)) {}

  int size() const { return static_cast<int>(values_.size()); }
  const Eigen::VectorXd& values() const { return values_; }
  double operator[](int j) const { return values_[j]; }

 private:
  Eigen::VectorXd values_;
};

/// B(coeffs, x). Throws InvalidInputError on dimension mismatch.
double EvalTemplate(const StcTemplate& tmpl, const CoefficientVector& coeffs,
                    const Eigen::VectorXd& x);

/// Quadratic supply rate [d; x]' [S11 S12; S12' S22] [d; x]. S21 is implied.
class SupplyRate {
 public:
  SupplyRate(Eigen::MatrixXd s11, Eigen::MatrixXd s12, Eigen::MatrixXd s22);

  /// All-zero supply rate for the given input/state dimensions.
  static SupplyRate Zero(int input_dim, int state_dim);

  int input_dim() const { return static_cast<int>(s11_.rows()); }
  int state_dim() const { return static_cast<int>(s22_.rows()); }
  const Eigen::MatrixXd& s11() const { return s11_; }
  const Eigen::MatrixXd& s12() const { return s12_; }
  const Eigen::MatrixXd& s22() const { return s22_; }

  /// The assembled symmetric (p+n) x (p+n) matrix.
  Eigen::MatrixXd FullMatrix() const;

 private:
  Eigen::MatrixXd s11_;
  Eigen::MatrixXd s12_;
  Eigen::MatrixXd s22_;
};

double EvalSupply(const SupplyRate& rate, const Eigen::VectorXd& d,
                  const Eigen::VectorXd& x);

/// One-step map x+ = f(x, d). Must be deterministic.
using TransitionOracle =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::VectorXd& d)>;

/// A class of identical subsystems: every copy in the network shares the
/// boxes, the safety specification, the certificate template and the
/// transition map. The oracle may be empty when only recorded data exists.
class SubsystemClass {
 public:
  SubsystemClass(std::string id, IntervalBox state_box, IntervalBox input_box,
                 SafetySpec safety, StcTemplate tmpl, TransitionOracle oracle);

  const std::string& id() const { return id_; }
  int state_dim() const { return state_box_.dim(); }
  int input_dim() const { return input_box_.dim(); }
  const IntervalBox& state_box() const { return state_box_; }
  const IntervalBox& input_box() const { return input_box_; }
  const SafetySpec& safety() const { return safety_; }
  const StcTemplate& stc_template() const { return template_; }
  bool has_oracle() const { return static_cast<bool>(oracle_); }

  /// Calls the oracle; throws DataFaultError on a non-finite result.
  Eigen::VectorXd Step(const Eigen::VectorXd& x, const Eigen::VectorXd& d) const;

  /// State box x input box, the domain of the decrease condition.
  IntervalBox JointBox() const { return IntervalBox::Product(state_box_, input_box_); }

 private:
  std::string id_;
  IntervalBox state_box_;
  IntervalBox input_box_;
  SafetySpec safety_;
  StcTemplate template_;
  TransitionOracle oracle_;
};

}  // namespace safecert
