#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "safecert/core.h"
#include "safecert/scp.h"

namespace safecert {

/// Per-class compositional quantities.
///   m1  = eta + L1 * theta          (must be <= 0)
///   m2  = eta + beta + L2 * theta   (must be <= 0)
///   gap = phi - sigma               (must be > 0)
struct ClassMargins {
  std::string class_id;
  double m1 = 0.0;
  double m2 = 0.0;
  double gap = 0.0;

  bool level_margin_ok() const { return m1 <= 0.0; }
  bool decrease_margin_ok() const { return m2 <= 0.0; }
  bool gap_ok() const { return gap > 0.0; }
  bool Passed() const { return level_margin_ok() && decrease_margin_ok() && gap_ok(); }
};

ClassMargins ComputeClassMargins(double eta, double beta, double l1, double l2, double theta,
                                 double sigma, double phi, std::string class_id = {});

enum class Condition { kLevelGap, kLevelMargin, kDecreaseMargin };

std::string ToString(Condition condition);

struct ConditionFailure {
  std::string class_id;
  Condition condition;
  /// Positive amount by which the condition is violated (for the gap,
  /// sigma - phi, which is zero when the levels coincide).
  double amount;
};

/// Everything one class contributes to the network certificate.
struct ClassCertificate {
  std::string id;
  IntervalBox state_box = IntervalBox::Interval(0, 0);
  IntervalBox input_box = IntervalBox::Interval(0, 0);
  IntervalBox initial_box = IntervalBox::Interval(0, 0);
  IntervalBox unsafe_box = IntervalBox::Interval(0, 0);
  StcTemplate stc_template{1, {{0}}};
  CoefficientVector coeffs;
  double sigma = 0.0;
  double phi = 0.0;
  SupplyRate supply = SupplyRate::Zero(1, 1);
  double eta = 0.0;
  double beta = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double theta = 0.0;
  int sample_count = 0;
  std::vector<int> grid_counts;
  ClassMargins margins;

  bool operator==(const ClassCertificate& other) const;
};

enum class Verdict { kCertified, kNotCertified };

std::string ToString(Verdict verdict);

struct NetworkCertificate {
  std::vector<ClassCertificate> classes;
  /// Number of surrogate subsystems drawn from each class.
  std::vector<int> multiplicities;
  /// Multiplicity-weighted sums of the class levels.
  double sigma = 0.0;
  double phi = 0.0;
  Verdict verdict = Verdict::kNotCertified;
  std::vector<ConditionFailure> failures;
  /// Canonical JSON text of the pipeline configuration (may be empty).
  std::string config_json;

  int FindClass(const std::string& id) const;
  bool operator==(const NetworkCertificate& other) const;
};

/// Inputs of one class to Certify. Missing entries are rejected.
struct ClassEvidence {
  std::string id;
  IntervalBox state_box = IntervalBox::Interval(0, 0);
  IntervalBox input_box = IntervalBox::Interval(0, 0);
  IntervalBox initial_box = IntervalBox::Interval(0, 0);
  IntervalBox unsafe_box = IntervalBox::Interval(0, 0);
  std::optional<StcTemplate> stc_template;
  std::optional<ScpSolution> solution;
  std::optional<double> l1;
  std::optional<double> l2;
  std::optional<double> theta;
  int sample_count = 0;
  std::vector<int> grid_counts;

  static ClassEvidence FromClass(const SubsystemClass& cls);
};

/// Per-class policy: certified iff every class has m1 <= 0, m2 <= 0 and
/// gap > 0. Margins of one class never offset another's.
/// `multiplicities` defaults to one copy per class.
NetworkCertificate Certify(const std::vector<ClassEvidence>& evidence,
                           std::vector<int> multiplicities = {});

/// Sum of B_i(x_i) over the surrogate subsystems; subsystem i uses class
/// `assignment[i]`.
double EvalNetworkCertificate(const NetworkCertificate& certificate,
                              const std::vector<Eigen::VectorXd>& states,
                              const std::vector<int>& assignment);

}  // namespace safecert
