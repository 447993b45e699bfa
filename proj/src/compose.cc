#include "safecert/compose.h"

#include <cmath>

namespace safecert {

ClassMargins ComputeClassMargins(double eta, double beta, double l1, double l2, double theta,
                                 double sigma, double phi, std::string class_id) {
  ClassMargins m;
  m.class_id = std::move(class_id);
  m.m1 = eta + l1 * theta;
  m.m2 = eta + beta + l2 * theta;
  m.gap = phi - sigma;
  return m;
}

std::string ToString(Condition condition) {
  switch (condition) {
    case Condition::kLevelGap: return "level-gap";
    case Condition::kLevelMargin: return "level-margin";
    case Condition::kDecreaseMargin: return "decrease-margin";
  }
  return "unknown";
}

std::string ToString(Verdict verdict) {
  return verdict == Verdict::kCertified ? "certified" : "not-certified";
}

bool ClassCertificate::operator==(const ClassCertificate& o) const {
  return id == o.id && state_box == o.state_box && input_box == o.input_box &&
         initial_box == o.initial_box && unsafe_box == o.unsafe_box &&
         stc_template == o.stc_template && coeffs.values() == o.coeffs.values() &&
         sigma == o.sigma && phi == o.phi && supply.s11() == o.supply.s11() &&
         supply.s12() == o.supply.s12() && supply.s22() == o.supply.s22() && eta == o.eta &&
         beta == o.beta && l1 == o.l1 && l2 == o.l2 && theta == o.theta &&
         sample_count == o.sample_count && grid_counts == o.grid_counts &&
         margins.class_id == o.margins.class_id && margins.m1 == o.margins.m1 &&
         margins.m2 == o.margins.m2 && margins.gap == o.margins.gap;
}

int NetworkCertificate::FindClass(const std::string& id) const {
  for (size_t k = 0; k < classes.size(); ++k) {
    if (classes[k].id == id) return static_cast<int>(k);
  }
  return -1;
}

bool NetworkCertificate::operator==(const NetworkCertificate& o) const {
  if (failures.size() != o.failures.size()) return false;
  for (size_t k = 0; k < failures.size(); ++k) {
    if (failures[k].class_id != o.failures[k].class_id ||
        failures[k].condition != o.failures[k].condition ||
        failures[k].amount != o.failures[k].amount) {
      return false;
    }
  }
  return classes == o.classes && multiplicities == o.multiplicities && sigma == o.sigma &&
         phi == o.phi && verdict == o.verdict && config_json == o.config_json;
}

ClassEvidence ClassEvidence::FromClass(const SubsystemClass& cls) {
  ClassEvidence e;
  e.id = cls.id();
  e.state_box = cls.state_box();
  e.input_box = cls.input_box();
  e.initial_box = cls.safety().initial();
  e.unsafe_box = cls.safety().unsafe();
  e.stc_template = cls.stc_template();
  return e;
}

namespace {

void RequireFinite(double v, const std::string& what, const std::string& id) {
  if (!std::isfinite(v) || v < 0.0) {
    throw InvalidInputError("Certify: class '" + id + "' has an invalid " + what);
  }
}

}  // namespace

NetworkCertificate Certify(const std::vector<ClassEvidence>& evidence,
                           std::vector<int> multiplicities) {
  if (evidence.empty()) throw InvalidInputError("Certify: no classes");
  if (multiplicities.empty()) multiplicities.assign(evidence.size(), 1);
  if (multiplicities.size() != evidence.size()) {
    throw InvalidInputError("Certify: one multiplicity per class is required");
  }
  NetworkCertificate cert;
  cert.multiplicities = multiplicities;
  for (size_t k = 0; k < evidence.size(); ++k) {
    const ClassEvidence& e = evidence[k];
    const std::string& id = e.id;
    if (!e.stc_template) throw InvalidInputError("Certify: class '" + id + "' has no template");
    if (!e.solution) throw InvalidInputError("Certify: class '" + id + "' has no solution");
    if (e.solution->status != ScpStatus::kOptimal) {
      throw InvalidInputError("Certify: class '" + id + "' has a non-optimal solution");
    }
    if (!e.l1 || !e.l2) throw InvalidInputError("Certify: class '" + id + "' has no Lipschitz estimates");
    if (!e.theta) throw InvalidInputError("Certify: class '" + id + "' has no dispersion");
    RequireFinite(*e.l1, "L1 estimate", id);
    RequireFinite(*e.l2, "L2 estimate", id);
    RequireFinite(*e.theta, "dispersion", id);
    if (multiplicities[k] < 0) throw InvalidInputError("Certify: negative multiplicity for '" + id + "'");

    const ScpSolution& s = *e.solution;
    ClassCertificate c;
    c.id = id;
    c.state_box = e.state_box;
    c.input_box = e.input_box;
    c.initial_box = e.initial_box;
    c.unsafe_box = e.unsafe_box;
    c.stc_template = *e.stc_template;
    c.coeffs = s.coeffs;
    c.sigma = s.sigma;
    c.phi = s.phi;
    c.supply = s.supply;
    c.eta = s.eta;
    c.beta = s.beta;
    c.l1 = *e.l1;
    c.l2 = *e.l2;
    c.theta = *e.theta;
    c.sample_count = e.sample_count;
    c.grid_counts = e.grid_counts;
    c.margins = ComputeClassMargins(c.eta, c.beta, c.l1, c.l2, c.theta, c.sigma, c.phi, id);

    if (!c.margins.gap_ok()) cert.failures.push_back({id, Condition::kLevelGap, -c.margins.gap});
    if (!c.margins.level_margin_ok()) {
      cert.failures.push_back({id, Condition::kLevelMargin, c.margins.m1});
    }
    if (!c.margins.decrease_margin_ok()) {
      cert.failures.push_back({id, Condition::kDecreaseMargin, c.margins.m2});
    }
    cert.sigma += multiplicities[k] * c.sigma;
    cert.phi += multiplicities[k] * c.phi;
    cert.classes.push_back(std::move(c));
  }
  cert.verdict = cert.failures.empty() ? Verdict::kCertified : Verdict::kNotCertified;
  return cert;
}

double EvalNetworkCertificate(const NetworkCertificate& certificate,
                              const std::vector<Eigen::VectorXd>& states,
                              const std::vector<int>& assignment) {
  if (states.size() != assignment.size()) {
    throw InvalidInputError("EvalNetworkCertificate: one class index per state is required");
  }
  double total = 0.0;
  for (size_t i = 0; i < states.size(); ++i) {
    const int k = assignment[i];
    if (k < 0 || k >= static_cast<int>(certificate.classes.size())) {
      throw InvalidInputError("EvalNetworkCertificate: class index out of range");
    }
    const ClassCertificate& c = certificate.classes[k];
    total += EvalTemplate(c.stc_template, c.coeffs, states[i]);
  }
  return total;
}

}  // namespace safecert
