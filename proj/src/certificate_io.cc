#include "safecert/certificate_io.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "safecert/config.h"

namespace safecert {

using nlohmann::json;

namespace {

double Finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw InvalidInputError(std::string("StoreCertificate: non-finite ") + what);
  }
  return v;
}

json MatrixToJson(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(Finite(m(r, c), "supply entry"));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd MatrixFromJson(const json& j, Eigen::Index rows, Eigen::Index cols) {
  const auto v = j.get<std::vector<std::vector<double>>>();
  if (static_cast<Eigen::Index>(v.size()) != rows) throw CertificateFormatError("matrix row count");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(v[r].size()) != cols) {
      throw CertificateFormatError("matrix column count");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[r][c];
  }
  return m;
}

Condition ParseCondition(const std::string& name) {
  for (Condition c : {Condition::kLevelGap, Condition::kLevelMargin, Condition::kDecreaseMargin}) {
    if (ToString(c) == name) return c;
  }
  throw CertificateFormatError("unknown condition '" + name + "'");
}

json ClassToJson(const ClassCertificate& c) {
  std::vector<double> coeffs(c.coeffs.values().data(),
                             c.coeffs.values().data() + c.coeffs.size());
  for (double v : coeffs) Finite(v, "coefficient");
  return json{
      {"id", c.id},
      {"state_box", BoxToJson(c.state_box)},
      {"input_box", BoxToJson(c.input_box)},
      {"initial_box", BoxToJson(c.initial_box)},
      {"unsafe_box", BoxToJson(c.unsafe_box)},
      {"template",
       {{"state_dim", c.stc_template.state_dim()}, {"exponents", c.stc_template.exponents()}}},
      {"coeffs", coeffs},
      {"sigma", Finite(c.sigma, "sigma")},
      {"phi", Finite(c.phi, "phi")},
      {"supply",
       {{"s11", MatrixToJson(c.supply.s11())},
        {"s12", MatrixToJson(c.supply.s12())},
        {"s22", MatrixToJson(c.supply.s22())}}},
      {"eta", Finite(c.eta, "eta")},
      {"beta", Finite(c.beta, "beta")},
      {"l1", Finite(c.l1, "l1")},
      {"l2", Finite(c.l2, "l2")},
      {"theta", Finite(c.theta, "theta")},
      {"sample_count", c.sample_count},
      {"grid_counts", c.grid_counts},
      {"margins",
       {{"m1", Finite(c.margins.m1, "m1")},
        {"m2", Finite(c.margins.m2, "m2")},
        {"gap", Finite(c.margins.gap, "gap")}}}};
}

IntervalBox BoxOf(const json& j, const std::string& where) {
  try {
    return BoxFromJson(j, where);
  } catch (const InvalidInputError& e) {
    throw CertificateFormatError(e.what());
  }
}

ClassCertificate ClassFromJson(const json& j) {
  ClassCertificate c;
  c.id = j.at("id").get<std::string>();
  c.state_box = BoxOf(j.at("state_box"), "state_box");
  c.input_box = BoxOf(j.at("input_box"), "input_box");
  c.initial_box = BoxOf(j.at("initial_box"), "initial_box");
  c.unsafe_box = BoxOf(j.at("unsafe_box"), "unsafe_box");
  const json& t = j.at("template");
  c.stc_template = StcTemplate(t.at("state_dim").get<int>(),
                               t.at("exponents").get<std::vector<std::vector<int>>>());
  const auto coeffs = j.at("coeffs").get<std::vector<double>>();
  if (static_cast<int>(coeffs.size()) != c.stc_template.term_count()) {
    throw CertificateFormatError("class '" + c.id + "': coefficient count differs from the template");
  }
  c.coeffs = CoefficientVector(
      Eigen::Map<const Eigen::VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size())));
  c.sigma = j.at("sigma").get<double>();
  c.phi = j.at("phi").get<double>();
  const int p = c.input_box.dim(), n = c.state_box.dim();
  const json& s = j.at("supply");
  c.supply = SupplyRate(MatrixFromJson(s.at("s11"), p, p), MatrixFromJson(s.at("s12"), p, n),
                        MatrixFromJson(s.at("s22"), n, n));
  c.eta = j.at("eta").get<double>();
  c.beta = j.at("beta").get<double>();
  c.l1 = j.at("l1").get<double>();
  c.l2 = j.at("l2").get<double>();
  c.theta = j.at("theta").get<double>();
  c.sample_count = j.at("sample_count").get<int>();
  c.grid_counts = j.at("grid_counts").get<std::vector<int>>();
  const json& m = j.at("margins");
  c.margins.class_id = c.id;
  c.margins.m1 = m.at("m1").get<double>();
  c.margins.m2 = m.at("m2").get<double>();
  c.margins.gap = m.at("gap").get<double>();
  return c;
}

}  // namespace

json CertificateToJson(const NetworkCertificate& cert) {
  json classes = json::array();
  for (const auto& c : cert.classes) classes.push_back(ClassToJson(c));
  json failures = json::array();
  for (const auto& f : cert.failures) {
    failures.push_back(
        {{"class", f.class_id}, {"condition", ToString(f.condition)}, {"amount", Finite(f.amount, "amount")}});
  }
  json config = cert.config_json.empty() ? json(nullptr) : json::parse(cert.config_json);
  return json{{"format", kCertificateFormat},
              {"version", kCertificateVersion},
              {"verdict", ToString(cert.verdict)},
              {"sigma", Finite(cert.sigma, "network sigma")},
              {"phi", Finite(cert.phi, "network phi")},
              {"multiplicities", cert.multiplicities},
              {"failures", failures},
              {"classes", classes},
              {"config", config}};
}

NetworkCertificate CertificateFromJson(const json& doc) {
  if (!doc.is_object() || !doc.contains("format") || !doc.at("format").is_string() ||
      doc.at("format").get<std::string>() != kCertificateFormat) {
    throw CertificateFormatError("not a safecert certificate");
  }
  if (!doc.contains("version") || !doc.at("version").is_number_integer()) {
    throw CertificateFormatError("certificate has no version");
  }
  const int version = doc.at("version").get<int>();
  if (version != kCertificateVersion) {
    throw CertificateFormatError("unsupported certificate version " + std::to_string(version) +
                                 " (expected " + std::to_string(kCertificateVersion) + ")");
  }
  try {
    NetworkCertificate cert;
    const auto verdict = doc.at("verdict").get<std::string>();
    if (verdict == ToString(Verdict::kCertified)) {
      cert.verdict = Verdict::kCertified;
    } else if (verdict == ToString(Verdict::kNotCertified)) {
      cert.verdict = Verdict::kNotCertified;
    } else {
      throw CertificateFormatError("unknown verdict '" + verdict + "'");
    }
    cert.sigma = doc.at("sigma").get<double>();
    cert.phi = doc.at("phi").get<double>();
    cert.multiplicities = doc.at("multiplicities").get<std::vector<int>>();
    for (const json& f : doc.at("failures")) {
      cert.failures.push_back({f.at("class").get<std::string>(),
                               ParseCondition(f.at("condition").get<std::string>()),
                               f.at("amount").get<double>()});
    }
    for (const json& c : doc.at("classes")) cert.classes.push_back(ClassFromJson(c));
    if (cert.multiplicities.size() != cert.classes.size()) {
      throw CertificateFormatError("one multiplicity per class is required");
    }
    const json& config = doc.at("config");
    if (!config.is_null()) cert.config_json = config.dump();
    return cert;
  } catch (const json::exception& e) {
    throw CertificateFormatError(std::string("certificate schema mismatch: ") + e.what());
  } catch (const InvalidInputError& e) {
    throw CertificateFormatError(std::string("certificate content rejected: ") + e.what());
  }
}

std::string SerializeCertificate(const NetworkCertificate& certificate) {
  return CertificateToJson(certificate).dump(2) + "\n";
}

NetworkCertificate ParseCertificate(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CertificateFormatError(std::string("certificate parse error: ") + e.what());
  }
  return CertificateFromJson(doc);
}

void StoreCertificate(const NetworkCertificate& certificate, const std::filesystem::path& path) {
  const std::string text = SerializeCertificate(certificate);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out.flush()) throw std::runtime_error("cannot write '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

NetworkCertificate LoadCertificate(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CertificateFormatError("cannot open certificate '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseCertificate(buf.str());
}

}  // namespace safecert
