// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "safecert/blackbox.h"
#include "safecert/lipschitz.h"
#include "safecert/pipeline.h"
#include "safecert/sampling.h"
#include "safecert/scp.h"
#include "safecert/verify.h"
#include "test_support.h"

namespace {

namespace fs = std::filesystem;
using namespace safecert;
using safecert::testing::Vec;
using safecert::testing::VertexEnumerationOptimum;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void Criterion(int number, double limit_seconds, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (seconds > limit_seconds) {
    o.pass = false;
    o.detail += " [over the " + std::to_string(limit_seconds) + " s limit]";
  }
  if (!o.pass) ++failures;
  std::printf("%s criterion %d: %s (%.3f s)\n", o.pass ? "PASS" : "FAIL", number, o.detail.c_str(),
              seconds);
  std::fflush(stdout);
}

std::string Format(const char* fmt, double a, double b = 0, double c = 0, double d = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, a, b, c, d);
  return buf;
}

fs::path Scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "safecert_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string RunCli(const std::string& args) {
  const fs::path capture = Scratch("cli") / "out.txt";
  const std::string cmd =
      std::string("\"") + SAFECERT_CLI + "\" " + args + " > \"" + capture.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw std::runtime_error("'" + args + "' failed: " + Slurp(capture));
  }
  return Slurp(capture);
}

double ValueAfter(const std::string& text, const std::string& label) {
  const auto pos = text.find(label);
  if (pos == std::string::npos) throw std::runtime_error("no '" + label + "' in output");
  return std::stod(text.substr(pos + label.size()));
}

Outcome Margins(const std::string& args, double m1, double tol1, double m2, double tol2) {
  const std::string out = RunCli("margins " + args);
  const double a = ValueAfter(out, "m1 = "), b = ValueAfter(out, "m2 = ");
  return {std::abs(a - m1) <= tol1 && std::abs(b - m2) <= tol2,
          Format("m1 = %.4f (expected %.4f), m2 = %.4f (expected %.4f)", a, m1, b, m2)};
}

Outcome PaperRoomLevelSets() {
  CertificateView v{RoomClass().stc_template(), CoefficientVector(Vec({0.0151, -0.7, -0.7}))};
  v.sigma = 150;
  v.phi = 200;
  const LevelSetReport r = CheckLevelSets(v, RoomClass().safety(), {1001});
  auto b = [](double x) { return 0.0151 * std::pow(x, 4) - 0.7 * x * x - 0.7; };
  const bool ok = std::abs(r.max_initial - b(11)) <= 1e-6 && std::abs(r.min_unsafe - b(12)) <= 1e-6 &&
                  std::abs(r.max_initial - 135.6791) <= 1e-4 &&
                  std::abs(r.min_unsafe - 211.6136) <= 1e-4 && r.Passed();
  return {ok, Format("max on [10,11] = %.4f, min on [12,13] = %.4f, sigma 150, phi 200",
                     r.max_initial, r.min_unsafe)};
}

Outcome LipschitzConvergence() {
  LipschitzConfig c;
  c.gamma = 1e-3;
  c.inner_count = 200;
  c.outer_count = 50;
  const ScalarTarget sine = [](const Eigen::VectorXd& x) { return std::sin(x[0]); };
  const ScalarTarget square = [](const Eigen::VectorXd& x) { return x[0] * x[0]; };
  const IntervalBox sine_box = IntervalBox::Interval(0, 2 * M_PI);
  const IntervalBox square_box = IntervalBox::Interval(0, 1);
  const double ls = EstimateLipschitz(sine, sine_box, c).value;
  const double lq = EstimateLipschitz(square, square_box, c).value;
  bool monotone = true;
  for (const auto& [t, box] : {std::pair{sine, sine_box}, std::pair{square, square_box}}) {
    double previous = 0.0;
    for (const LipschitzConfig& step : RefinementLadder()) {
      const double l = EstimateLipschitz(t, box, step).value;
      monotone = monotone && l >= previous;
      previous = l;
    }
  }
  const bool ok = std::abs(ls - 1.0) <= 0.05 && std::abs(lq - 2.0) <= 0.1 && monotone;
  return {ok, Format("sin %.6f, x^2 %.6f, ladder ", ls, lq) + (monotone ? "non-decreasing" : "decreasing")};
}

Outcome ScpOracle() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0), s(-1.0, 1.0);
  int lp_checked = 0, scp_checked = 0;
  double worst = 0.0;
  bool ok = true;
  // Random LPs with at most four variables.
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 3, rows = 3 + trial % 5;
    LinearProgram lp;
    lp.G = RowMatrix::Zero(rows + 2 * n, n);
    lp.h = Eigen::VectorXd::Zero(rows + 2 * n);
    lp.c = Eigen::VectorXd::Zero(n);
    for (int r = 0; r < rows; ++r) {
      for (int k = 0; k < n; ++k) lp.G(r, k) = s(rng);
      lp.h[r] = 0.2 + u(rng);
    }
    for (int k = 0; k < n; ++k) {
      lp.G(rows + 2 * k, k) = 1.0;
      lp.G(rows + 2 * k + 1, k) = -1.0;
      lp.h[rows + 2 * k] = lp.h[rows + 2 * k + 1] = 1.0 + 4.0 * u(rng);
      lp.c[k] = s(rng);
    }
    const auto reference = VertexEnumerationOptimum(lp);
    const LpResult r = SolveLinearProgram(lp);
    if (!reference || r.status != LpStatus::kOptimal) {
      ok = false;
      continue;
    }
    const double err = std::abs(r.objective - *reference);
    worst = std::max(worst, err);
    ok = ok && err <= 1e-6;
    ++lp_checked;
  }
  // Tiny SCPs: one-term template, scalar state and input.
  for (int trial = 0; trial < 24; ++trial) {
    ScpData data;
    data.initial_points.push_back(Vec({0.4 * u(rng)}));
    data.unsafe_points.push_back(Vec({0.6 + 0.4 * u(rng)}));
    for (int z = 0; z < 2; ++z) {
      const double x = u(rng);
      data.transitions.push_back({Vec({x}), Vec({u(rng)}), Vec({0.3 * x + 0.5 * u(rng)})});
    }
    ScpOptions options;
    options.coeff_bound = 1.0 + trial % 3;
    options.gap = 0.05 * (trial % 4);
    const ScpProblem p = BuildScp(StcTemplate(1, {{1 + trial % 3}}), 1, data, options);
    const auto reference = VertexEnumerationOptimum(p.lp);
    const ScpSolution sol = SolveScp(p);
    if (!reference || sol.status != ScpStatus::kOptimal) {
      ok = false;
      continue;
    }
    const double err = std::abs(sol.objective - *reference);
    worst = std::max(worst, err);
    ok = ok && err <= 1e-6;
    ++scp_checked;
  }
  // Fixed point x = f(x, d) = 0 with B = x^2.
  ScpData fixed;
  fixed.transitions.push_back({Vec({0.0}), Vec({0.0}), Vec({0.0})});
  fixed.initial_points.push_back(Vec({0.0}));
  fixed.unsafe_points.push_back(Vec({1.0}));
  ScpOptions unit;
  unit.coeff_bound = 1.0;
  unit.gap = 0.0;
  const ScpSolution zero = SolveScp(BuildScp(StcTemplate(1, {{2}}), 1, fixed, unit));
  ok = ok && lp_checked >= 20 && scp_checked >= 20 && zero.status == ScpStatus::kOptimal &&
       zero.objective == 0.0;
  return {ok, Format("%g LPs and %g SCPs match vertex enumeration (worst error %.2e); fixed-point "
                     "objective %g",
                     lp_checked, scp_checked, worst, zero.objective)};
}

// Largest one-step change of the network certificate along every portrait.
double LargestIncrease(const PipelineResult& r) {
  const NetworkCertificate& cert = *r.certificate;
  double worst = -INFINITY;
  for (const TopologyRun& run : r.portraits) {
    const SurrogateNetwork net =
        MixedSurrogate(ClassesOfCertificate(cert), run.topology.surrogate_size);
    for (const Trajectory& t : run.portrait.trajectories) {
      for (size_t k = 0; k + 1 < t.states.size(); ++k) {
        worst = std::max(worst, EvalNetworkCertificate(cert, t.states[k + 1], net.assignment) -
                                    EvalNetworkCertificate(cert, t.states[k], net.assignment));
      }
    }
  }
  return worst;
}

Outcome EndToEnd(const std::string& name, int expected_terms) {
  PipelineConfig config = LoadConfig(fs::path(SAFECERT_SOURCE_DIR) / "configs" / (name + ".json"));
  config.output_dir = Scratch(name).string();
  const PipelineResult r = RunPipeline(config);
  if (!r.certificate) return {false, "no certificate"};
  const ClassCertificate& c = r.certificate->classes.at(0);
  const ClassVerification& v = r.verification.at(0);
  bool ok = r.status == PipelineStatus::kCertified && c.theta <= 0.1 + 1e-12 &&
            static_cast<int>(c.coeffs.size()) == expected_terms && config.verify_refinement == 10 &&
            v.level_sets.Passed() && v.heatmap && v.heatmap->Passed() && r.portraits.size() == 3;
  std::string portraits;
  for (const TopologyRun& t : r.portraits) {
    ok = ok && t.portrait.unsafe_count == 0 && t.portrait.trajectories.size() == 25 &&
         t.topology.surrogate_size == 10 && t.portrait.trajectories[0].states.size() == 101;
    portraits += " " + ToString(t.topology.kind) + ":" + std::to_string(t.portrait.unsafe_count);
  }
  const double increase = LargestIncrease(r);
  ok = ok && increase <= 1e-6;
  return {ok, ToString(r.status) + Format(", theta %.4g, m1 %.4f, m2 %.4f, heatmap max %.4g", c.theta,
                                          c.margins.m1, c.margins.m2,
                                          v.heatmap ? v.heatmap->max_value : NAN) +
                  Format(" over %.0f points, unsafe entries", v.heatmap ? v.heatmap->points : 0) +
                  portraits + Format(", largest certificate step %.3g", increase)};
}

// Nearest sample by exhaustive search over the sample set.
double BruteNearest(const Eigen::VectorXd& p, const std::vector<Eigen::VectorXd>& samples) {
  double best = INFINITY;
  for (const auto& s : samples) best = std::min(best, (p - s).squaredNorm());
  return std::sqrt(best);
}

Outcome Dispersion() {
  std::string detail;
  bool ok = true;
  for (const char* name : {"room", "platoon"}) {
    const PipelineConfig config =
        LoadConfig(fs::path(SAFECERT_SOURCE_DIR) / "configs" / (std::string(name) + ".json"));
    const ClassConfig& cc = config.classes.at(0);
    const SubsystemClass cls = BuildClass(cc);
    const SampleSet s = CollectPairs(cls, cc.grid_state, cc.grid_input);
    const std::vector<Eigen::VectorXd> samples = s.JointPoints();
    const IntervalBox joint = cls.JointBox();
    std::vector<int> counts = cc.grid_state;
    counts.insert(counts.end(), cc.grid_input.begin(), cc.grid_input.end());
    const std::vector<int> probe = RefineCounts(counts, 10);
    const int dims = joint.dim();

    // The samples form a product grid, so the nearest sample is found axis by
    // axis from the sorted sample coordinates.
    std::vector<std::vector<double>> axes(dims);
    for (int k = 0; k < dims; ++k) {
      std::set<double> values;
      for (const auto& z : samples) values.insert(z[k]);
      axes[k].assign(values.begin(), values.end());
    }
    long long product = 1;
    for (const auto& a : axes) product *= static_cast<long long>(a.size());
    ok = ok && product == static_cast<long long>(samples.size());

    std::vector<std::vector<double>> probe_axes(dims);
    for (int k = 0; k < dims; ++k) {
      for (int i = 0; i < probe[k]; ++i) {
        probe_axes[k].push_back(joint.lower()[k] +
                                (joint.upper()[k] - joint.lower()[k]) * i / (probe[k] - 1));
      }
    }
    std::vector<std::vector<double>> per_axis(dims);
    for (int k = 0; k < dims; ++k) {
      for (double q : probe_axes[k]) {
        double best = INFINITY;
        for (double a : axes[k]) best = std::min(best, std::abs(q - a));
        per_axis[k].push_back(best * best);
      }
    }
    // Worst probe: sum over axes of the per-axis worst squared gaps, since
    // the probe grid is also a product.
    double worst_sq = 0.0;
    for (int k = 0; k < dims; ++k) {
      worst_sq += *std::max_element(per_axis[k].begin(), per_axis[k].end());
    }
    const double worst = std::sqrt(worst_sq);

    // Exhaustive cross-check on every probe for the small grid and on a
    // random subset for the large one.
    long long probes = 1;
    for (int c : probe) probes *= c;
    std::mt19937_64 rng(5);
    const long long checks = std::min<long long>(probes, 100000);
    double brute_worst = 0.0;
    for (long long t = 0; t < checks; ++t) {
      long long index = checks == probes ? t : static_cast<long long>(rng() % probes);
      Eigen::VectorXd p(dims);
      for (int k = dims - 1; k >= 0; --k) {
        p[k] = probe_axes[k][index % probe[k]];
        index /= probe[k];
      }
      brute_worst = std::max(brute_worst, BruteNearest(p, samples));
    }
    const bool sound = worst <= s.dispersion + 1e-12 && brute_worst <= s.dispersion + 1e-12;
    ok = ok && sound;
    detail += std::string(detail.empty() ? "" : "; ") + name +
              Format(": theta %.6g, worst probe distance %.6g over %.0f probes (exhaustive check "
                     "on %.0f)",
                     s.dispersion, worst, static_cast<double>(probes), static_cast<double>(checks));
  }
  return {ok, detail};
}

Outcome Determinism() {
  std::string texts[2];
  for (int k = 0; k < 2; ++k) {
    PipelineConfig config = LoadConfig(fs::path(SAFECERT_SOURCE_DIR) / "configs" / "room.json");
    const fs::path dir = Scratch("determinism_" + std::to_string(k));
    config.output_dir = dir.string();
    RunPipeline(config);
    texts[k] = Slurp(dir / "certificate.json");
  }
  const bool ok = !texts[0].empty() && texts[0] == texts[1];
  return {ok, Format("two room runs, certificate files of %.0f and %.0f bytes, ",
                     static_cast<double>(texts[0].size()), static_cast<double>(texts[1].size())) +
                  (ok ? "identical" : "different")};
}

}  // namespace

int main() {
  Criterion(1, 0.1, [] {
    return Margins("--eta -16.928 --beta 0.02 --l1 25.51 --l2 14.8845 --theta 0.1", -14.3770, 1e-3,
                   -15.4195, 1e-3);
  });
  Criterion(2, 0.1, [] {
    return Margins("--eta -0.4098 --beta 0 --l1 7.8288 --l2 7.4875 --theta 0.05", -0.0184, 1e-3,
                   -0.0355, 1.5e-3);
  });
  Criterion(3, 1.0, PaperRoomLevelSets);
  Criterion(4, 5.0, LipschitzConvergence);
  Criterion(5, 10.0, ScpOracle);
  Criterion(6, 60.0, [] { return EndToEnd("room", 3); });
  Criterion(7, 300.0, [] { return EndToEnd("platoon", 15); });
  Criterion(8, 10.0, Dispersion);
  Criterion(9, 120.0, Determinism);
  return failures == 0 ? 0 : 1;
}
