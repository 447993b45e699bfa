#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "safecert/certificate_io.h"
#include "safecert/compose.h"
#include "safecert/config.h"
#include "safecert/lipschitz.h"
#include "safecert/pipeline.h"
#include "safecert/verify.h"

namespace {

using nlohmann::json;
using namespace safecert;

constexpr int kExitUsage = 2;

json ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
}

template <typename T>
void Override(json& doc, const char* section, const char* key, const std::optional<T>& value) {
  if (!value) return;
  if (!doc.contains(section)) doc[section] = json::object();
  doc[section][key] = *value;
}

struct SynthArgs {
  std::string config;
  std::optional<std::string> output_dir;
  std::optional<int> max_retries;
  bool no_refine = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> gamma;
  std::optional<double> coeff_bound;
  std::optional<double> gap;
  std::optional<std::string> topology;
  std::optional<int> surrogate_size;
  std::optional<int> steps;
  std::optional<int> trajectories;
  std::optional<int> verify_refinement;
  bool export_lp = false;
  bool skip_verification = false;
};

int RunSynth(const SynthArgs& a) {
  json doc = ReadJson(a.config);
  if (a.output_dir) doc["output_dir"] = std::filesystem::absolute(*a.output_dir).string();
  Override(doc, "refine", "max_retries", a.max_retries);
  if (a.no_refine) Override(doc, "refine", "enabled", std::optional<bool>(false));
  Override(doc, "lipschitz", "seed", a.seed);
  Override(doc, "lipschitz", "gamma", a.gamma);
  Override(doc, "scp", "coeff_bound", a.coeff_bound);
  Override(doc, "scp", "gap", a.gap);
  if (a.export_lp) Override(doc, "scp", "export_lp", std::optional<bool>(true));
  Override(doc, "simulation", "topology", a.topology);
  Override(doc, "simulation", "surrogate_size", a.surrogate_size);
  Override(doc, "simulation", "steps", a.steps);
  Override(doc, "simulation", "trajectories", a.trajectories);
  Override(doc, "verify", "refinement", a.verify_refinement);
  PipelineConfig config = ParseConfig(doc, std::filesystem::path(a.config).parent_path());

  PipelineOptions options;
  options.skip_verification = a.skip_verification;
  const PipelineResult result = RunPipeline(config, options);
  WriteReport(result, config, std::cout);
  return result.ExitCode();
}

int RunVerify(const std::string& path, int refinement) {
  const NetworkCertificate cert = LoadCertificate(path);
  const auto classes = ClassesOfCertificate(cert);
  bool ok = cert.verdict == Verdict::kCertified;
  std::cout << "verdict: " << ToString(cert.verdict) << "\n";
  for (size_t k = 0; k < cert.classes.size(); ++k) {
    const ClassCertificate& c = cert.classes[k];
    const SubsystemClass& cls = classes[k];
    const CertificateView view = CertificateView::Of(c);
    std::cout << "class " << c.id << "\n";
    std::printf("  m1 = %.4f, m2 = %.4f, phi - sigma = %.6g\n", c.margins.m1, c.margins.m2,
                c.margins.gap);
    const int n = cls.state_dim();
    std::vector<int> joint = c.grid_counts;
    if (joint.empty()) joint.assign(n + cls.input_dim(), 11);
    const std::vector<int> state(joint.begin(), joint.begin() + n);
    const LevelSetReport levels = CheckLevelSets(view, cls.safety(), RefineCounts(state, refinement));
    std::printf("  max B on initial %.10g (sigma %.10g): %s\n", levels.max_initial, levels.sigma,
                levels.initial_ok() ? "pass" : "fail");
    std::printf("  min B on unsafe %.10g (phi %.10g): %s\n", levels.min_unsafe, levels.phi,
                levels.unsafe_ok() ? "pass" : "fail");
    ok = ok && levels.Passed();
    if (cls.has_oracle()) {
      const HeatmapSummary heat = DecreaseHeatmap(cls, view, RefineCounts(joint, refinement));
      std::printf("  decrease max %.6g over %lld points: %s\n", heat.max_value, heat.points,
                  heat.Passed() ? "pass" : "fail");
      ok = ok && heat.Passed();
    } else {
      std::cout << "  decrease heatmap skipped (no oracle)\n";
    }
  }
  std::cout << (ok ? "verification passed" : "verification failed") << "\n";
  return ok ? 0 : 1;
}

struct LipschitzArgs {
  std::string function = "sin";
  double lower = 0.0;
  double upper = 2.0 * M_PI;
  std::string certificate;
  std::string class_id;
  LipschitzConfig config;
  bool ladder = false;
};

void PrintEstimate(const char* label, const LipschitzEstimate& e) {
  std::printf("%s = %.6f%s\n", label, e.value, e.fallback_used ? " (largest observed slope)" : "");
}

int RunLipschitz(const LipschitzArgs& a) {
  a.config.Validate();
  if (!a.certificate.empty()) {
    const NetworkCertificate cert = LoadCertificate(a.certificate);
    const auto classes = ClassesOfCertificate(cert);
    const int k = a.class_id.empty() ? 0 : cert.FindClass(a.class_id);
    if (k < 0) throw InvalidInputError("no class '" + a.class_id + "' in the certificate");
    if (!classes[k].has_oracle()) throw InvalidInputError("class has no oracle");
    const ClassLipschitz l = EstimateForClass(classes[k], cert.classes[k].coeffs, a.config);
    PrintEstimate("L1", l.l1);
    PrintEstimate("L2", l.l2);
    return 0;
  }
  ScalarTarget target;
  if (a.function == "sin") {
    target = [](const Eigen::VectorXd& x) { return std::sin(x[0]); };
  } else if (a.function == "square") {
    target = [](const Eigen::VectorXd& x) { return x[0] * x[0]; };
  } else if (a.function == "cubic") {
    target = [](const Eigen::VectorXd& x) { return x[0] * x[0] * x[0]; };
  } else {
    throw InvalidInputError("unknown function '" + a.function + "'");
  }
  const IntervalBox box = IntervalBox::Interval(a.lower, a.upper);
  if (a.ladder) {
    for (const LipschitzConfig& step : RefinementLadder(a.config.seed)) {
      const LipschitzEstimate e = EstimateLipschitz(target, box, step);
      std::printf("gamma %g, inner %d, outer %d: L = %.6f\n", step.gamma, step.inner_count,
                  step.outer_count, e.value);
    }
    return 0;
  }
  PrintEstimate("L", EstimateLipschitz(target, box, a.config));
  return 0;
}

int RunSimulate(const std::string& path, const std::optional<std::string>& topology,
                const std::optional<int>& steps, const std::optional<int>& trajectories,
                const std::optional<int>& size, const std::string& output) {
  json doc = ReadJson(path);
  Override(doc, "simulation", "topology", topology);
  Override(doc, "simulation", "steps", steps);
  Override(doc, "simulation", "trajectories", trajectories);
  Override(doc, "simulation", "surrogate_size", size);
  const PipelineConfig config = ParseConfig(doc, std::filesystem::path(path).parent_path());
  std::vector<SubsystemClass> classes;
  for (const ClassConfig& cc : config.classes) {
    classes.push_back(BuildClass(cc));
    if (!classes.back().has_oracle()) {
      throw ConfigError("class '" + cc.id + "' has no dynamics to simulate");
    }
  }
  const SurrogateNetwork net = MixedSurrogate(classes, config.topology.surrogate_size);
  const PhasePortrait p = RunPhasePortrait(net, config.topology, {config.trajectories, config.steps});
  std::cout << ToString(config.topology.kind) << ": " << p.trajectories.size()
            << " trajectories, unsafe entries " << p.unsafe_count << ", state-box exits "
            << p.exit_count << ", clamp events " << p.clamp_events << "\n";
  if (!output.empty()) {
    std::ofstream out(output);
    if (!out) throw std::runtime_error("cannot write '" + output + "'");
    WriteTrajectoryCsv(p, out);
  }
  return p.Safe() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven safety certificates for networks of black-box subsystems"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Synthesize and check a network certificate");
  synth_cmd->add_option("config", synth.config, "Configuration file")->required();
  synth_cmd->add_option("-o,--output-dir", synth.output_dir, "Output directory");
  synth_cmd->add_option("--max-retries", synth.max_retries, "Grid refinements of failing classes");
  synth_cmd->add_flag("--no-refine", synth.no_refine, "Disable grid refinement");
  synth_cmd->add_option("--seed", synth.seed, "Lipschitz sampling seed");
  synth_cmd->add_option("--gamma", synth.gamma, "Lipschitz neighbourhood radius");
  synth_cmd->add_option("--coeff-bound", synth.coeff_bound, "Coefficient bound");
  synth_cmd->add_option("--gap", synth.gap, "Required phi - sigma");
  synth_cmd->add_option("--topology", synth.topology, "cascade, ring or dense-decay");
  synth_cmd->add_option("--surrogate-size", synth.surrogate_size, "Subsystems in the surrogate");
  synth_cmd->add_option("--steps", synth.steps, "Simulation steps");
  synth_cmd->add_option("--trajectories", synth.trajectories, "Phase portrait trajectories");
  synth_cmd->add_option("--verify-refinement", synth.verify_refinement,
                        "Verification grid refinement factor");
  synth_cmd->add_flag("--export-lp", synth.export_lp, "Write each SCP in LP format");
  synth_cmd->add_flag("--skip-verification", synth.skip_verification,
                      "Skip grid verification and phase portraits");

  std::string verify_path;
  int verify_refinement = 10;
  auto* verify_cmd = app.add_subcommand("verify", "Grid-check a stored certificate");
  verify_cmd->add_option("certificate", verify_path, "Certificate file")->required();
  verify_cmd->add_option("--refinement", verify_refinement, "Grid refinement factor")
      ->check(CLI::PositiveNumber);

  LipschitzArgs lip;
  auto* lip_cmd = app.add_subcommand("lipschitz", "Estimate a Lipschitz constant");
  lip_cmd->add_option("--function", lip.function, "sin, square or cubic");
  lip_cmd->add_option("--lower", lip.lower, "Interval lower end");
  lip_cmd->add_option("--upper", lip.upper, "Interval upper end");
  lip_cmd->add_option("--certificate", lip.certificate, "Estimate L1 and L2 of a stored certificate");
  lip_cmd->add_option("--class", lip.class_id, "Class of the certificate");
  lip_cmd->add_option("--gamma", lip.config.gamma, "Neighbourhood radius");
  lip_cmd->add_option("--inner", lip.config.inner_count, "Slopes per batch");
  lip_cmd->add_option("--outer", lip.config.outer_count, "Batches");
  lip_cmd->add_option("--seed", lip.config.seed, "Seed");
  lip_cmd->add_flag("--ladder", lip.ladder, "Run the refinement ladder");

  std::string sim_config, sim_output;
  std::optional<std::string> sim_topology;
  std::optional<int> sim_steps, sim_trajectories, sim_size;
  auto* sim_cmd = app.add_subcommand("simulate", "Phase portrait of a surrogate network");
  sim_cmd->add_option("config", sim_config, "Configuration file")->required();
  sim_cmd->add_option("--topology", sim_topology, "cascade, ring or dense-decay");
  sim_cmd->add_option("--steps", sim_steps, "Steps");
  sim_cmd->add_option("--trajectories", sim_trajectories, "Trajectories");
  sim_cmd->add_option("--surrogate-size", sim_size, "Subsystems");
  sim_cmd->add_option("--output", sim_output, "Trajectory CSV");

  double eta = 0, beta = 0, l1 = 0, l2 = 0, theta = 0;
  auto* margins_cmd = app.add_subcommand("margins", "Compositional margins from given numbers");
  margins_cmd->add_option("--eta", eta, "SCP optimum eta")->required();
  margins_cmd->add_option("--beta", beta, "SCP optimum beta")->required();
  margins_cmd->add_option("--l1", l1, "Lipschitz constant of B")->required();
  margins_cmd->add_option("--l2", l2, "Lipschitz constant of the decrease map")->required();
  margins_cmd->add_option("--theta", theta, "Dispersion")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth_cmd) return RunSynth(synth);
    if (*verify_cmd) return RunVerify(verify_path, verify_refinement);
    if (*lip_cmd) return RunLipschitz(lip);
    if (*sim_cmd) {
      return RunSimulate(sim_config, sim_topology, sim_steps, sim_trajectories, sim_size,
                         sim_output);
    }
    if (*margins_cmd) {
      const ClassMargins m = ComputeClassMargins(eta, beta, l1, l2, theta, 0.0, 1.0);
      std::printf("m1 = %.4f\nm2 = %.4f\n", m.m1, m.m2);
      const bool ok = m.level_margin_ok() && m.decrease_margin_ok();
      std::printf("%s\n", ok ? "margins hold" : "margins violated");
      return ok ? 0 : 1;
    }
  } catch (const CertificateFormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return kExitUsage;
}
