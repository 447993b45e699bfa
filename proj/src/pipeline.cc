#include "safecert/pipeline.h"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace safecert {

namespace {

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<int> Concat(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::filesystem::path Resolve(const std::filesystem::path& base, const std::string& path) {
  const std::filesystem::path p(path);
  return p.is_absolute() || base.empty() ? p : base / p;
}

SampleSet LoadRecordedSamples(const ClassConfig& cc, const SubsystemClass& cls,
                              const std::filesystem::path& base) {
  const auto path = Resolve(base, cc.data_path);
  std::ifstream in(path);
  if (!in) throw ConfigError("class '" + cc.id + "': cannot open data file '" + path.string() + "'");
  SampleSet samples = ReadSampleCsv(in, cls.state_dim(), cls.input_dim());
  const IntervalBox joint = cls.JointBox();
  const auto points = samples.JointPoints();
  for (const auto& p : points) {
    if (!joint.Contains(p, 1e-9 * (1.0 + p.cwiseAbs().maxCoeff()))) {
      throw DataFaultError("class '" + cc.id + "': a recorded sample lies outside X x D");
    }
  }
  samples.dispersion = DispersionGeneral(joint, points, cc.probe_counts);
  return samples;
}

void Attempt(ClassRun& run, const ClassConfig& cc, const PipelineConfig& config) {
  const auto start = Clock::now();
  ++run.attempts;
  run.solution.reset();
  run.lipschitz.reset();
  run.margins.reset();
  run.diagnosis.clear();
  if (cc.benchmark) {
    run.samples = CollectPairs(run.cls, run.grid_state, run.grid_input);
  } else if (run.attempts == 1) {
    run.samples = LoadRecordedSamples(cc, run.cls, config.base_dir);
  }
  try {
    const ScpData data = SelectScpData(run.cls, run.samples);
    const ScpProblem problem = BuildScp(run.cls.stc_template(), run.cls.input_dim(), data, config.scp);
    ScpSolution solution = SolveScp(problem);
    if (solution.status != ScpStatus::kOptimal) {
      run.diagnosis = "SCP " + ToString(solution.status) +
                      (solution.diagnosis.empty() ? "" : ": " + solution.diagnosis);
    } else {
      run.residuals = CheckSolution(solution, run.cls.stc_template(), data, config.scp);
      if (!run.residuals.Passed()) {
        std::ostringstream msg;
        msg << "solution fails the residual check (" << run.residuals.Max() << " > "
            << run.residuals.tolerance << ")";
        run.diagnosis = msg.str();
      }
    }
    run.solution = std::move(solution);
  } catch (const CoverageError& e) {
    run.diagnosis = e.what();
  }
  if (run.Solved()) {
    run.lipschitz = run.cls.has_oracle()
                        ? EstimateForClass(run.cls, *run.solution, config.lipschitz)
                        : EstimateForClassFromData(run.cls, run.solution->coeffs, run.samples,
                                                   config.lipschitz);
    const ScpSolution& s = *run.solution;
    run.margins = ComputeClassMargins(s.eta, s.beta, run.lipschitz->l1.value,
                                      run.lipschitz->l2.value, run.samples.dispersion, s.sigma,
                                      s.phi, run.cls.id());
  }
  run.seconds += SecondsSince(start);
}

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

std::string VectorText(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index k = 0; k < v.size(); ++k) os << (k ? ", " : "") << v[k];
  os << ")";
  return os.str();
}

std::string CountsText(const std::vector<int>& counts) {
  std::ostringstream os;
  for (size_t k = 0; k < counts.size(); ++k) os << (k ? "x" : "") << counts[k];
  return os.str();
}

}  // namespace

std::string ToString(PipelineStatus status) {
  switch (status) {
    case PipelineStatus::kCertified: return "certified";
    case PipelineStatus::kNotCertified: return "not-certified";
    case PipelineStatus::kScpInfeasible: return "scp-infeasible";
  }
  return "unknown";
}

SurrogateNetwork MixedSurrogate(const std::vector<SubsystemClass>& classes, int size) {
  if (classes.empty()) throw InvalidInputError("MixedSurrogate: no classes");
  if (size < 1) throw InvalidInputError("MixedSurrogate: size must be positive");
  SurrogateNetwork net;
  net.classes = classes;
  for (int i = 0; i < size; ++i) net.assignment.push_back(i % static_cast<int>(classes.size()));
  return net;
}

std::vector<SubsystemClass> ClassesOfCertificate(const NetworkCertificate& certificate) {
  if (certificate.config_json.empty()) {
    throw InvalidInputError("certificate carries no configuration");
  }
  const PipelineConfig config = ParseConfig(nlohmann::json::parse(certificate.config_json));
  std::vector<SubsystemClass> classes;
  for (const ClassCertificate& c : certificate.classes) {
    const ClassConfig* found = nullptr;
    for (const ClassConfig& cc : config.classes) {
      if (cc.id == c.id) found = &cc;
    }
    if (!found) throw InvalidInputError("certificate class '" + c.id + "' is not in its configuration");
    classes.push_back(BuildClass(*found));
  }
  return classes;
}

PipelineResult RunPipeline(const PipelineConfig& config, const PipelineOptions& options) {
  const auto start = Clock::now();
  PipelineResult result;
  for (const ClassConfig& cc : config.classes) {
    ClassRun run{BuildClass(cc), {}, {}, {}, 0, {}, {}, {}, {}, {}, 0.0};
    run.grid_state = cc.grid_state;
    run.grid_input = cc.grid_input;
    result.runs.push_back(std::move(run));
  }

  for (size_t k = 0; k < result.runs.size(); ++k) Attempt(result.runs[k], config.classes[k], config);
  for (int retry = 0; config.refine_enabled && retry < config.max_retries; ++retry) {
    bool refined = false;
    for (size_t k = 0; k < result.runs.size(); ++k) {
      ClassRun& run = result.runs[k];
      if (run.Passed() || !config.classes[k].benchmark) continue;
      run.grid_state = RefineCounts(run.grid_state, 2);
      run.grid_input = RefineCounts(run.grid_input, 2);
      Attempt(run, config.classes[k], config);
      refined = true;
    }
    if (!refined) break;
  }

  bool all_solved = true;
  for (const ClassRun& run : result.runs) all_solved = all_solved && run.Solved();
  std::vector<SubsystemClass> classes;
  for (const ClassRun& run : result.runs) classes.push_back(run.cls);
  const int size = config.topology.surrogate_size;

  if (all_solved) {
    std::vector<ClassEvidence> evidence;
    for (const ClassRun& run : result.runs) {
      ClassEvidence e = ClassEvidence::FromClass(run.cls);
      e.solution = run.solution;
      e.l1 = run.lipschitz->l1.value;
      e.l2 = run.lipschitz->l2.value;
      e.theta = run.samples.dispersion;
      e.sample_count = run.samples.count();
      e.grid_counts = run.samples.grid_counts;
      evidence.push_back(std::move(e));
    }
    std::vector<int> multiplicities(classes.size(), 0);
    for (int i = 0; i < size; ++i) ++multiplicities[i % classes.size()];
    NetworkCertificate cert = Certify(evidence, multiplicities);
    nlohmann::json embedded = ToJson(config);
    embedded.erase("output_dir");
    cert.config_json = embedded.dump();
    result.status = cert.verdict == Verdict::kCertified ? PipelineStatus::kCertified
                                                        : PipelineStatus::kNotCertified;
    result.certificate = std::move(cert);
  } else {
    result.status = PipelineStatus::kScpInfeasible;
  }

  if (result.certificate && !options.skip_verification) {
    for (size_t k = 0; k < result.runs.size(); ++k) {
      const ClassRun& run = result.runs[k];
      const CertificateView view = CertificateView::Of(result.certificate->classes[k]);
      ClassVerification v;
      v.class_id = run.cls.id();
      const std::vector<int> base_state =
          config.classes[k].benchmark
              ? run.grid_state
              : std::vector<int>(config.classes[k].probe_counts.begin(),
                                 config.classes[k].probe_counts.begin() + run.cls.state_dim());
      v.level_sets = CheckLevelSets(view, run.cls.safety(),
                                    RefineCounts(base_state, config.verify_refinement));
      if (run.cls.has_oracle()) {
        v.heatmap = DecreaseHeatmap(
            run.cls, view,
            RefineCounts(Concat(run.grid_state, run.grid_input), config.verify_refinement));
      }
      result.verification.push_back(std::move(v));
    }
  }
  bool all_oracles = true;
  for (const auto& cls : classes) all_oracles = all_oracles && cls.has_oracle();
  if (!options.skip_verification && all_oracles) {
    const SurrogateNetwork net = MixedSurrogate(classes, size);
    for (TopologyKind kind : {TopologyKind::kCascade, TopologyKind::kRing, TopologyKind::kDenseDecay}) {
      Topology topology = config.topology;
      topology.kind = kind;
      result.portraits.push_back(
          {topology, RunPhasePortrait(net, topology, {config.trajectories, config.steps})});
    }
  }
  result.seconds = SecondsSince(start);

  if (options.write_files) {
    const std::filesystem::path dir(config.output_dir);
    std::filesystem::create_directories(dir);
    for (size_t k = 0; k < result.runs.size(); ++k) {
      const ClassRun& run = result.runs[k];
      const std::string& id = run.cls.id();
      std::ostringstream samples;
      WriteSampleCsv(run.samples, samples);
      WriteFile(dir / ("samples_" + id + ".csv"), samples.str());
      if (config.export_lp) {
        try {
          std::ostringstream lp;
          WriteLpFormat(BuildScp(run.cls, run.samples, config.scp), lp);
          WriteFile(dir / ("scp_" + id + ".lp"), lp.str());
        } catch (const CoverageError&) {
        }
      }
      if (!result.certificate) continue;
      const CertificateView view = CertificateView::Of(result.certificate->classes[k]);
      std::ostringstream surface;
      const std::vector<int> surface_counts =
          run.grid_state.empty()
              ? std::vector<int>(config.classes[k].probe_counts.begin(),
                                 config.classes[k].probe_counts.begin() + run.cls.state_dim())
              : RefineCounts(run.grid_state, config.verify_refinement);
      WriteSurfaceCsv(SurfaceData(view, run.cls.state_box(), surface_counts), surface);
      WriteFile(dir / ("surface_" + id + ".csv"), surface.str());
      if (run.cls.has_oracle()) {
        std::ostringstream heat;
        HeatmapCsvWriter writer(heat, run.cls.state_dim(), run.cls.input_dim());
        DecreaseHeatmap(run.cls, view,
                        RefineCounts(Concat(run.grid_state, run.grid_input), config.csv_refinement),
                        std::ref(writer));
        WriteFile(dir / ("heatmap_" + id + ".csv"), heat.str());
      }
    }
    for (const TopologyRun& t : result.portraits) {
      std::ostringstream traj;
      WriteTrajectoryCsv(t.portrait, traj);
      WriteFile(dir / ("trajectories_" + ToString(t.topology.kind) + ".csv"), traj.str());
    }
    if (result.certificate) StoreCertificate(*result.certificate, dir / "certificate.json");
    std::ostringstream report;
    WriteReport(result, config, report);
    WriteFile(dir / "report.txt", report.str());
  }
  return result;
}

void WriteReport(const PipelineResult& result, const PipelineConfig& config, std::ostream& os) {
  const auto flags = os.flags();
  const auto precision = os.precision(6);
  os << "status: " << ToString(result.status) << "\n";
  os << "classes: " << result.runs.size() << ", surrogate size "
     << config.topology.surrogate_size << "\n\n";
  for (const ClassRun& run : result.runs) {
    os << "class " << run.cls.id() << "\n";
    os << "  attempts: " << run.attempts << "\n";
    if (!run.grid_state.empty()) {
      os << "  grid: state " << CountsText(run.grid_state) << ", input "
         << CountsText(run.grid_input) << "\n";
    }
    os << "  samples: " << run.samples.count() << ", theta " << run.samples.dispersion << "\n";
    if (run.solution) {
      const ScpSolution& s = *run.solution;
      os << "  scp: " << ToString(s.status) << ", " << s.iterations << " iterations\n";
      if (s.status == ScpStatus::kOptimal) {
        os << "  eta " << s.eta << ", beta " << s.beta << ", sigma " << s.sigma << ", phi "
           << s.phi << "\n";
        os << "  residual " << run.residuals.Max() << " (tolerance " << run.residuals.tolerance
           << ")\n";
      }
    }
    if (!run.diagnosis.empty()) os << "  diagnosis: " << run.diagnosis << "\n";
    if (run.lipschitz) {
      os << "  L1 " << run.lipschitz->l1.value << (run.lipschitz->l1.fallback_used ? " (max)" : "")
         << ", L2 " << run.lipschitz->l2.value
         << (run.lipschitz->l2.fallback_used ? " (max)" : "") << "\n";
    }
    if (run.margins) {
      os << std::fixed << std::setprecision(4);
      os << "  m1 = " << run.margins->m1 << (run.margins->level_margin_ok() ? " <= 0" : " > 0")
         << "\n";
      os << "  m2 = " << run.margins->m2 << (run.margins->decrease_margin_ok() ? " <= 0" : " > 0")
         << "\n";
      os << "  phi - sigma = " << run.margins->gap << "\n";
      os.flags(flags);
      os.precision(6);
    }
    os << "  time: " << run.seconds << " s\n\n";
  }
  if (result.certificate) {
    const NetworkCertificate& c = *result.certificate;
    os << "verdict: " << ToString(c.verdict) << "\n";
    os << "network sigma " << c.sigma << ", phi " << c.phi << "\n";
    for (const ConditionFailure& f : c.failures) {
      os << "  failed: class " << f.class_id << ", " << ToString(f.condition) << " by " << f.amount
         << "\n";
    }
    os << "\n";
  }
  if (!result.verification.empty()) {
    os << "grid verification (a diagnostic; the margins above carry the guarantee)\n";
    for (const ClassVerification& v : result.verification) {
      const LevelSetReport& l = v.level_sets;
      os << "  " << v.class_id << ": max B on initial " << l.max_initial << " at "
         << VectorText(l.argmax_initial) << " vs sigma " << l.sigma << " ("
         << (l.initial_ok() ? "pass" : "fail") << ")\n";
      os << "  " << v.class_id << ": min B on unsafe " << l.min_unsafe << " at "
         << VectorText(l.argmin_unsafe) << " vs phi " << l.phi << " ("
         << (l.unsafe_ok() ? "pass" : "fail") << ")\n";
      if (v.heatmap) {
        os << "  " << v.class_id << ": decrease max " << v.heatmap->max_value << " over "
           << v.heatmap->points << " points at " << VectorText(v.heatmap->argmax) << " ("
           << (v.heatmap->Passed() ? "pass" : "fail") << "), eta + L2 theta = "
           << v.heatmap->diagnostic_threshold << "\n";
      } else {
        os << "  " << v.class_id << ": decrease heatmap skipped (no oracle)\n";
      }
    }
    os << "\n";
  }
  if (!result.portraits.empty()) {
    os << "phase portraits (" << config.trajectories << " trajectories, " << config.steps
       << " steps)\n";
    for (const TopologyRun& t : result.portraits) {
      os << "  " << ToString(t.topology.kind) << ": unsafe entries " << t.portrait.unsafe_count
         << ", state-box exits " << t.portrait.exit_count << ", clamp events "
         << t.portrait.clamp_events << "\n";
    }
    os << "\n";
  }
  os << "total time: " << result.seconds << " s\n";
  os.flags(flags);
  os.precision(precision);
}

}  // namespace safecert
