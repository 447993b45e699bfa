#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "safecert/certificate_io.h"
#include "safecert/compose.h"
#include "safecert/config.h"
#include "safecert/lipschitz.h"
#include "safecert/sampling.h"
#include "safecert/scp.h"
#include "safecert/verify.h"

namespace safecert {

enum class PipelineStatus { kCertified = 0, kNotCertified = 1, kScpInfeasible = 3 };

std::string ToString(PipelineStatus status);

/// Outcome of the last attempt for one class.
struct ClassRun {
  SubsystemClass cls;
  SampleSet samples;
  std::vector<int> grid_state;
  std::vector<int> grid_input;
  int attempts = 0;
  std::optional<ScpSolution> solution;
  ResidualReport residuals;
  std::optional<ClassLipschitz> lipschitz;
  std::optional<ClassMargins> margins;
  /// Empty when the class produced a usable solution.
  std::string diagnosis;
  double seconds = 0.0;

  bool Solved() const { return solution && diagnosis.empty(); }
  bool Passed() const { return Solved() && margins && margins->Passed(); }
};

struct TopologyRun {
  Topology topology;
  PhasePortrait portrait;
};

struct ClassVerification {
  std::string class_id;
  LevelSetReport level_sets;
  std::optional<HeatmapSummary> heatmap;
};

struct PipelineResult {
  PipelineStatus status = PipelineStatus::kNotCertified;
  std::optional<NetworkCertificate> certificate;
  std::vector<ClassRun> runs;
  std::vector<ClassVerification> verification;
  /// One phase portrait per topology kind; empty when a class has no oracle.
  std::vector<TopologyRun> portraits;
  double seconds = 0.0;

  int ExitCode() const { return static_cast<int>(status); }
};

struct PipelineOptions {
  /// Write nothing; the result still carries everything.
  bool write_files = true;
  /// Skip grid verification and phase portraits.
  bool skip_verification = false;
};

/// Sampling, SCP, Lipschitz estimation and margins per class, grid refinement
/// of failing classes, certification, verification and output files.
PipelineResult RunPipeline(const PipelineConfig& config, const PipelineOptions& options = {});

/// Surrogate network of `size` subsystems; subsystem i belongs to class
/// i mod (number of classes).
SurrogateNetwork MixedSurrogate(const std::vector<SubsystemClass>& classes, int size);

/// Classes built from the configuration embedded in a certificate.
std::vector<SubsystemClass> ClassesOfCertificate(const NetworkCertificate& certificate);

void WriteReport(const PipelineResult& result, const PipelineConfig& config, std::ostream& os);

}  // namespace safecert
