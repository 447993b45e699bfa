#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "safecert/blackbox.h"
#include "safecert/core.h"
#include "safecert/lipschitz.h"
#include "safecert/scp.h"

namespace safecert {

/// Any problem with a configuration file: syntax, unknown keys, wrong
/// types, inconsistent dimensions, overlapping safety boxes.
class ConfigError : public InvalidInputError {
 public:
  using InvalidInputError::InvalidInputError;
};

inline constexpr int kConfigVersion = 1;

enum class BenchmarkKind { kRoom, kPlatoon };

std::string ToString(BenchmarkKind kind);

struct ClassConfig {
  std::string id;
  /// Built-in dynamics, or recorded pairs in `data_path` (CSV) when unset.
  std::optional<BenchmarkKind> benchmark;
  RoomParams room;
  PlatoonParams platoon = PlatoonParams::Default();
  std::string data_path;

  /// Boxes and template default to the benchmark's when unset.
  std::optional<IntervalBox> state_box;
  std::optional<IntervalBox> input_box;
  std::optional<IntervalBox> initial_box;
  std::optional<IntervalBox> unsafe_box;
  std::optional<std::vector<std::vector<int>>> exponents;

  std::vector<int> grid_state;
  std::vector<int> grid_input;
  /// Probe grid over X x D for the dispersion of recorded data.
  std::vector<int> probe_counts;
};

struct PipelineConfig {
  std::vector<ClassConfig> classes;
  ScpOptions scp;
  LipschitzConfig lipschitz;
  bool refine_enabled = true;
  int max_retries = 2;
  Topology topology;
  int steps = 100;
  int trajectories = 25;
  /// Verification grids use RefineCounts(sampling counts, verify_refinement).
  int verify_refinement = 10;
  /// The heatmap CSV uses RefineCounts(sampling counts, csv_refinement).
  int csv_refinement = 1;
  bool export_lp = false;
  std::string output_dir = "safecert_out";
  /// Directory against which relative data paths are resolved.
  std::filesystem::path base_dir;
};

/// Parses and validates a version-1 configuration. Throws ConfigError.
PipelineConfig ParseConfig(const nlohmann::json& doc,
                           const std::filesystem::path& base_dir = {});
PipelineConfig LoadConfig(const std::filesystem::path& path);

/// Canonical JSON form; ParseConfig(ToJson(c)) reproduces c.
nlohmann::json ToJson(const PipelineConfig& config);

/// Builds the class described by `config`, validating its dimensions.
SubsystemClass BuildClass(const ClassConfig& config);

nlohmann::json BoxToJson(const IntervalBox& box);
IntervalBox BoxFromJson(const nlohmann::json& j, const std::string& where);

}  // namespace safecert
