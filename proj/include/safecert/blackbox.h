#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "safecert/core.h"

namespace safecert {

/// Scalar room temperature map x+ = a x + e d + c.
struct RoomParams {
  double a = 0.9;
  double e = 0.06;
  double c = 0.4;
};

/// Two-state vehicle map x+ = A x + E d + c.
struct PlatoonParams {
  Eigen::Matrix2d A;
  Eigen::Matrix2d E;
  Eigen::Vector2d c;

  static PlatoonParams Default();
};

double RoomStep(double x, double d, const RoomParams& params = {});
Eigen::VectorXd PlatoonStep(const Eigen::VectorXd& x, const Eigen::VectorXd& d,
                            const PlatoonParams& params = PlatoonParams::Default());

TransitionOracle MakeRoomOracle(const RoomParams& params);
TransitionOracle MakePlatoonOracle(const PlatoonParams& params);

/// Room class: X = D = [10, 13], X0 = [10, 11], Xa = [12, 13],
/// template {x^4, x^2, 1}.
SubsystemClass RoomClass(const RoomParams& params = {}, std::string id = "room");

/// Vehicle class: X = D = [0.8, 1.5] x [0.8, 2], X0 = [0.8, 1]^2,
/// Xa = [0.8, 1.5] x [1.5, 2], full quartic template (15 terms).
SubsystemClass PlatoonClass(const PlatoonParams& params = PlatoonParams::Default(),
                            std::string id = "platoon");

enum class TopologyKind { kCascade, kRing, kDenseDecay };

std::string ToString(TopologyKind kind);
TopologyKind ParseTopologyKind(const std::string& name);

struct Topology {
  TopologyKind kind = TopologyKind::kRing;
  double weight_decay = 0.5;  // dense-decay only, in (0, 1]
  int surrogate_size = 10;

  void Validate() const;
};

struct InternalInputs {
  std::vector<Eigen::VectorXd> inputs;
  int clamp_events = 0;
};

/// Internal inputs of every subsystem of a finite surrogate network:
///   cascade      d_i = x_{i-1}                (index 0 reads the last node)
///   ring         d_i = (x_{i-1} + x_{i+1}) / 2 (wrapping)
///   dense-decay  d_i = sum_{j!=i} w^|i-j| x_j / sum_{j!=i} w^|i-j|
/// Each d_i is clamped into input_boxes[i]; every clamped coordinate counts
/// as one clamp event.
InternalInputs ComputeInternalInputs(const std::vector<Eigen::VectorXd>& states,
                                     const Topology& topology,
                                     const std::vector<IntervalBox>& input_boxes);

/// Finite surrogate of the network: subsystem i is a copy of
/// classes[assignment[i]].
struct SurrogateNetwork {
  std::vector<SubsystemClass> classes;
  std::vector<int> assignment;

  /// `size` copies of a single class.
  static SurrogateNetwork Homogeneous(const SubsystemClass& cls, int size);

  int size() const { return static_cast<int>(assignment.size()); }
  const SubsystemClass& class_of(int i) const { return classes[assignment[i]]; }
};

struct Trajectory {
  /// states[k][i]: state of subsystem i after k steps.
  std::vector<std::vector<Eigen::VectorXd>> states;
  std::optional<int> first_unsafe_step;
  std::optional<int> first_exit_step;
  int clamp_events = 0;
};

/// Iterates x_i+ = f_i(x_i, d_i) with d from ComputeInternalInputs.
/// Unsafe entries and state-box exits are flagged, never thrown.
Trajectory SimulateNetwork(const SurrogateNetwork& network, const Topology& topology,
                           const std::vector<Eigen::VectorXd>& initial_states, int steps);

/// Outcome of simulating a benchmark from a grid of its initial box.
struct BenchmarkValidation {
  int trajectories = 0;
  int unsafe_entries = 0;   // trajectories that touched the unsafe box
  int state_box_exits = 0;  // trajectories that left the state box
  int clamp_events = 0;

  bool safe() const { return unsafe_entries == 0; }
};

/// Runs one trajectory per point of a `per_dim`-per-dimension grid of the
/// initial box; subsystem i of trajectory g starts at grid point (g + 7 i)
/// mod P so that neighbours start from different points.
BenchmarkValidation ValidateBenchmark(const SubsystemClass& cls, const Topology& topology,
                                      int steps = 100, int per_dim = 5);

}  // namespace safecert
