#include "safecert/blackbox.h"

#include <cmath>

#include "safecert/sampling.h"

namespace safecert {

PlatoonParams PlatoonParams::Default() {
  PlatoonParams p;
  p.A << 0.9, 0.08, -0.04, 0.88;
  p.E = 0.01 * Eigen::Matrix2d::Identity();
  p.c << 0.01, 0.15;
  return p;
}

double RoomStep(double x, double d, const RoomParams& params) {
  return params.a * x + params.e * d + params.c;
}

Eigen::VectorXd PlatoonStep(const Eigen::VectorXd& x, const Eigen::VectorXd& d,
                            const PlatoonParams& params) {
  if (x.size() != 2 || d.size() != 2) {
    throw InvalidInputError("PlatoonStep: state and input must be 2-vectors");
  }
  return params.A * x + params.E * d + params.c;
}

TransitionOracle MakeRoomOracle(const RoomParams& params) {
  return [params](const Eigen::VectorXd& x, const Eigen::VectorXd& d) {
    return Eigen::VectorXd::Constant(1, RoomStep(x[0], d[0], params));
  };
}

TransitionOracle MakePlatoonOracle(const PlatoonParams& params) {
  return [params](const Eigen::VectorXd& x, const Eigen::VectorXd& d) {
    return PlatoonStep(x, d, params);
  };
}

SubsystemClass RoomClass(const RoomParams& params, std::string id) {
  const IntervalBox state = IntervalBox::Interval(10.0, 13.0);
  return SubsystemClass(std::move(id), state, state,
                        SafetySpec(IntervalBox::Interval(10.0, 11.0),
                                   IntervalBox::Interval(12.0, 13.0)),
                        StcTemplate(1, {{4}, {2}, {0}}), MakeRoomOracle(params));
}

SubsystemClass PlatoonClass(const PlatoonParams& params, std::string id) {
  const IntervalBox state(Eigen::Vector2d(0.8, 0.8), Eigen::Vector2d(1.5, 2.0));
  return SubsystemClass(
      std::move(id), state, state,
      SafetySpec(IntervalBox(Eigen::Vector2d(0.8, 0.8), Eigen::Vector2d(1.0, 1.0)),
                 IntervalBox(Eigen::Vector2d(0.8, 1.5), Eigen::Vector2d(1.5, 2.0))),
      StcTemplate::FullPolynomial(2, 4), MakePlatoonOracle(params));
}

std::string ToString(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::kCascade: return "cascade";
    case TopologyKind::kRing: return "ring";
    case TopologyKind::kDenseDecay: return "dense-decay";
  }
  return "unknown";
}

TopologyKind ParseTopologyKind(const std::string& name) {
  if (name == "cascade") return TopologyKind::kCascade;
  if (name == "ring") return TopologyKind::kRing;
  if (name == "dense-decay") return TopologyKind::kDenseDecay;
  throw InvalidInputError("unknown topology '" + name + "' (cascade, ring, dense-decay)");
}

void Topology::Validate() const {
  if (surrogate_size < 2) throw InvalidInputError("Topology: surrogate_size must be >= 2");
  if (kind == TopologyKind::kDenseDecay && !(weight_decay > 0.0 && weight_decay <= 1.0)) {
    throw InvalidInputError("Topology: weight_decay must lie in (0, 1]");
  }
}

InternalInputs ComputeInternalInputs(const std::vector<Eigen::VectorXd>& states,
                                     const Topology& topology,
                                     const std::vector<IntervalBox>& input_boxes) {
  const int n = static_cast<int>(states.size());
  if (n < 2) throw InvalidInputError("ComputeInternalInputs: at least two subsystems required");
  if (n != topology.surrogate_size) {
    throw InvalidInputError("ComputeInternalInputs: state count differs from surrogate_size");
  }
  if (static_cast<int>(input_boxes.size()) != n) {
    throw InvalidInputError("ComputeInternalInputs: one input box per subsystem required");
  }
  topology.Validate();
  for (const auto& s : states) {
    if (s.size() != states[0].size()) {
      throw InvalidInputError("ComputeInternalInputs: states have mismatched dimensions");
    }
  }

  InternalInputs out;
  out.inputs.reserve(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd d;
    switch (topology.kind) {
      case TopologyKind::kCascade:
        d = states[(i + n - 1) % n];
        break;
      case TopologyKind::kRing:
        d = 0.5 * (states[(i + n - 1) % n] + states[(i + 1) % n]);
        break;
      case TopologyKind::kDenseDecay: {
        d = Eigen::VectorXd::Zero(states[0].size());
        double total = 0.0;
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          const double w = std::pow(topology.weight_decay, std::abs(i - j));
          d += w * states[j];
          total += w;
        }
        d /= total;
        break;
      }
    }
    const IntervalBox& box = input_boxes[i];
    if (d.size() != box.dim()) {
      throw InvalidInputError("ComputeInternalInputs: neighbour state dimension differs from input box");
    }
    for (int k = 0; k < d.size(); ++k) {
      if (d[k] < box.lower()[k] || d[k] > box.upper()[k]) ++out.clamp_events;
    }
    out.inputs.push_back(box.Clamp(d));
  }
  return out;
}

SurrogateNetwork SurrogateNetwork::Homogeneous(const SubsystemClass& cls, int size) {
  return SurrogateNetwork{{cls}, std::vector<int>(size, 0)};
}

Trajectory SimulateNetwork(const SurrogateNetwork& network, const Topology& topology,
                           const std::vector<Eigen::VectorXd>& initial_states, int steps) {
  const int n = network.size();
  if (static_cast<int>(initial_states.size()) != n) {
    throw InvalidInputError("SimulateNetwork: one initial state per subsystem required");
  }
  if (steps < 0) throw InvalidInputError("SimulateNetwork: steps must be non-negative");
  std::vector<IntervalBox> input_boxes;
  input_boxes.reserve(n);
  for (int i = 0; i < n; ++i) input_boxes.push_back(network.class_of(i).input_box());

  Trajectory traj;
  auto flag = [&](const std::vector<Eigen::VectorXd>& states, int step) {
    for (int i = 0; i < n; ++i) {
      const SubsystemClass& cls = network.class_of(i);
      if (!traj.first_unsafe_step && cls.safety().unsafe().Contains(states[i])) {
        traj.first_unsafe_step = step;
      }
      if (!traj.first_exit_step && !cls.state_box().Contains(states[i])) {
        traj.first_exit_step = step;
      }
    }
  };

  traj.states.reserve(steps + 1);
  traj.states.push_back(initial_states);
  flag(initial_states, 0);
  for (int k = 1; k <= steps; ++k) {
    const auto& current = traj.states.back();
    InternalInputs d = ComputeInternalInputs(current, topology, input_boxes);
    traj.clamp_events += d.clamp_events;
    std::vector<Eigen::VectorXd> next(n);
    for (int i = 0; i < n; ++i) next[i] = network.class_of(i).Step(current[i], d.inputs[i]);
    traj.states.push_back(std::move(next));
    flag(traj.states.back(), k);
  }
  return traj;
}

BenchmarkValidation ValidateBenchmark(const SubsystemClass& cls, const Topology& topology,
                                      int steps, int per_dim) {
  const IntervalBox& init = cls.safety().initial();
  const std::vector<Eigen::VectorXd> grid =
      GridSamples(init, std::vector<int>(init.dim(), per_dim));
  const int points = static_cast<int>(grid.size());
  const SurrogateNetwork network = SurrogateNetwork::Homogeneous(cls, topology.surrogate_size);

  BenchmarkValidation report;
  for (int g = 0; g < points; ++g) {
    std::vector<Eigen::VectorXd> x0(network.size());
    for (int i = 0; i < network.size(); ++i) x0[i] = grid[(g + 7 * i) % points];
    const Trajectory traj = SimulateNetwork(network, topology, x0, steps);
    ++report.trajectories;
    if (traj.first_unsafe_step) ++report.unsafe_entries;
    if (traj.first_exit_step) ++report.state_box_exits;
    report.clamp_events += traj.clamp_events;
  }
  return report;
}

}  // namespace safecert
