#include "safecert/verify.h"

#include <cmath>
#include <limits>
#include <ostream>

#include "safecert/sampling.h"

namespace safecert {

CertificateView CertificateView::Of(const ClassCertificate& c) {
  return {c.stc_template, c.coeffs, c.sigma, c.phi, c.supply, c.eta, c.l2};
}

LevelSetReport CheckLevelSets(const CertificateView& cert, const SafetySpec& safety,
                              const std::vector<int>& counts) {
  LevelSetReport rep;
  rep.sigma = cert.sigma;
  rep.phi = cert.phi;
  rep.max_initial = -std::numeric_limits<double>::infinity();
  rep.min_unsafe = std::numeric_limits<double>::infinity();
  for (const auto& x : GridSamples(safety.initial(), counts)) {
    const double b = EvalTemplate(cert.stc_template, cert.coeffs, x);
    if (b > rep.max_initial) {
      rep.max_initial = b;
      rep.argmax_initial = x;
    }
  }
  for (const auto& x : GridSamples(safety.unsafe(), counts)) {
    const double b = EvalTemplate(cert.stc_template, cert.coeffs, x);
    if (b < rep.min_unsafe) {
      rep.min_unsafe = b;
      rep.argmin_unsafe = x;
    }
  }
  return rep;
}

HeatmapSummary DecreaseHeatmap(const SubsystemClass& cls, const CertificateView& cert,
                               const std::vector<int>& counts, const HeatmapVisitor& visit) {
  if (!cls.has_oracle()) {
    throw InvalidInputError("DecreaseHeatmap: class '" + cls.id() + "' has no oracle");
  }
  const int n = cls.state_dim(), p = cls.input_dim();
  if (static_cast<int>(counts.size()) != n + p) {
    throw InvalidInputError("DecreaseHeatmap: one count per joint dimension is required");
  }
  const IntervalBox joint = cls.JointBox();
  std::vector<int> counts_x(counts.begin(), counts.begin() + n);
  std::vector<int> counts_d(counts.begin() + n, counts.end());
  const auto xs = GridSamples(cls.state_box(), counts_x);
  const auto ds = GridSamples(cls.input_box(), counts_d);

  HeatmapSummary summary;
  summary.max_value = -std::numeric_limits<double>::infinity();
  for (const auto& x : xs) {
    const double bx = EvalTemplate(cert.stc_template, cert.coeffs, x);
    for (const auto& d : ds) {
      const double v = EvalTemplate(cert.stc_template, cert.coeffs, cls.Step(x, d)) - bx -
                       EvalSupply(cert.supply, d, x);
      ++summary.points;
      if (v > summary.max_value) {
        summary.max_value = v;
        summary.argmax.resize(n + p);
        summary.argmax << x, d;
      }
      if (visit) visit(x, d, v);
    }
  }
  summary.diagnostic_threshold = cert.eta + cert.l2 * DispersionOfGrid(joint, counts);
  return summary;
}

HeatmapCsvWriter::HeatmapCsvWriter(std::ostream& os, int state_dim, int input_dim) : os_(os) {
  os_.precision(17);
  for (int k = 0; k < state_dim; ++k) os_ << "x" << k << ",";
  for (int k = 0; k < input_dim; ++k) os_ << "d" << k << ",";
  os_ << "value\n";
}

void HeatmapCsvWriter::operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& d, double value) {
  for (Eigen::Index k = 0; k < x.size(); ++k) os_ << x[k] << ",";
  for (Eigen::Index k = 0; k < d.size(); ++k) os_ << d[k] << ",";
  os_ << value << "\n";
}

SurfaceTable SurfaceData(const CertificateView& cert, const IntervalBox& state_box,
                         const std::vector<int>& counts) {
  SurfaceTable table;
  table.sigma = cert.sigma;
  table.phi = cert.phi;
  table.points = GridSamples(state_box, counts);
  table.values.reserve(table.points.size());
  for (const auto& x : table.points) {
    table.values.push_back(EvalTemplate(cert.stc_template, cert.coeffs, x));
  }
  return table;
}

void WriteSurfaceCsv(const SurfaceTable& table, std::ostream& os) {
  const auto old = os.precision(17);
  const Eigen::Index n = table.points.empty() ? 0 : table.points.front().size();
  for (Eigen::Index k = 0; k < n; ++k) os << "x" << k << ",";
  os << "B,sigma,phi\n";
  for (size_t r = 0; r < table.points.size(); ++r) {
    for (Eigen::Index k = 0; k < n; ++k) os << table.points[r][k] << ",";
    os << table.values[r] << "," << table.sigma << "," << table.phi << "\n";
  }
  os.precision(old);
}

PhasePortrait RunPhasePortrait(const SurrogateNetwork& network, const Topology& topology,
                               const PhasePortraitOptions& options) {
  if (options.trajectories < 1) throw InvalidInputError("RunPhasePortrait: need at least one trajectory");
  std::vector<std::vector<Eigen::VectorXd>> grids;
  for (const auto& cls : network.classes) {
    const IntervalBox& init = cls.safety().initial();
    const int per_dim = static_cast<int>(
        std::ceil(std::pow(static_cast<double>(options.trajectories), 1.0 / init.dim()) - 1e-9));
    grids.push_back(GridSamples(init, std::vector<int>(init.dim(), per_dim)));
  }
  PhasePortrait portrait;
  for (int g = 0; g < options.trajectories; ++g) {
    std::vector<Eigen::VectorXd> x0(network.size());
    for (int i = 0; i < network.size(); ++i) {
      const auto& grid = grids[network.assignment[i]];
      x0[i] = grid[(g + 7 * i) % grid.size()];
    }
    Trajectory traj = SimulateNetwork(network, topology, x0, options.steps);
    const bool unsafe = traj.first_unsafe_step.has_value();
    portrait.entered_unsafe.push_back(unsafe);
    portrait.unsafe_count += unsafe ? 1 : 0;
    portrait.exit_count += traj.first_exit_step ? 1 : 0;
    portrait.clamp_events += traj.clamp_events;
    portrait.trajectories.push_back(std::move(traj));
  }
  return portrait;
}

void WriteTrajectoryCsv(const PhasePortrait& portrait, std::ostream& os) {
  const auto old = os.precision(17);
  Eigen::Index n = 0;
  if (!portrait.trajectories.empty() && !portrait.trajectories.front().states.empty() &&
      !portrait.trajectories.front().states.front().empty()) {
    n = portrait.trajectories.front().states.front().front().size();
  }
  os << "trajectory,step,subsystem";
  for (Eigen::Index k = 0; k < n; ++k) os << ",x" << k;
  os << "\n";
  for (size_t t = 0; t < portrait.trajectories.size(); ++t) {
    const auto& states = portrait.trajectories[t].states;
    for (size_t step = 0; step < states.size(); ++step) {
      for (size_t i = 0; i < states[step].size(); ++i) {
        os << t << "," << step << "," << i;
        for (Eigen::Index k = 0; k < states[step][i].size(); ++k) os << "," << states[step][i][k];
        os << "\n";
      }
    }
  }
  os.precision(old);
}

}  // namespace safecert
