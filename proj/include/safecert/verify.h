#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "safecert/blackbox.h"
#include "safecert/compose.h"
#include "safecert/core.h"

namespace safecert {

/// The parts of a solved certificate the grid checks need.
struct CertificateView {
  StcTemplate stc_template;
  CoefficientVector coeffs;
  double sigma = 0.0;
  double phi = 0.0;
  SupplyRate supply = SupplyRate::Zero(1, 1);
  double eta = 0.0;
  double l2 = 0.0;

  static CertificateView Of(const ClassCertificate& c);
};

struct LevelSetReport {
  double max_initial = 0.0;
  Eigen::VectorXd argmax_initial;
  double min_unsafe = 0.0;
  Eigen::VectorXd argmin_unsafe;
  double sigma = 0.0;
  double phi = 0.0;

  bool initial_ok() const { return max_initial <= sigma; }
  bool unsafe_ok() const { return min_unsafe >= phi; }
  bool gap_ok() const { return phi > sigma; }
  bool Passed() const { return initial_ok() && unsafe_ok() && gap_ok(); }
};

/// Evaluates B on grids of the initial box (max against sigma) and of the
/// unsafe box (min against phi); `counts` applies to both.
LevelSetReport CheckLevelSets(const CertificateView& cert, const SafetySpec& safety,
                              const std::vector<int>& counts);

struct HeatmapSummary {
  double max_value = 0.0;
  Eigen::VectorXd argmax;  // joint point (x, d)
  long long points = 0;
  /// eta + L2 * (covering radius of the scanned grid), for comparison.
  double diagnostic_threshold = 0.0;

  bool Passed() const { return max_value <= 0.0; }
};

using HeatmapVisitor =
    std::function<void(const Eigen::VectorXd& x, const Eigen::VectorXd& d, double value)>;

/// Scans B(f(x, d)) - B(x) - supply(d, x) over a grid of X x D (`counts`
/// over the joint box) in grid order, streaming each value to `visit`.
/// Requires an oracle.
HeatmapSummary DecreaseHeatmap(const SubsystemClass& cls, const CertificateView& cert,
                               const std::vector<int>& counts, const HeatmapVisitor& visit = {});

/// Header x0..,d0..,value then one row per visited point.
class HeatmapCsvWriter {
 public:
  HeatmapCsvWriter(std::ostream& os, int state_dim, int input_dim);
  void operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& d, double value);

 private:
  std::ostream& os_;
};

struct SurfaceTable {
  std::vector<Eigen::VectorXd> points;
  std::vector<double> values;
  double sigma = 0.0;
  double phi = 0.0;
};

/// B over a grid of the state box, with the two level values.
SurfaceTable SurfaceData(const CertificateView& cert, const IntervalBox& state_box,
                         const std::vector<int>& counts);

/// Header x0..,B,sigma,phi.
void WriteSurfaceCsv(const SurfaceTable& table, std::ostream& os);

struct PhasePortraitOptions {
  int trajectories = 25;
  int steps = 100;
};

struct PhasePortrait {
  std::vector<Trajectory> trajectories;
  std::vector<bool> entered_unsafe;
  int unsafe_count = 0;
  int exit_count = 0;
  int clamp_events = 0;

  bool Safe() const { return unsafe_count == 0; }
};

/// Initial conditions: each class's initial box carries a uniform grid with
/// ceil(T^(1/n)) points per dimension; subsystem i of trajectory g starts at
/// point (g + 7 i) mod P of its class's grid.
PhasePortrait RunPhasePortrait(const SurrogateNetwork& network, const Topology& topology,
                               const PhasePortraitOptions& options);

/// Header trajectory,step,subsystem,x0.. ; one row per state.
void WriteTrajectoryCsv(const PhasePortrait& portrait, std::ostream& os);

}  // namespace safecert
