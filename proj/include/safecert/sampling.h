#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "safecert/core.h"

namespace safecert {

/// Cartesian grid over `box` with counts[k] uniformly spaced points along
/// coordinate k, endpoints included (a single point sits at the midpoint).
/// Points are ordered lexicographically, the last coordinate varying fastest.
std::vector<Eigen::VectorXd> GridSamples(const IntervalBox& box, const std::vector<int>& counts);

/// Counts whose spacing is the original spacing divided by `factor`; the
/// refined grid contains the original one.
std::vector<int> RefineCounts(const std::vector<int>& counts, int factor);

/// One recorded transition ((x, d), f(x, d)).
struct SamplePair {
  Eigen::VectorXd x;
  Eigen::VectorXd d;
  Eigen::VectorXd next;
};

struct SampleSet {
  std::vector<SamplePair> pairs;
  double dispersion = 0.0;
  /// Per-dimension counts over the joint (x, d) grid; empty for imported data.
  std::vector<int> grid_counts;

  int count() const { return static_cast<int>(pairs.size()); }
  /// Joint points (x, d) of every pair.
  std::vector<Eigen::VectorXd> JointPoints() const;
};

/// Queries the class oracle once per point of the grid over X x D. The
/// x grid is the outer loop.
SampleSet CollectPairs(const SubsystemClass& cls, const std::vector<int>& counts_state,
                       const std::vector<int>& counts_input);

/// Exact covering radius of a uniform grid over `box`:
/// 0.5 * sqrt(sum_k delta_k^2) with delta_k the spacing (the full width when
/// counts_k = 1).
double DispersionOfGrid(const IntervalBox& box, const std::vector<int>& counts);

/// Sound upper bound on the covering radius of an arbitrary sample set:
/// the largest nearest-sample distance over a probe grid, plus the probe
/// grid's own covering radius.
double DispersionGeneral(const IntervalBox& box, const std::vector<Eigen::VectorXd>& samples,
                         const std::vector<int>& probe_counts);

/// CSV with header x0..,d0..,next0.. and one row per pair, 17 significant digits.
void WriteSampleCsv(const SampleSet& samples, std::ostream& os);

/// Reads the format written by WriteSampleCsv. Throws DataFaultError on
/// malformed rows or non-finite values.
SampleSet ReadSampleCsv(std::istream& is, int state_dim, int input_dim);

}  // namespace safecert
