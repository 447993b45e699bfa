#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "safecert/core.h"
#include "safecert/reverse_weibull.h"
#include "safecert/sampling.h"
#include "safecert/scp.h"

namespace safecert {

struct LipschitzConfig {
  /// Largest distance between the two points of a slope sample.
  double gamma = 1e-3;
  /// Slopes per batch.
  int inner_count = 200;
  /// Number of batches, i.e. of batch maxima fed to the fit.
  int outer_count = 50;
  std::uint64_t seed = 1;

  void Validate() const;
};

/// The (gamma, inner, outer) ladder (1e-1, 10, 10), (1e-2, 50, 50),
/// (1e-3, 200, 200), all with `seed`.
std::vector<LipschitzConfig> RefinementLadder(std::uint64_t seed = 1);

struct LipschitzEstimate {
  double value = 0.0;
  /// Maximum slope of every batch, in batch order.
  std::vector<double> max_slope_samples;
  ReverseWeibullFit fit;
  bool fallback_used = false;
};

using ScalarTarget = std::function<double(const Eigen::VectorXd&)>;

/// `inner_count` slopes |t(p) - t(q)| / |p - q| with p uniform in `box` and q
/// at a uniform direction and a uniform radius in (0, gamma] from p, clipped
/// into the box. Partners that coincide with p after clipping are redrawn.
std::vector<double> SlopeBatch(const ScalarTarget& target, const IntervalBox& box,
                               const LipschitzConfig& config, std::mt19937_64& rng);
std::vector<double> SlopeBatch(const ScalarTarget& target, const IntervalBox& box,
                               const LipschitzConfig& config);

/// Fits a reverse Weibull law to the batch maxima and returns its endpoint.
/// Falls back to the largest maximum when the maxima have variance below
/// 1e-12 or the fit does not converge.
LipschitzEstimate EstimateLipschitz(const ScalarTarget& target, const IntervalBox& box,
                                    const LipschitzConfig& config);

/// Same estimator over recorded data: slopes are taken between a sample
/// point and a pseudo-randomly chosen other sample within `config.gamma`.
/// Samples without such a neighbour are skipped.
LipschitzEstimate EstimateLipschitzFromData(const std::vector<Eigen::VectorXd>& points,
                                            const std::vector<double>& values,
                                            const LipschitzConfig& config);

/// Turns batch maxima into an estimate (shared by both estimators).
LipschitzEstimate EstimateFromMaxima(std::vector<double> maxima);

struct ClassLipschitz {
  LipschitzEstimate l1;  // of x -> B(x) over the state box
  LipschitzEstimate l2;  // of (x, d) -> B(f(x, d)) - B(x) over the joint box
};

/// Requires an oracle; the two targets use seeds `seed` and `seed + 1`.
ClassLipschitz EstimateForClass(const SubsystemClass& cls, const CoefficientVector& coeffs,
                                const LipschitzConfig& config);
ClassLipschitz EstimateForClass(const SubsystemClass& cls, const ScpSolution& solution,
                                const LipschitzConfig& config);

/// Oracle-free variant: L1 samples B directly, L2 uses the recorded pairs
/// with a neighbour radius of max(gamma, 2 * samples.dispersion).
ClassLipschitz EstimateForClassFromData(const SubsystemClass& cls, const CoefficientVector& coeffs,
                                        const SampleSet& samples, const LipschitzConfig& config);

}  // namespace safecert
