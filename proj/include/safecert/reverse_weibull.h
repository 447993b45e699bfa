#pragma once

#include <vector>

namespace safecert {

/// Reverse Weibull law with upper endpoint `location`:
///   P(R <= r) = exp(-((location - r) / scale)^shape),  r < location.
struct ReverseWeibullFit {
  double location = 0.0;
  double scale = 0.0;
  double shape = 0.0;
  double log_likelihood = 0.0;
  bool converged = false;
};

struct ReverseWeibullOptions {
  /// Shapes below one make the likelihood unbounded as the endpoint
  /// approaches the sample maximum, so the shape is kept in this range.
  double min_shape = 1.0;
  double max_shape = 200.0;
  /// The endpoint is searched in (max, max + location_span * (max - min)].
  double location_span = 10.0;
  int scan_points = 64;
};

/// Log-likelihood of `samples` under the given parameters; -inf when a
/// sample lies at or above the endpoint.
double ReverseWeibullLogLikelihood(const std::vector<double>& samples, double location,
                                   double scale, double shape);

/// Maximum-likelihood fit by profiling over the endpoint: for each
/// candidate endpoint the two-parameter Weibull MLE of location - R is
/// solved exactly, and the profile is maximized by a log-spaced scan
/// followed by Brent refinement. converged = false when fewer than three
/// samples are given, the samples have no spread, or the optimum sits on
/// the upper end of the search range.
ReverseWeibullFit FitReverseWeibull(const std::vector<double>& samples,
                                    const ReverseWeibullOptions& options = {});

}  // namespace safecert
