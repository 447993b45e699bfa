#include "safecert/reverse_weibull.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>

namespace safecert {

double ReverseWeibullLogLikelihood(const std::vector<double>& samples, double location,
                                   double scale, double shape) {
  if (!(scale > 0.0) || !(shape > 0.0)) return -std::numeric_limits<double>::infinity();
  double ll = 0.0;
  for (double r : samples) {
    const double y = location - r;
    if (!(y > 0.0)) return -std::numeric_limits<double>::infinity();
    const double z = y / scale;
    ll += std::log(shape / scale) + (shape - 1.0) * std::log(z) - std::pow(z, shape);
  }
  return ll;
}

namespace {

struct WeibullMle {
  double scale;
  double shape;
  double log_likelihood;
};

// Two-parameter Weibull MLE of positive data y. The shape solves
//   sum y^k ln y / sum y^k - 1/k - mean(ln y) = 0,
// whose left side increases in k; it is clamped to [min_shape, max_shape].
WeibullMle FitWeibull(const std::vector<double>& y, double min_shape, double max_shape) {
  const double n = static_cast<double>(y.size());
  const double y_max = *std::max_element(y.begin(), y.end());
  std::vector<double> log_u(y.size());
  double mean_log_u = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    log_u[i] = std::log(y[i] / y_max);
    mean_log_u += log_u[i] / n;
  }
  auto score = [&](double k) {
    double sum = 0.0, weighted = 0.0;
    for (double lu : log_u) {
      const double w = std::exp(k * lu);
      sum += w;
      weighted += w * lu;
    }
    return weighted / sum - 1.0 / k - mean_log_u;
  };
  double k;
  if (score(min_shape) >= 0.0) {
    k = min_shape;
  } else if (score(max_shape) <= 0.0) {
    k = max_shape;
  } else {
    double lo = min_shape, hi = max_shape;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (score(mid) < 0.0 ? lo : hi) = mid;
    }
    k = 0.5 * (lo + hi);
  }
  double mean_pow = 0.0;
  for (double lu : log_u) mean_pow += std::exp(k * lu) / n;
  const double scale = y_max * std::pow(mean_pow, 1.0 / k);
  double ll = n * (std::log(k) - k * std::log(scale)) - n * mean_pow * std::pow(y_max / scale, k);
  for (double v : y) ll += (k - 1.0) * std::log(v);
  return {scale, k, ll};
}

}  // namespace

ReverseWeibullFit FitReverseWeibull(const std::vector<double>& samples,
                                    const ReverseWeibullOptions& options) {
  ReverseWeibullFit fit;
  if (samples.empty()) return fit;
  const auto [min_it, max_it] = std::minmax_element(samples.begin(), samples.end());
  const double r_max = *max_it;
  const double range = r_max - *min_it;
  fit.location = r_max;
  if (samples.size() < 3 || !std::isfinite(range) || !(range > 1e-14 * std::max(1.0, std::abs(r_max)))) {
    return fit;
  }

  std::vector<double> y(samples.size());
  auto profile = [&](double log_offset) {
    const double mu = r_max + std::exp(log_offset);
    for (size_t i = 0; i < samples.size(); ++i) y[i] = mu - samples[i];
    return FitWeibull(y, options.min_shape, options.max_shape);
  };

  const double lo = std::log(range * 1e-8);
  const double hi = std::log(range * options.location_span);
  const int m = std::max(options.scan_points, 3);
  int best = 0;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < m; ++j) {
    const double t = lo + (hi - lo) * j / (m - 1);
    const double ll = profile(t).log_likelihood;
    if (ll > best_ll) {
      best_ll = ll;
      best = j;
    }
  }
  const double step = (hi - lo) / (m - 1);
  const double a = lo + step * std::max(best - 1, 0);
  const double b = lo + step * std::min(best + 1, m - 1);
  const auto [t_star, neg_ll] = boost::math::tools::brent_find_minima(
      [&](double t) { return -profile(t).log_likelihood; }, a, b, 52);
  const WeibullMle mle = profile(t_star);
  if (!std::isfinite(neg_ll) || best == m - 1) return fit;

  fit.location = r_max + std::exp(t_star);
  fit.scale = mle.scale;
  fit.shape = mle.shape;
  fit.log_likelihood = mle.log_likelihood;
  fit.converged = std::isfinite(fit.location) && fit.location > r_max;
  if (!fit.converged) fit.location = r_max;
  return fit;
}

}  // namespace safecert
