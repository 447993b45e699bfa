#include "safecert/lipschitz.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace safecert {

void LipschitzConfig::Validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw InvalidInputError("LipschitzConfig: gamma must be finite and positive");
  }
  if (inner_count < 1 || outer_count < 1) {
    throw InvalidInputError("LipschitzConfig: inner_count and outer_count must be positive");
  }
}

std::vector<LipschitzConfig> RefinementLadder(std::uint64_t seed) {
  return {{1e-1, 10, 10, seed}, {1e-2, 50, 50, seed}, {1e-3, 200, 200, seed}};
}

std::vector<double> SlopeBatch(const ScalarTarget& target, const IntervalBox& box,
                               const LipschitzConfig& config, std::mt19937_64& rng) {
  config.Validate();
  if (box.IsPoint()) throw InvalidInputError("SlopeBatch: box has zero volume in every dimension");
  const int n = box.dim();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> slopes;
  slopes.reserve(config.inner_count);
  Eigen::VectorXd p(n), dir(n);
  while (static_cast<int>(slopes.size()) < config.inner_count) {
    for (int k = 0; k < n; ++k) p[k] = box.lower()[k] + box.width(k) * unit(rng);
    double norm = 0.0;
    while (norm == 0.0) {
      for (int k = 0; k < n; ++k) dir[k] = box.width(k) > 0.0 ? normal(rng) : 0.0;
      norm = dir.norm();
    }
    const double radius = config.gamma * (1.0 - unit(rng));
    const Eigen::VectorXd q = box.Clamp(p + radius * dir / norm);
    const double dist = (q - p).norm();
    if (!(dist > 0.0)) continue;
    slopes.push_back(std::abs(target(p) - target(q)) / dist);
  }
  return slopes;
}

std::vector<double> SlopeBatch(const ScalarTarget& target, const IntervalBox& box,
                               const LipschitzConfig& config) {
  std::mt19937_64 rng(config.seed);
  return SlopeBatch(target, box, config, rng);
}

LipschitzEstimate EstimateFromMaxima(std::vector<double> maxima) {
  if (maxima.empty()) throw InvalidInputError("EstimateFromMaxima: no batch maxima");
  LipschitzEstimate est;
  est.max_slope_samples = std::move(maxima);
  const auto& r = est.max_slope_samples;
  const double n = static_cast<double>(r.size());
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / n;
  double var = 0.0;
  for (double v : r) var += (v - mean) * (v - mean);
  var /= std::max(1.0, n - 1.0);
  const double r_max = *std::max_element(r.begin(), r.end());
  if (var >= 1e-12) est.fit = FitReverseWeibull(r);
  if (var < 1e-12 || !est.fit.converged || !(est.fit.location >= r_max)) {
    est.fallback_used = true;
    est.value = r_max;
  } else {
    est.value = est.fit.location;
  }
  return est;
}

LipschitzEstimate EstimateLipschitz(const ScalarTarget& target, const IntervalBox& box,
                                    const LipschitzConfig& config) {
  config.Validate();
  std::mt19937_64 rng(config.seed);
  std::vector<double> maxima;
  maxima.reserve(config.outer_count);
  for (int j = 0; j < config.outer_count; ++j) {
    const auto slopes = SlopeBatch(target, box, config, rng);
    maxima.push_back(*std::max_element(slopes.begin(), slopes.end()));
  }
  return EstimateFromMaxima(std::move(maxima));
}

LipschitzEstimate EstimateLipschitzFromData(const std::vector<Eigen::VectorXd>& points,
                                            const std::vector<double>& values,
                                            const LipschitzConfig& config) {
  config.Validate();
  if (points.size() < 2 || points.size() != values.size()) {
    throw InvalidInputError("EstimateLipschitzFromData: need at least two points with values");
  }
  const int count = static_cast<int>(points.size());
  std::unordered_map<int, std::vector<int>> neighbours;
  auto neighbours_of = [&](int i) -> const std::vector<int>& {
    auto it = neighbours.find(i);
    if (it != neighbours.end()) return it->second;
    std::vector<int> list;
    for (int j = 0; j < count; ++j) {
      const double dist = (points[j] - points[i]).norm();
      if (j != i && dist > 0.0 && dist <= config.gamma) list.push_back(j);
    }
    return neighbours.emplace(i, std::move(list)).first->second;
  };

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<int> pick(0, count - 1);
  std::vector<double> maxima;
  maxima.reserve(config.outer_count);
  const long long attempt_cap = 1000LL * config.inner_count;
  for (int b = 0; b < config.outer_count; ++b) {
    double best = -1.0;
    int taken = 0;
    for (long long attempt = 0; taken < config.inner_count && attempt < attempt_cap; ++attempt) {
      const int i = pick(rng);
      const auto& list = neighbours_of(i);
      if (list.empty()) continue;
      std::uniform_int_distribution<size_t> choose(0, list.size() - 1);
      const int j = list[choose(rng)];
      best = std::max(best, std::abs(values[i] - values[j]) / (points[i] - points[j]).norm());
      ++taken;
    }
    if (taken == 0) {
      throw InvalidInputError("EstimateLipschitzFromData: no two samples lie within gamma");
    }
    maxima.push_back(best);
  }
  return EstimateFromMaxima(std::move(maxima));
}

ClassLipschitz EstimateForClass(const SubsystemClass& cls, const CoefficientVector& coeffs,
                                const LipschitzConfig& config) {
  if (!cls.has_oracle()) {
    throw InvalidInputError("EstimateForClass: class '" + cls.id() + "' has no oracle");
  }
  const StcTemplate& tmpl = cls.stc_template();
  const int n = cls.state_dim();
  ClassLipschitz out;
  out.l1 = EstimateLipschitz([&](const Eigen::VectorXd& x) { return EvalTemplate(tmpl, coeffs, x); },
                             cls.state_box(), config);
  LipschitzConfig second = config;
  second.seed = config.seed + 1;
  out.l2 = EstimateLipschitz(
      [&](const Eigen::VectorXd& z) {
        const Eigen::VectorXd x = z.head(n);
        return EvalTemplate(tmpl, coeffs, cls.Step(x, z.tail(cls.input_dim()))) -
               EvalTemplate(tmpl, coeffs, x);
      },
      cls.JointBox(), second);
  return out;
}

ClassLipschitz EstimateForClass(const SubsystemClass& cls, const ScpSolution& solution,
                                const LipschitzConfig& config) {
  return EstimateForClass(cls, solution.coeffs, config);
}

ClassLipschitz EstimateForClassFromData(const SubsystemClass& cls, const CoefficientVector& coeffs,
                                        const SampleSet& samples, const LipschitzConfig& config) {
  const StcTemplate& tmpl = cls.stc_template();
  ClassLipschitz out;
  out.l1 = EstimateLipschitz([&](const Eigen::VectorXd& x) { return EvalTemplate(tmpl, coeffs, x); },
                             cls.state_box(), config);
  std::vector<double> values;
  values.reserve(samples.pairs.size());
  for (const auto& s : samples.pairs) {
    values.push_back(EvalTemplate(tmpl, coeffs, s.next) - EvalTemplate(tmpl, coeffs, s.x));
  }
  LipschitzConfig second = config;
  second.seed = config.seed + 1;
  second.gamma = std::max(config.gamma, 2.0 * samples.dispersion);
  out.l2 = EstimateLipschitzFromData(samples.JointPoints(), values, second);
  return out;
}

}  // namespace safecert
