#include "safecert/sampling.h"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace safecert {

namespace {

void CheckCounts(const IntervalBox& box, const std::vector<int>& counts, const char* who) {
  if (static_cast<int>(counts.size()) != box.dim()) {
    throw InvalidInputError(std::string(who) + ": one count per box dimension required");
  }
  for (int c : counts) {
    if (c < 1) throw InvalidInputError(std::string(who) + ": counts must be >= 1");
  }
}

std::vector<std::vector<double>> AxisPoints(const IntervalBox& box, const std::vector<int>& counts) {
  std::vector<std::vector<double>> axes(box.dim());
  for (int k = 0; k < box.dim(); ++k) {
    const double lo = box.lower()[k], hi = box.upper()[k];
    if (counts[k] == 1) {
      axes[k].push_back(0.5 * (lo + hi));
      continue;
    }
    if (lo == hi) {
      throw InvalidInputError("GridSamples: several points requested along an empty dimension");
    }
    for (int i = 0; i < counts[k]; ++i) {
      // The last point is pinned to the upper bound so that grids nest exactly.
      axes[k].push_back(i + 1 == counts[k] ? hi : lo + (hi - lo) * i / (counts[k] - 1));
    }
  }
  return axes;
}

}  // namespace

std::vector<Eigen::VectorXd> GridSamples(const IntervalBox& box, const std::vector<int>& counts) {
  CheckCounts(box, counts, "GridSamples");
  const auto axes = AxisPoints(box, counts);
  std::size_t total = 1;
  for (int c : counts) total *= static_cast<std::size_t>(c);

  std::vector<Eigen::VectorXd> out;
  out.reserve(total);
  std::vector<int> index(box.dim(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    Eigen::VectorXd p(box.dim());
    for (int k = 0; k < box.dim(); ++k) p[k] = axes[k][index[k]];
    out.push_back(std::move(p));
    for (int k = box.dim() - 1; k >= 0; --k) {
      if (++index[k] < counts[k]) break;
      index[k] = 0;
    }
  }
  return out;
}

std::vector<int> RefineCounts(const std::vector<int>& counts, int factor) {
  std::vector<int> out;
  out.reserve(counts.size());
  for (int c : counts) out.push_back(c == 1 ? factor + 1 : factor * (c - 1) + 1);
  return out;
}

std::vector<Eigen::VectorXd> SampleSet::JointPoints() const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    Eigen::VectorXd z(p.x.size() + p.d.size());
    z << p.x, p.d;
    out.push_back(std::move(z));
  }
  return out;
}

SampleSet CollectPairs(const SubsystemClass& cls, const std::vector<int>& counts_state,
                       const std::vector<int>& counts_input) {
  const auto xs = GridSamples(cls.state_box(), counts_state);
  const auto ds = GridSamples(cls.input_box(), counts_input);
  SampleSet set;
  set.pairs.reserve(xs.size() * ds.size());
  for (const auto& x : xs) {
    for (const auto& d : ds) set.pairs.push_back({x, d, cls.Step(x, d)});
  }
  set.grid_counts = counts_state;
  set.grid_counts.insert(set.grid_counts.end(), counts_input.begin(), counts_input.end());
  set.dispersion = DispersionOfGrid(cls.JointBox(), set.grid_counts);
  return set;
}

double DispersionOfGrid(const IntervalBox& box, const std::vector<int>& counts) {
  CheckCounts(box, counts, "DispersionOfGrid");
  double sum = 0.0;
  for (int k = 0; k < box.dim(); ++k) {
    const double delta = counts[k] == 1 ? box.width(k) : box.width(k) / (counts[k] - 1);
    sum += delta * delta;
  }
  return 0.5 * std::sqrt(sum);
}

double DispersionGeneral(const IntervalBox& box, const std::vector<Eigen::VectorXd>& samples,
                         const std::vector<int>& probe_counts) {
  if (samples.empty()) throw InvalidInputError("DispersionGeneral: no samples");
  for (const auto& s : samples) {
    if (s.size() != box.dim()) throw InvalidInputError("DispersionGeneral: sample dimension mismatch");
  }
  const auto probes = GridSamples(box, probe_counts);
  double worst = 0.0;
  for (const auto& p : probes) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
      best = std::min(best, (p - s).squaredNorm());
      if (best <= worst) break;  // this probe cannot raise the maximum
    }
    worst = std::max(worst, best);
  }
  return std::sqrt(worst) + DispersionOfGrid(box, probe_counts);
}

void WriteSampleCsv(const SampleSet& samples, std::ostream& os) {
  if (samples.pairs.empty()) return;
  const auto& first = samples.pairs.front();
  const int n = static_cast<int>(first.x.size()), p = static_cast<int>(first.d.size());
  for (int k = 0; k < n; ++k) os << (k ? "," : "") << "x" << k;
  for (int k = 0; k < p; ++k) os << ",d" << k;
  for (int k = 0; k < n; ++k) os << ",next" << k;
  os << "\n" << std::setprecision(17);
  for (const auto& s : samples.pairs) {
    for (int k = 0; k < n; ++k) os << (k ? "," : "") << s.x[k];
    for (int k = 0; k < p; ++k) os << "," << s.d[k];
    for (int k = 0; k < n; ++k) os << "," << s.next[k];
    os << "\n";
  }
}

SampleSet ReadSampleCsv(std::istream& is, int state_dim, int input_dim) {
  const int width = 2 * state_dim + input_dim;
  std::string line;
  if (!std::getline(is, line)) throw DataFaultError("sample CSV: missing header");
  SampleSet set;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw DataFaultError("sample CSV row " + std::to_string(row) + ": bad number '" + cell + "'");
      }
      if (!std::isfinite(values.back())) {
        throw DataFaultError("sample CSV row " + std::to_string(row) + ": non-finite value");
      }
    }
    if (static_cast<int>(values.size()) != width) {
      throw DataFaultError("sample CSV row " + std::to_string(row) + ": expected " +
                           std::to_string(width) + " columns");
    }
    SamplePair pair{Eigen::Map<Eigen::VectorXd>(values.data(), state_dim),
                    Eigen::Map<Eigen::VectorXd>(values.data() + state_dim, input_dim),
                    Eigen::Map<Eigen::VectorXd>(values.data() + state_dim + input_dim, state_dim)};
    set.pairs.push_back(std::move(pair));
  }
  if (set.pairs.empty()) throw DataFaultError("sample CSV: no data rows");
  return set;
}

}  // namespace safecert
