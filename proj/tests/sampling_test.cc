#include "safecert/sampling.h"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "safecert/blackbox.h"

namespace safecert {
namespace {

Eigen::VectorXd Vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

// Largest distance from a probe point to its nearest sample.
double BruteCoveringRadius(const std::vector<Eigen::VectorXd>& probes,
                           const std::vector<Eigen::VectorXd>& samples) {
  double worst = 0.0;
  for (const auto& p : probes) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) best = std::min(best, (p - s).norm());
    worst = std::max(worst, best);
  }
  return worst;
}

TEST(GridSamples, Examples) {
  const auto a = GridSamples(IntervalBox::Interval(0, 1), {3});
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0][0], 0.0);
  EXPECT_EQ(a[1][0], 0.5);
  EXPECT_EQ(a[2][0], 1.0);
  const auto b = GridSamples(IntervalBox::Interval(0, 2), {1});
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0][0], 1.0);
  const auto c = GridSamples(IntervalBox(Vec({0, 0}), Vec({1, 1})), {2, 2});
  ASSERT_EQ(c.size(), 4u);
  EXPECT_EQ(c[0], Vec({0, 0}));
  EXPECT_EQ(c[1], Vec({0, 1}));
  EXPECT_EQ(c[2], Vec({1, 0}));
  EXPECT_EQ(c[3], Vec({1, 1}));
}

TEST(GridSamples, Errors) {
  EXPECT_THROW(GridSamples(IntervalBox::Interval(1, 1), {2}), InvalidInputError);
  EXPECT_NO_THROW(GridSamples(IntervalBox::Interval(1, 1), {1}));
  EXPECT_THROW(GridSamples(IntervalBox::Interval(0, 1), {0}), InvalidInputError);
  EXPECT_THROW(GridSamples(IntervalBox::Interval(0, 1), {2, 2}), InvalidInputError);
}

TEST(RefineCounts, RefinedGridContainsOriginal) {
  const IntervalBox box(Vec({10, 0.8}), Vec({13, 2}));
  for (int factor : {2, 4, 10}) {
    const auto coarse = GridSamples(box, {31, 13});
    const auto fine = GridSamples(box, RefineCounts({31, 13}, factor));
    for (const auto& p : coarse) {
      bool found = false;
      for (const auto& q : fine) found = found || (p - q).norm() < 1e-12;
      EXPECT_TRUE(found) << "factor " << factor;
    }
  }
  EXPECT_EQ(RefineCounts({31, 13}, 10), (std::vector<int>{301, 121}));
}

TEST(CollectPairs, RoomOracleArithmetic) {
  const SampleSet s = CollectPairs(RoomClass(), {2}, {2});
  ASSERT_EQ(s.count(), 4);
  for (const auto& p : s.pairs) {
    EXPECT_NEAR(p.next[0], 0.9 * p.x[0] + 0.06 * p.d[0] + 0.4, 1e-12);
  }
  EXPECT_EQ(s.grid_counts, (std::vector<int>{2, 2}));
}

TEST(CollectPairs, SinglePointAtMidpoints) {
  const SampleSet s = CollectPairs(RoomClass(), {1}, {1});
  ASSERT_EQ(s.count(), 1);
  EXPECT_EQ(s.pairs[0].x[0], 11.5);
  EXPECT_EQ(s.pairs[0].d[0], 11.5);
}

TEST(CollectPairs, PlatoonProductCount) {
  const SampleSet s = CollectPairs(PlatoonClass(), {2, 2}, {2, 2});
  EXPECT_EQ(s.count(), 16);
  const IntervalBox joint = PlatoonClass().JointBox();
  for (const auto& z : s.JointPoints()) EXPECT_TRUE(joint.Contains(z));
}

TEST(CollectPairs, NonFiniteOracleIsADataFault) {
  const IntervalBox x = IntervalBox::Interval(0, 1);
  const SubsystemClass cls("bad", x, x,
                           SafetySpec(IntervalBox::Interval(0, 0.2), IntervalBox::Interval(0.8, 1)),
                           StcTemplate(1, {{1}}),
                           [](const Eigen::VectorXd& s, const Eigen::VectorXd&) {
                             return Eigen::VectorXd::Constant(1, s[0] > 0.9 ? INFINITY : s[0]);
                           });
  EXPECT_THROW(CollectPairs(cls, {5}, {2}), DataFaultError);
}

TEST(DispersionOfGrid, Examples) {
  EXPECT_DOUBLE_EQ(DispersionOfGrid(IntervalBox::Interval(0, 2), {1}), 1.0);
  const double theta = DispersionOfGrid(IntervalBox(Vec({0, 0}), Vec({1, 1})), {11, 11});
  EXPECT_NEAR(theta, 0.0707, 1e-4);
  EXPECT_NEAR(theta, 0.5 * std::sqrt(0.02), 1e-12);
}

TEST(DispersionOfGrid, MatchesBruteForceOnFinerProbe) {
  const IntervalBox box(Vec({0, 0}), Vec({1, 1}));
  const std::vector<int> counts = {11, 11};
  const double theta = DispersionOfGrid(box, counts);
  const double brute = BruteCoveringRadius(GridSamples(box, RefineCounts(counts, 10)),
                                           GridSamples(box, counts));
  EXPECT_LE(brute, theta + 1e-12);
  EXPECT_NEAR(brute, theta, 1e-12);  // cell centres lie on the 10x grid
}

TEST(DispersionOfGrid, SoundOnBenchmarks) {
  for (const SubsystemClass& cls : {RoomClass(), PlatoonClass()}) {
    const std::vector<int> counts =
        cls.state_dim() == 1 ? std::vector<int>{7, 7} : std::vector<int>{3, 4, 3, 4};
    const SampleSet s = CollectPairs(cls, {counts.begin(), counts.begin() + cls.state_dim()},
                                     {counts.begin() + cls.state_dim(), counts.end()});
    const double brute =
        BruteCoveringRadius(GridSamples(cls.JointBox(), RefineCounts(counts, 10)), s.JointPoints());
    EXPECT_LE(brute, s.dispersion + 1e-12) << cls.id();
  }
}

TEST(DispersionGeneral, UpperBoundsTrueRadius) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const IntervalBox box(Vec({0, 0}), Vec({1, 1}));
  std::vector<Eigen::VectorXd> samples;
  for (int i = 0; i < 60; ++i) samples.push_back(Vec({u(rng), u(rng)}));
  const double bound = DispersionGeneral(box, samples, {21, 21});
  const double reference = BruteCoveringRadius(GridSamples(box, {201, 201}), samples);
  EXPECT_GE(bound, reference);
  EXPECT_LE(bound, reference + DispersionOfGrid(box, {21, 21}) + 1e-12);
  EXPECT_THROW(DispersionGeneral(box, {}, {3, 3}), InvalidInputError);
}

TEST(SampleCsv, RoundTripIsExact) {
  const SampleSet s = CollectPairs(PlatoonClass(), {3, 2}, {2, 3});
  std::stringstream buf;
  WriteSampleCsv(s, buf);
  const std::string text = buf.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "x0,x1,d0,d1,next0,next1");
  const SampleSet back = ReadSampleCsv(buf, 2, 2);
  ASSERT_EQ(back.count(), s.count());
  for (int i = 0; i < s.count(); ++i) {
    EXPECT_EQ(back.pairs[i].x, s.pairs[i].x);
    EXPECT_EQ(back.pairs[i].d, s.pairs[i].d);
    EXPECT_EQ(back.pairs[i].next, s.pairs[i].next);
  }
}

TEST(SampleCsv, MalformedInput) {
  std::stringstream missing_column("x0,d0,next0\n1,2\n");
  EXPECT_THROW(ReadSampleCsv(missing_column, 1, 1), DataFaultError);
  std::stringstream bad_number("x0,d0,next0\n1,abc,3\n");
  EXPECT_THROW(ReadSampleCsv(bad_number, 1, 1), DataFaultError);
  std::stringstream non_finite("x0,d0,next0\n1,nan,3\n");
  EXPECT_THROW(ReadSampleCsv(non_finite, 1, 1), DataFaultError);
  std::stringstream empty("x0,d0,next0\n");
  EXPECT_THROW(ReadSampleCsv(empty, 1, 1), DataFaultError);
}

}  // namespace
}  // namespace safecert
