#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "scenesum/metrics.hpp"

using namespace scenesum;

namespace {

std::vector<Pose> random_positions(std::mt19937_64& rng, std::size_t k, double side) {
  std::uniform_real_distribution<double> u(0.0, side);
  std::vector<Pose> out(k);
  for (auto& p : out) p = {u(rng), u(rng), 0.0};
  return out;
}

std::size_t brute_pairs(const std::vector<Pose>& ps, double r) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t j = 0; j < ps.size(); ++j) {
      if (i == j) continue;
      const double dx = ps[i].x - ps[j].x, dy = ps[i].y - ps[j].y, dz = ps[i].z - ps[j].z;
      if (std::sqrt(dx * dx + dy * dy + dz * dz) < r) ++n;
    }
  }
  return n;
}

const std::vector<Pose> kCoincident(4, Pose{1.0, 2.0, 0.5});

}  // namespace

TEST(Divergence, CoincidentPositions) {
  for (double r : {1e-9, 0.5, 3.0}) EXPECT_EQ(divergence(kCoincident, r), 0.75);
  EXPECT_EQ(divergence(kCoincident, 0.0), 0.0);
}

TEST(Divergence, FarApartIsZero) {
  const std::vector<Pose> ps{{0, 0, 0}, {5, 0, 0}, {0, 5, 0}, {5, 5, 0}};
  EXPECT_EQ(divergence(ps, 5.0), 0.0);  // strict inequality at exactly r
  EXPECT_EQ(divergence(ps, 5.0 + 1e-9), 8.0 / 16.0);
}

TEST(Divergence, MatchesPairLoop) {
  std::mt19937_64 rng(1);
  const auto ps = random_positions(rng, 20, 10.0);
  EXPECT_EQ(similar_pair_count(ps, 1.5), brute_pairs(ps, 1.5));
  EXPECT_EQ(divergence(ps, 1.5), static_cast<double>(brute_pairs(ps, 1.5)) / 400.0);
}

TEST(Divergence, RandomSetsMatchBruteForce) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> kd(1, 30);
  std::uniform_real_distribution<double> rd(0.0, 8.0);
  for (int t = 0; t < 300; ++t) {
    const auto ps = random_positions(rng, kd(rng), 10.0);
    const double r = rd(rng);
    ASSERT_EQ(similar_pair_count(ps, r), brute_pairs(ps, r));
  }
}

TEST(Divergence, Properties) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 30; ++t) {
    auto ps = random_positions(rng, 2 + t % 15, 6.0);
    const double k = static_cast<double>(ps.size());
    double prev = 0.0;
    for (double r = 0.0; r < 12.0; r += 0.25) {
      const double d = divergence(ps, r);
      EXPECT_GE(d, prev);
      EXPECT_GE(d, 0.0);
      EXPECT_LE(d, (k - 1) / k);
      prev = d;
    }
    const double r = 2.0, base = divergence(ps, r);
    std::vector<Pose> moved = ps;
    const double th = 0.7, c = std::cos(th), s = std::sin(th);
    for (auto& p : moved) p = {c * p.x - s * p.y + 13.0, s * p.x + c * p.y - 4.0, p.z + 2.0};
    // Rotation can move a distance across r only by rounding; skip knife-edge cases.
    bool knife_edge = false;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      for (std::size_t j = 0; j < ps.size(); ++j) knife_edge |= i != j && std::abs(distance(ps[i], ps[j]) - r) < 1e-9;
    }
    if (!knife_edge) {
      EXPECT_EQ(divergence(moved, r), base);
    }
    std::shuffle(ps.begin(), ps.end(), rng);
    EXPECT_EQ(divergence(ps, r), base);
  }
}

TEST(Divergence, InvalidInputs) {
  EXPECT_THROW(divergence({}, 1.0), Error);
  EXPECT_THROW(divergence(kCoincident, -1.0), Error);
}

TEST(Curve, ThresholdsAndPointwiseValues) {
  std::mt19937_64 rng(4);
  const auto ps = random_positions(rng, 12, 5.0);
  const DivergenceCurve c = divergence_curve(ps, 3.0, 100);
  ASSERT_EQ(c.thresholds.size(), 101u);
  EXPECT_EQ(c.values[0], 0.0);
  for (std::size_t i = 0; i <= 100; ++i) {
    EXPECT_EQ(c.thresholds[i], i * 3.0 / 100);
    EXPECT_EQ(c.values[i], divergence(ps, c.thresholds[i]));
  }
  EXPECT_THROW(divergence_curve(ps, 0.0), Error);
  EXPECT_THROW(divergence_curve(ps, 3.0, 1), Error);
}

TEST(Curve, CoincidentStep) {
  const DivergenceCurve c = divergence_curve(kCoincident, 3.0, 100);
  EXPECT_EQ(c.values[0], 0.0);
  for (std::size_t i = 1; i <= 100; ++i) EXPECT_EQ(c.values[i], 0.75);
}

TEST(Auc, ClosedForms) {
  DivergenceCurve zero{{0, 1, 2, 3}, {0, 0, 0, 0}};
  EXPECT_EQ(auc(zero), 0.0);
  DivergenceCurve flat{{0, 0.5, 2.5, 4}, {0.3, 0.3, 0.3, 0.3}};
  EXPECT_NEAR(auc(flat), 1.2, 1e-15);
  EXPECT_NEAR(auc(flat, Integration::left_riemann), 1.2, 1e-15);
  EXPECT_THROW(auc(DivergenceCurve{{0}, {0}}), Error);
  EXPECT_THROW(auc(DivergenceCurve{{0, 0}, {0, 0}}), Error);
}

TEST(Auc, CoincidentStepTrapezoid) {
  const double a = auc(divergence_curve(kCoincident, 3.0, 100));
  EXPECT_NEAR(a, 0.75 * 3.0 - 0.75 * (3.0 / 100) / 2, 1e-12);
  EXPECT_NEAR(a, 2.23875, 1e-12);
  // Left sums drop the whole first interval instead of half of it.
  EXPECT_NEAR(auc(divergence_curve(kCoincident, 3.0, 100), Integration::left_riemann), 0.75 * 2.97, 1e-12);
}

TEST(Auc, LinearInValues) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  DivergenceCurve a, b, mix;
  for (int i = 0; i <= 20; ++i) {
    const double r = i * 0.15;
    a.thresholds.push_back(r);
    b.thresholds.push_back(r);
    mix.thresholds.push_back(r);
    a.values.push_back(u(rng));
    b.values.push_back(u(rng));
    mix.values.push_back(2.5 * a.values.back() - 0.75 * b.values.back());
  }
  for (Integration rule : {Integration::trapezoid, Integration::left_riemann}) {
    EXPECT_NEAR(auc(mix, rule), 2.5 * auc(a, rule) - 0.75 * auc(b, rule), 1e-12);
  }
  EXPECT_EQ(parse_integration("left"), Integration::left_riemann);
  EXPECT_THROW(parse_integration("simpson"), Error);
}

TEST(Curve, CsvHasOneRowPerThreshold) {
  const std::string csv = curve_csv(divergence_curve(kCoincident, 3.0, 50));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 52);
  EXPECT_EQ(csv.substr(0, 4), "r,D\n");
  EXPECT_NE(csv.find("\n0,0\n"), std::string::npos);
}

TEST(Positions, MissingPosesIsCapabilityError) {
  SceneDataset ds;
  ds.scene_id = "x";
  ds.features = FeatureMatrix(3, 2, 0.0f);
  try {
    keyframe_positions(ds, {0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::missing_capability);
  }
  ds.poses = std::vector<Pose>{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  EXPECT_EQ(keyframe_positions(ds, {2, 0}), (std::vector<Pose>{{2, 0, 0}, {0, 0, 0}}));
  EXPECT_THROW(keyframe_positions(ds, {3}), Error);
}
