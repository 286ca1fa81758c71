#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "scenesum/dataset.hpp"
#include "scenesum/error.hpp"

namespace scenesum {

/// Number of ordered pairs (i, j), i != j, whose positions are strictly
/// closer than r. This is the sum of the per-keyframe similar-set sizes.
inline std::size_t similar_pair_count(const std::vector<Pose>& positions, double r) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = 0; j < positions.size(); ++j) {
      if (i != j && distance(positions[i], positions[j]) < r) ++count;
    }
  }
  return count;
}

/// Spatial divergence of a keyframe set: similar pairs / k^2. Lower is more
/// diverse; bounded by (k-1)/k.
inline double divergence(const std::vector<Pose>& positions, double r) {
  require(!positions.empty(), "divergence of an empty keyframe set");
  require(r >= 0.0, "distance threshold must be non-negative");
  const double k = static_cast<double>(positions.size());
  return static_cast<double>(similar_pair_count(positions, r)) / (k * k);
}

struct DivergenceCurve {
  std::vector<double> thresholds;  // ascending, meters
  std::vector<double> values;
};

/// Divergence sampled at r = i * r_max / steps for i = 0..steps.
inline DivergenceCurve divergence_curve(const std::vector<Pose>& positions, double r_max, std::size_t steps = 100) {
  require(r_max > 0.0, "r_max must be positive");
  require(steps >= 2, "divergence curve needs at least 2 steps");
  DivergenceCurve c;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double r = static_cast<double>(i) * r_max / static_cast<double>(steps);
    c.thresholds.push_back(r);
    c.values.push_back(divergence(positions, r));
  }
  return c;
}

enum class Integration { trapezoid, left_riemann };

inline Integration parse_integration(const std::string& s) {
  if (s == "trapezoid") return Integration::trapezoid;
  if (s == "left" || s == "left-riemann") return Integration::left_riemann;
  throw Error(ErrorKind::invalid_argument, "unknown integration rule '" + s + "'");
}

/// Unnormalized area under the divergence curve.
inline double auc(const DivergenceCurve& c, Integration rule = Integration::trapezoid) {
  require(c.thresholds.size() == c.values.size(), "curve thresholds and values differ in length");
  require(c.thresholds.size() >= 2, "auc needs at least two points");
  double area = 0.0;
  for (std::size_t i = 1; i < c.thresholds.size(); ++i) {
    const double dr = c.thresholds[i] - c.thresholds[i - 1];
    require(dr > 0.0, "curve thresholds must be strictly ascending");
    area += rule == Integration::trapezoid ? 0.5 * (c.values[i] + c.values[i - 1]) * dr : c.values[i - 1] * dr;
  }
  return area;
}

inline std::string curve_csv(const DivergenceCurve& c) {
  std::string out = "r,D\n";
  char buf[64];
  for (std::size_t i = 0; i < c.thresholds.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", c.thresholds[i], c.values[i]);
    out += buf;
  }
  return out;
}

/// Poses of the selected frames, in selection order.
inline std::vector<Pose> keyframe_positions(const SceneDataset& ds, const std::vector<std::size_t>& frames) {
  if (!ds.has_poses()) {
    throw Error(ErrorKind::missing_capability, "evaluation requires poses; dataset '" + ds.scene_id + "' has none");
  }
  std::vector<Pose> out;
  out.reserve(frames.size());
  for (std::size_t f : frames) {
    require(f < ds.n_frames(), "keyframe index out of range");
    out.push_back((*ds.poses)[f]);
  }
  return out;
}

}  // namespace scenesum
