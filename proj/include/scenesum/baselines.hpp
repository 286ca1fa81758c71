#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "scenesum/clustering.hpp"
#include "scenesum/error.hpp"
#include "scenesum/matrix.hpp"
#include "scenesum/summary.hpp"

namespace scenesum {

namespace detail {
inline void check_k(std::size_t n, std::size_t k) {
  require(k >= 1, "k must be at least 1");
  require(k <= n, "k exceeds the number of frames");
}
}  // namespace detail

/// Evenly spaced frames round(i * (n-1) / (k-1)).
inline SummaryResult uniform_summary(std::size_t n, std::size_t k) {
  detail::check_k(n, k);
  SummaryResult s{"uniform", {}, {}};
  if (k == 1) {
    s.frame_indices = {0};
    return s;
  }
  for (std::size_t i = 0; i < k; ++i) {
    const double pos = static_cast<double>(i) * static_cast<double>(n - 1) / static_cast<double>(k - 1);
    s.frame_indices.push_back(static_cast<std::size_t>(std::llround(pos)));
  }
  return s;
}

/// k distinct frames uniformly without replacement, sorted ascending.
inline SummaryResult random_summary(std::size_t n, std::size_t k, std::uint64_t seed) {
  detail::check_k(n, k);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return {"random", std::move(idx), {}};
}

/// VSUMM-style: k-means on features, keyframe = member nearest its centroid.
template <typename T>
SummaryResult vsumm_centroid(const BasicMatrix<T>& features, std::size_t k, std::uint64_t seed) {
  detail::check_k(features.rows(), k);
  const KMeansResult km = kmeans(features, k, seed);
  const ClusterPartition part = ClusterPartition::from_labels(k, km.labels, km.centroids);
  SummaryResult s{"vsumm", {}, {}};
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t best = part.members[j].front();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i : part.members[j]) {
      const double d = squared_distance(features.row(i), km.centroids.row(j));
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    s.frame_indices.push_back(best);
  }
  return s;
}

/// Per-frame content-change scores: L1 distance to the previous frame
/// (frame 0 scores 0).
template <typename T>
std::vector<double> change_scores(const BasicMatrix<T>& features) {
  std::vector<double> score(features.rows(), 0.0);
  for (std::size_t t = 1; t < features.rows(); ++t) {
    double s = 0.0;
    for (std::size_t c = 0; c < features.cols(); ++c) {
      s += std::abs(static_cast<double>(features(t, c)) - static_cast<double>(features(t - 1, c)));
    }
    score[t] = s;
  }
  return score;
}

/// Histogram-change detector: the k frames with the largest change score
/// (lowest index on ties), returned in ascending order.
template <typename T>
SummaryResult change_detect_summary(const BasicMatrix<T>& features, std::size_t k) {
  detail::check_k(features.rows(), k);
  const std::vector<double> score = change_scores(features);
  std::vector<std::size_t> idx(score.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return {"change", std::move(idx), {}};
}

}  // namespace scenesum
