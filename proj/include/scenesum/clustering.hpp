#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "json.hpp"
#include "scenesum/dataset.hpp"
#include "scenesum/error.hpp"
#include "scenesum/matrix.hpp"

namespace scenesum {

/// Frame-to-cluster partition produced by stage 1.
struct ClusterPartition {
  std::size_t k = 0;
  std::vector<std::size_t> labels;                // per frame, in [0, k)
  std::vector<std::vector<std::size_t>> members;  // ascending frame indices per cluster
  Matrix centroids;                               // k x d, in the space that was clustered
  std::optional<std::vector<std::size_t>> gt_keyframes;

  std::size_t n_frames() const noexcept { return labels.size(); }

  static ClusterPartition from_labels(std::size_t k, std::vector<std::size_t> labels, Matrix centroids) {
    ClusterPartition p;
    p.k = k;
    p.members.assign(k, {});
    for (std::size_t i = 0; i < labels.size(); ++i) {
      require(labels[i] < k, "cluster label out of range");
      p.members[labels[i]].push_back(i);
    }
    p.labels = std::move(labels);
    p.centroids = std::move(centroids);
    return p;
  }

  void validate() const {
    require(k >= 1, "partition must have at least one cluster");
    require(members.size() == k, "partition member list count differs from k");
    std::size_t total = 0;
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i : members[j]) {
        require(i < labels.size() && labels[i] == j, "partition members disagree with labels");
      }
      total += members[j].size();
    }
    require(total == labels.size(), "partition members do not cover every frame exactly once");
    if (gt_keyframes) {
      require(gt_keyframes->size() == k, "gt_keyframes length differs from k");
      for (std::size_t j = 0; j < k; ++j) {
        require((*gt_keyframes)[j] < labels.size() && labels[(*gt_keyframes)[j]] == j,
                "gt keyframe is not a member of its cluster");
      }
    }
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["k"] = k;
    j["labels"] = labels;
    if (gt_keyframes) j["gt_keyframes"] = *gt_keyframes;
    return j;
  }
};

struct KMeansResult {
  Matrix centroids;
  std::vector<std::size_t> labels;
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after each assignment step
  std::size_t iterations = 0;
};

namespace detail {

// Nearest centroid by squared distance; ties go to the lowest centroid id.
template <typename Row>
std::pair<std::size_t, double> nearest_centroid(const Row& x, const Matrix& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(x, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return {best, best_d};
}

template <typename T>
Matrix kmeans_pp_init(const BasicMatrix<T>& xs, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = xs.rows(), d = xs.cols();
  Matrix centroids(k, d);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto set_centroid = [&](std::size_t c, std::size_t i) {
    for (std::size_t j = 0; j < d; ++j) centroids(c, j) = static_cast<double>(xs(i, j));
  };
  set_centroid(0, pick(rng));

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(xs.row(i), centroids.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t chosen = n - 1;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc > target) {
          chosen = i;
          break;
        }
      }
      // Rounding can leave target >= acc at the end; take the last positive-weight point.
      if (d2[chosen] == 0.0) {
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            chosen = i;
            break;
          }
        }
      }
    } else {
      chosen = pick(rng);
    }
    set_centroid(c, chosen);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(xs.row(i), centroids.row(c)));
  }
  return centroids;
}

template <typename T>
double assign_labels(const BasicMatrix<T>& xs, const Matrix& centroids, std::vector<std::size_t>& labels,
                     std::vector<double>& dist2) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    const auto [c, d] = nearest_centroid(xs.row(i), centroids);
    labels[i] = c;
    dist2[i] = d;
    inertia += d;
  }
  return inertia;
}

}  // namespace detail

/// Lloyd's k-means with k-means++ seeding.
///
/// Iterates until the largest centroid shift drops below `tol` or
/// `max_iter` updates have run. An empty cluster is reseeded at the point
/// farthest from its assigned centroid. Returned labels are the nearest
/// returned centroid for every frame (lowest id on ties), except in the
/// degenerate case of more clusters than distinct points, where duplicate
/// points are moved into otherwise empty clusters so that every cluster is
/// populated.
template <typename T>
KMeansResult kmeans(const BasicMatrix<T>& xs, std::size_t k, std::uint64_t seed, std::size_t max_iter = 100,
                    double tol = 1e-6) {
  require(k >= 1, "k must be at least 1");
  require(k <= xs.rows(), "k exceeds the number of frames");
  const std::size_t n = xs.rows(), d = xs.cols();
  for (const auto& v : xs.data()) require(std::isfinite(static_cast<double>(v)), "features must be finite");

  std::mt19937_64 rng(seed);
  KMeansResult res;
  res.centroids = detail::kmeans_pp_init(xs, k, rng);
  res.labels.assign(n, 0);
  std::vector<double> dist2(n);

  for (std::size_t it = 0; it < max_iter; ++it) {
    res.inertia_history.push_back(detail::assign_labels(xs, res.centroids, res.labels, dist2));
    ++res.iterations;

    Matrix next(k, d, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[res.labels[i]];
      for (std::size_t j = 0; j < d; ++j) next(res.labels[i], j) += static_cast<double>(xs(i, j));
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < d; ++j) next(c, j) /= static_cast<double>(counts[c]);
        continue;
      }
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i] && dist2[i] > far_d) {
          far_d = dist2[i];
          far = i;
        }
      }
      taken[far] = true;
      for (std::size_t j = 0; j < d; ++j) next(c, j) = static_cast<double>(xs(far, j));
    }

    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) shift = std::max(shift, std::sqrt(squared_distance(next.row(c), res.centroids.row(c))));
    res.centroids = std::move(next);
    if (shift < tol) break;
  }
  res.inertia = detail::assign_labels(xs, res.centroids, res.labels, dist2);
  res.inertia_history.push_back(res.inertia);

  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t l : res.labels) ++sizes[l];
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] > 0) continue;
    std::size_t far = n;
    double far_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (sizes[res.labels[i]] > 1 && dist2[i] > far_d) {
        far_d = dist2[i];
        far = i;
      }
    }
    --sizes[res.labels[far]];
    res.labels[far] = c;
    sizes[c] = 1;
    dist2[far] = 0.0;
    for (std::size_t j = 0; j < d; ++j) res.centroids(c, j) = static_cast<double>(xs(far, j));
  }
  return res;
}

/// Runs k-means from `restarts` derived seeds and keeps the lowest inertia
/// (first run wins ties).
template <typename T>
KMeansResult kmeans_best_of(const BasicMatrix<T>& xs, std::size_t k, std::uint64_t seed, std::size_t restarts,
                            std::size_t max_iter = 100, double tol = 1e-6) {
  require(restarts >= 1, "restarts must be at least 1");
  KMeansResult best = kmeans(xs, k, seed, max_iter, tol);
  for (std::size_t r = 1; r < restarts; ++r) {
    const std::uint64_t sub_seed = seed + 0x9E3779B97F4A7C15ULL * r;
    KMeansResult cand = kmeans(xs, k, sub_seed, max_iter, tol);
    if (cand.inertia < best.inertia) best = std::move(cand);
  }
  return best;
}

/// Capacity-constrained reassignment that yields near-equal cluster sizes.
///
/// Frames are visited in descending order of the margin between their
/// second-nearest and nearest centroid distance (lowest frame index first on
/// ties) and each goes to its nearest centroid that still has room. With the
/// default cap of ceil(n/k) only n mod k clusters may reach the cap, so every
/// size ends up in {floor(n/k), ceil(n/k)}. A larger explicit cap only bounds
/// sizes from above.
template <typename T>
std::vector<std::size_t> balance_assignment(const BasicMatrix<T>& xs, const Matrix& centroids,
                                            std::optional<std::size_t> cap = std::nullopt) {
  const std::size_t n = xs.rows(), k = centroids.rows();
  require(k >= 1, "balance_assignment needs at least one centroid");
  require(xs.cols() == centroids.cols(), "centroid dimension differs from feature dimension");
  const std::size_t floor_size = n / k;
  const std::size_t ceil_size = (n + k - 1) / k;
  const std::size_t capacity = cap.value_or(ceil_size);
  if (capacity * k < n) throw Error(ErrorKind::invalid_argument, "infeasible capacity: cap * k < n");
  // Tight mode: only (n mod k) clusters may go above floor(n/k).
  const bool tight = capacity == ceil_size;
  std::size_t big_quota = tight ? n - floor_size * k : k;

  Matrix dist(n, k);
  std::vector<double> margin(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
    for (std::size_t c = 0; c < k; ++c) {
      const double dc = std::sqrt(squared_distance(xs.row(i), centroids.row(c)));
      dist(i, c) = dc;
      if (dc < d1) {
        d2 = d1;
        d1 = dc;
      } else if (dc < d2) {
        d2 = dc;
      }
    }
    margin[i] = k > 1 ? d2 - d1 : 0.0;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return margin[a] > margin[b]; });

  std::vector<std::size_t> sizes(k, 0), labels(n, 0);
  for (std::size_t i : order) {
    std::size_t best = k;
    for (std::size_t c = 0; c < k; ++c) {
      const bool has_room = tight ? (sizes[c] < floor_size || (sizes[c] < ceil_size && big_quota > 0))
                                  : sizes[c] < capacity;
      if (has_room && (best == k || dist(i, c) < dist(i, best))) best = c;
    }
    if (tight && sizes[best] == floor_size && floor_size < ceil_size) --big_quota;
    ++sizes[best];
    labels[i] = best;
  }
  return labels;
}

/// Self-supervised stage 1: k-means on feature vectors, then (optionally)
/// balanced reassignment. Centroids are the k-means centroids.
template <typename T>
ClusterPartition cluster_features(const BasicMatrix<T>& xs, std::size_t k, std::uint64_t seed, bool balance = true,
                                  std::size_t restarts = 1) {
  KMeansResult km = kmeans_best_of(xs, k, seed, restarts);
  std::vector<std::size_t> labels = balance ? balance_assignment(xs, km.centroids) : std::move(km.labels);
  return ClusterPartition::from_labels(k, std::move(labels), std::move(km.centroids));
}

inline Matrix pose_matrix(const std::vector<Pose>& poses) {
  Matrix m(poses.size(), 3);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    m(i, 0) = poses[i].x;
    m(i, 1) = poses[i].y;
    m(i, 2) = poses[i].z;
  }
  return m;
}

/// Supervised stage 1: k-means over ground-truth positions. The keyframe of
/// each cluster is the member whose pose is nearest the pose centroid
/// (lowest frame index on ties).
inline ClusterPartition gt_pose_clustering(const std::vector<Pose>& poses, std::size_t k, std::uint64_t seed,
                                           std::size_t restarts = 1) {
  const Matrix pm = pose_matrix(poses);
  KMeansResult km = kmeans_best_of(pm, k, seed, restarts);
  ClusterPartition part = ClusterPartition::from_labels(k, std::move(km.labels), std::move(km.centroids));
  std::vector<std::size_t> keyframes(k);
  for (std::size_t j = 0; j < k; ++j) {
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i : part.members[j]) {
      const double d = squared_distance(pm.row(i), part.centroids.row(j));
      if (d < best_d) {
        best_d = d;
        keyframes[j] = i;
      }
    }
  }
  part.gt_keyframes = std::move(keyframes);
  return part;
}

inline ClusterPartition gt_pose_clustering(const SceneDataset& ds, std::size_t k, std::uint64_t seed,
                                           std::size_t restarts = 1) {
  if (!ds.has_poses()) {
    throw Error(ErrorKind::missing_capability, "ground-truth clustering requires poses; dataset '" + ds.scene_id +
                                                   "' has none");
  }
  return gt_pose_clustering(*ds.poses, k, seed, restarts);
}

/// N frames drawn from one cluster.
struct ClusterSample {
  std::size_t cluster_id = 0;
  std::vector<std::size_t> frame_indices;
};

/// Uniform draw of `n_sample` members of a cluster: without replacement when
/// the cluster is large enough, with replacement otherwise. The stream is a
/// pure function of (seed, cluster_id, counter).
inline ClusterSample sample_cluster(const ClusterPartition& part, std::size_t cluster_id, std::size_t n_sample,
                                    std::uint64_t seed, std::uint64_t counter = 0) {
  require(cluster_id < part.k, "cluster id out of range");
  const auto& pool = part.members[cluster_id];
  require(!pool.empty(), "cannot sample from an empty cluster");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(cluster_id), static_cast<std::uint32_t>(counter),
                    static_cast<std::uint32_t>(counter >> 32)};
  std::mt19937_64 rng(seq);

  ClusterSample s{cluster_id, {}};
  s.frame_indices.reserve(n_sample);
  if (n_sample <= pool.size()) {
    std::vector<std::size_t> work = pool;
    for (std::size_t i = 0; i < n_sample; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, work.size() - 1);
      std::swap(work[i], work[pick(rng)]);
      s.frame_indices.push_back(work[i]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (std::size_t i = 0; i < n_sample; ++i) s.frame_indices.push_back(pool[pick(rng)]);
  }
  return s;
}

}  // namespace scenesum
