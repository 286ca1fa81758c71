#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"
#include "scenesum/baselines.hpp"
#include "scenesum/clustering.hpp"
#include "scenesum/dataset.hpp"
#include "scenesum/metrics.hpp"
#include "scenesum/selector.hpp"
#include "scenesum/summary.hpp"

namespace scenesum {

enum class Method { scenesum, scenesum_supervised, uniform, random, vsumm, change };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::scenesum: return "scenesum";
    case Method::scenesum_supervised: return "scenesum-supervised";
    case Method::uniform: return "uniform";
    case Method::random: return "random";
    case Method::vsumm: return "vsumm";
    case Method::change: return "change";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::scenesum, Method::scenesum_supervised, Method::uniform, Method::random, Method::vsumm,
                   Method::change}) {
    if (s == to_string(m)) return m;
  }
  throw Error(ErrorKind::invalid_argument, "unknown method '" + s + "'");
}

struct SummarizeConfig {
  Method method = Method::scenesum;
  std::size_t k = 20;
  std::uint64_t seed = 0;
  bool balance = false;          // balanced feature clustering for scenesum
  std::size_t kmeans_restarts = 10;
  TrainConfig train;             // mode is overridden by the method

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["method"] = to_string(method);
    j["k"] = k;
    j["seed"] = seed;
    if (method == Method::scenesum || method == Method::scenesum_supervised) {
      j["balance"] = balance;
      j["kmeans_restarts"] = kmeans_restarts;
      TrainConfig t = train;
      t.seed = seed;
      t.mode = method == Method::scenesum ? TrainMode::self_supervised : TrainMode::supervised;
      j["train"] = t.to_json();
    }
    return j;
  }
};

struct SummarizeOutput {
  SummaryResult summary;
  std::vector<std::string> warnings;
  std::vector<double> loss_history;
};

/// Runs one summarizer end to end on a dataset.
inline SummarizeOutput summarize(const SceneDataset& ds, const SummarizeConfig& cfg) {
  ds.validate();
  SummarizeOutput out;
  switch (cfg.method) {
    case Method::uniform: out.summary = uniform_summary(ds.n_frames(), cfg.k); break;
    case Method::random: out.summary = random_summary(ds.n_frames(), cfg.k, cfg.seed); break;
    case Method::vsumm: out.summary = vsumm_centroid(ds.features, cfg.k, cfg.seed); break;
    case Method::change: out.summary = change_detect_summary(ds.features, cfg.k); break;
    case Method::scenesum:
    case Method::scenesum_supervised: {
      const bool supervised = cfg.method == Method::scenesum_supervised;
      TrainConfig tc = cfg.train;
      tc.seed = cfg.seed;
      tc.mode = supervised ? TrainMode::supervised : TrainMode::self_supervised;
      const ClusterPartition part = supervised ? gt_pose_clustering(ds, cfg.k, cfg.seed, cfg.kmeans_restarts)
                                               : cluster_features(ds.features, cfg.k, cfg.seed, cfg.balance,
                                                                  cfg.kmeans_restarts);
      TrainResult tr = train(ds.features, part, tc);
      out.summary = select_keyframes(tr.params, ds.features, part, tc.pooling, to_string(cfg.method));
      out.warnings = std::move(tr.warnings);
      out.loss_history = std::move(tr.loss_history);
      break;
    }
  }
  out.summary.method = to_string(cfg.method);
  out.summary.config = cfg.to_json();
  return out;
}

struct EvaluateConfig {
  double r_max = 3.0;
  std::size_t steps = 100;
  Integration rule = Integration::trapezoid;
};

struct Evaluation {
  DivergenceCurve curve;
  double auc = 0.0;
};

inline Evaluation evaluate(const SceneDataset& ds, const SummaryResult& s, const EvaluateConfig& cfg) {
  Evaluation ev;
  ev.curve = divergence_curve(keyframe_positions(ds, s.frame_indices), cfg.r_max, cfg.steps);
  ev.auc = auc(ev.curve, cfg.rule);
  return ev;
}

struct SweepCell {
  Method method;
  std::size_t k;
  std::uint64_t seed;
  double auc;
};

struct SweepAggregate {
  Method method;
  std::size_t k;
  double mean;
  double sd;  // population standard deviation over seeds
};

struct SweepResult {
  std::vector<SweepCell> cells;          // (method, k, seed) order
  std::vector<SweepAggregate> aggregates;  // (method, k) order
  std::vector<std::string> warnings;
};

/// Evaluates every (method, k, seed) combination. Cells are produced in
/// nested method -> k -> seed order.
inline SweepResult sweep(const SceneDataset& ds, const std::vector<Method>& methods, const std::vector<std::size_t>& ks,
                         const std::vector<std::uint64_t>& seeds, const SummarizeConfig& base,
                         const EvaluateConfig& eval) {
  require(!methods.empty() && !ks.empty() && !seeds.empty(), "sweep needs at least one method, k and seed");
  if (!ds.has_poses()) throw Error(ErrorKind::missing_capability, "sweep requires a dataset with poses");
  SweepResult res;
  for (Method m : methods) {
    for (std::size_t k : ks) {
      std::vector<double> aucs;
      for (std::uint64_t seed : seeds) {
        SummarizeConfig cfg = base;
        cfg.method = m;
        cfg.k = k;
        cfg.seed = seed;
        SummarizeOutput so = summarize(ds, cfg);
        for (auto& w : so.warnings) res.warnings.push_back(std::string(to_string(m)) + " k=" + std::to_string(k) + ": " + w);
        const double a = evaluate(ds, so.summary, eval).auc;
        res.cells.push_back({m, k, seed, a});
        aucs.push_back(a);
      }
      double mean = 0.0;
      for (double a : aucs) mean += a;
      mean /= static_cast<double>(aucs.size());
      double var = 0.0;
      for (double a : aucs) var += (a - mean) * (a - mean);
      var /= static_cast<double>(aucs.size());
      res.aggregates.push_back({m, k, mean, std::sqrt(var)});
    }
  }
  return res;
}

/// CSV with header "method,k,seed,auc,sd". Per-seed rows leave sd empty;
/// each (method, k) group is followed by one row with seed "AVG" holding
/// the mean AUC and its standard deviation.
inline std::string sweep_csv(const SweepResult& r) {
  std::string out = "method,k,seed,auc,sd\n";
  char buf[160];
  std::size_t ci = 0;
  for (const auto& agg : r.aggregates) {
    while (ci < r.cells.size() && r.cells[ci].method == agg.method && r.cells[ci].k == agg.k) {
      const auto& c = r.cells[ci++];
      std::snprintf(buf, sizeof buf, "%s,%zu,%llu,%.17g,\n", to_string(c.method), c.k,
                    static_cast<unsigned long long>(c.seed), c.auc);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "%s,%zu,AVG,%.17g,%.17g\n", to_string(agg.method), agg.k, agg.mean, agg.sd);
    out += buf;
  }
  return out;
}

}  // namespace scenesum
