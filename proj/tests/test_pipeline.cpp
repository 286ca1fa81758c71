#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "scenesum/scenesum.hpp"
#include "test_util.hpp"

using namespace scenesum;

namespace {

SceneDataset scene(std::size_t n = 200, std::uint64_t seed = 1) {
  SyntheticConfig sc;
  sc.n_frames = n;
  sc.dim = 16;
  sc.seed = seed;
  return generate_synthetic(sc);
}

SummarizeConfig quick(Method m, std::size_t k) {
  SummarizeConfig c;
  c.method = m;
  c.k = k;
  c.train.epochs = 3;
  c.train.latent_dim = 8;
  c.train.hidden_dims = {16};
  c.kmeans_restarts = 2;
  return c;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string f;
    std::istringstream ls(line);
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(fields);
  }
  return rows;
}

}  // namespace

TEST(Method, NamesRoundTrip) {
  for (Method m : {Method::scenesum, Method::scenesum_supervised, Method::uniform, Method::random, Method::vsumm,
                   Method::change}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_method("dr-dsn"), Error);
}

TEST(Summarize, EveryMethodReturnsOneFramePerCluster) {
  const SceneDataset ds = scene();
  for (Method m : {Method::scenesum, Method::scenesum_supervised, Method::uniform, Method::random, Method::vsumm,
                   Method::change}) {
    const SummarizeOutput out = summarize(ds, quick(m, 12));
    EXPECT_EQ(out.summary.method, to_string(m));
    ASSERT_EQ(out.summary.k(), 12u);
    EXPECT_EQ(std::set<std::size_t>(out.summary.frame_indices.begin(), out.summary.frame_indices.end()).size(), 12u);
    EXPECT_EQ(out.summary.config.at("method"), to_string(m));
  }
}

TEST(Summarize, ScenesumIsDeterministic) {
  const SceneDataset ds = scene();
  const auto a = summarize(ds, quick(Method::scenesum, 8));
  const auto b = summarize(ds, quick(Method::scenesum, 8));
  EXPECT_EQ(a.summary.frame_indices, b.summary.frame_indices);
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_EQ(a.summary.to_json().dump(), b.summary.to_json().dump());
}

TEST(Summarize, SupervisedNeedsPoses) {
  SceneDataset ds = scene(60);
  ds.poses.reset();
  try {
    summarize(ds, quick(Method::scenesum_supervised, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::missing_capability);
  }
  EXPECT_NO_THROW(summarize(ds, quick(Method::scenesum, 4)));
}

TEST(Summarize, ScenesumKeyframesComeFromDistinctClusters) {
  const SceneDataset ds = scene();
  SummarizeConfig c = quick(Method::scenesum, 10);
  const auto out = summarize(ds, c);
  const ClusterPartition part = cluster_features(ds.features, 10, c.seed, c.balance, c.kmeans_restarts);
  for (std::size_t j = 0; j < 10; ++j) EXPECT_EQ(part.labels[out.summary.frame_indices[j]], j);
}

TEST(Summary, JsonRoundTrip) {
  test::TempDir dir("summary");
  SummaryResult s{"vsumm", {4, 1, 9}, {{"seed", 3}}};
  save_summary(s, dir / "s.json");
  const SummaryResult back = load_summary(dir / "s.json");
  EXPECT_EQ(back.method, "vsumm");
  EXPECT_EQ(back.frame_indices, s.frame_indices);
  EXPECT_EQ(back.config, s.config);
  test::write_file(dir / "bad.json", R"({"method":"x","k":2,"frames":[1]})");
  EXPECT_THROW(load_summary(dir / "bad.json"), Error);
  test::write_file(dir / "broken.json", "{");
  EXPECT_THROW(load_summary(dir / "broken.json"), Error);
}

TEST(Evaluate, UsesSummaryPoses) {
  SceneDataset ds;
  ds.scene_id = "square";
  ds.features = FeatureMatrix(6, 2, 0.0f);
  ds.poses = std::vector<Pose>{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {10, 0, 0}, {0, 10, 0}};
  const Evaluation near = evaluate(ds, {"m", {0, 1, 2, 3}, {}}, {});
  EXPECT_NEAR(near.auc, 2.23875, 1e-12);
  EXPECT_EQ(near.curve.values.size(), 101u);
  const Evaluation far = evaluate(ds, {"m", {0, 4, 5}, {}}, {});
  EXPECT_EQ(far.auc, 0.0);
}

TEST(Sweep, RowCountsAndAggregates) {
  const SceneDataset ds = scene();
  const SweepResult r = sweep(ds, {Method::uniform, Method::random}, {5, 10}, {0, 1, 2}, quick(Method::uniform, 5), {});
  ASSERT_EQ(r.cells.size(), 12u);
  ASSERT_EQ(r.aggregates.size(), 4u);
  const auto rows = parse_csv(sweep_csv(r));
  ASSERT_EQ(rows.size(), 17u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"method", "k", "seed", "auc", "sd"}));

  std::size_t data = 0, agg = 0;
  std::vector<double> group;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), 5u);
    if (rows[i][2] == "AVG") {
      ++agg;
      double mean = 0;
      for (double a : group) mean += a;
      mean /= group.size();
      double var = 0;
      for (double a : group) var += (a - mean) * (a - mean);
      EXPECT_NEAR(std::stod(rows[i][3]), mean, 1e-12);
      EXPECT_NEAR(std::stod(rows[i][4]), std::sqrt(var / group.size()), 1e-12);
      if (rows[i][0] == "uniform") {
        EXPECT_EQ(std::stod(rows[i][4]), 0.0);
      }
      group.clear();
    } else {
      ++data;
      EXPECT_EQ(rows[i][4], "");
      group.push_back(std::stod(rows[i][3]));
    }
  }
  EXPECT_EQ(data, 12u);
  EXPECT_EQ(agg, 4u);
}

TEST(Sweep, CellOrderIsMethodKSeed) {
  const SceneDataset ds = scene(80);
  const SweepResult r = sweep(ds, {Method::random, Method::change}, {3, 6}, {7, 2}, quick(Method::random, 3), {});
  std::size_t i = 0;
  for (Method m : {Method::random, Method::change}) {
    for (std::size_t k : {3u, 6u}) {
      for (std::uint64_t s : {7u, 2u}) {
        EXPECT_EQ(r.cells[i].method, m);
        EXPECT_EQ(r.cells[i].k, k);
        EXPECT_EQ(r.cells[i].seed, s);
        ++i;
      }
    }
  }
}

TEST(Sweep, RejectsEmptyListsAndPoseFreeData) {
  SceneDataset ds = scene(50);
  EXPECT_THROW(sweep(ds, {}, {3}, {0}, {}, {}), Error);
  ds.poses.reset();
  try {
    sweep(ds, {Method::uniform}, {3}, {0}, {}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::missing_capability);
  }
}

TEST(Svg, SinglePolylineWithAxes) {
  const std::vector<Pose> ps(4, Pose{});
  const std::string svg = curve_svg(divergence_curve(ps, 3.0, 10), "title <&>");
  EXPECT_NE(svg.find("viewBox=\"0 0 800 500\""), std::string::npos);
  EXPECT_EQ(svg.find("<polyline"), svg.rfind("<polyline"));
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_NE(svg.find("title &lt;&amp;&gt;"), std::string::npos);
  EXPECT_EQ(svg, curve_svg(divergence_curve(ps, 3.0, 10), "title <&>"));
}
