#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "scenesum/dataset.hpp"
#include "test_util.hpp"

using namespace scenesum;
using scenesum::test::TempDir;

namespace {

SceneDataset small_dataset(bool with_poses) {
  SceneDataset ds;
  ds.scene_id = "tiny";
  ds.features = FeatureMatrix(3, 2, std::vector<float>{0.5f, -1.25f, 3.0f, 1e-7f, -0.0f, 42.0f});
  if (with_poses) ds.poses = std::vector<Pose>{{0.0, 0.0, 0.0}, {1.5, -2.25, 0.1}, {1.0 / 3.0, 7.0, 0.0}};
  return ds;
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n, mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(Dataset, LoadsManifestWithPoses) {
  TempDir dir("ds_load");
  save_dataset(small_dataset(true), dir / "m.json");
  // 3 frames x 2 dims x 4 bytes
  EXPECT_EQ(std::filesystem::file_size(dir / "m_features.f32"), 24u);
  const SceneDataset ds = load_dataset(dir / "m.json");
  EXPECT_EQ(ds.n_frames(), 3u);
  EXPECT_EQ(ds.dim(), 2u);
  ASSERT_TRUE(ds.has_poses());
  EXPECT_EQ(ds.poses->size(), 3u);
}

TEST(Dataset, RoundTripIsBitExact) {
  TempDir dir("ds_rt");
  const SceneDataset orig = small_dataset(true);
  save_dataset(orig, dir / "scene.json");
  const SceneDataset back = load_dataset(dir / "scene.json");
  EXPECT_EQ(back, orig);
  // -0.0f compares equal to 0.0f; check the raw bits too.
  for (std::size_t i = 0; i < orig.features.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint32_t>(back.features.data()[i]),
              std::bit_cast<std::uint32_t>(orig.features.data()[i]));
  }
}

TEST(Dataset, RoundTripOfSyntheticData) {
  TempDir dir("ds_rt_syn");
  SyntheticConfig cfg;
  cfg.n_frames = 50;
  cfg.dim = 8;
  cfg.seed = 3;
  const SceneDataset orig = generate_synthetic(cfg);
  save_dataset(orig, dir / "manifest.json");
  EXPECT_EQ(load_dataset(dir / "manifest.json"), orig);
}

TEST(Dataset, PoseFreeManifestOmitsPoseEntry) {
  TempDir dir("ds_nopose");
  save_dataset(small_dataset(false), dir / "m.json");
  const auto manifest = nlohmann::json::parse(scenesum::test::read_file(dir / "m.json"));
  EXPECT_FALSE(manifest.contains("poses"));
  EXPECT_FALSE(std::filesystem::exists(dir / "m_poses.csv"));
  EXPECT_FALSE(load_dataset(dir / "m.json").has_poses());
}

TEST(Dataset, EmptyDatasetRejected) {
  TempDir dir("ds_empty");
  SceneDataset ds;
  ds.scene_id = "empty";
  EXPECT_THROW(save_dataset(ds, dir / "m.json"), Error);
}

TEST(Dataset, SizeMismatchDetected) {
  TempDir dir("ds_size");
  save_dataset(small_dataset(false), dir / "m.json");
  scenesum::test::write_file(dir / "m_features.f32", std::string(16, '\0'));
  try {
    load_dataset(dir / "m.json");
    FAIL() << "expected size mismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
    EXPECT_NE(std::string(e.what()).find("bytes"), std::string::npos);
  }
}

TEST(Dataset, MissingFilesAndNaNRejected) {
  TempDir dir("ds_bad");
  EXPECT_THROW(load_dataset(dir / "absent.json"), Error);

  save_dataset(small_dataset(false), dir / "m.json");
  std::string bytes = scenesum::test::read_file(dir / "m_features.f32");
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bytes.data() + 4, &nan, 4);
  scenesum::test::write_file(dir / "m_features.f32", bytes);
  EXPECT_THROW(load_dataset(dir / "m.json"), Error);
}

TEST(Dataset, MalformedPoseRowsRejected) {
  TempDir dir("ds_pose");
  save_dataset(small_dataset(true), dir / "m.json");
  const auto bad = {
      "frame,x,y,z\n0,0,0,0\n1,1,1\n2,0,0,0\n",      // short row
      "frame,x,y,z\n0,0,0,0\n2,1,1,1\n1,0,0,0\n",    // out of order
      "frame,x,y,z\n0,0,0,0\n1,abc,1,1\n2,0,0,0\n",  // not numeric
      "x,y,z\n0,0,0\n1,1,1\n2,0,0\n",                // wrong header
      "frame,x,y,z\n0,0,0,0\n1,1,1,1\n",             // too few rows
  };
  for (const char* body : bad) {
    scenesum::test::write_file(dir / "m_poses.csv", body);
    EXPECT_THROW(load_dataset(dir / "m.json"), Error) << body;
  }
}

TEST(Synthetic, SameSeedSameDataset) {
  SyntheticConfig cfg;
  cfg.seed = 7;
  cfg.n_frames = 200;
  EXPECT_EQ(generate_synthetic(cfg), generate_synthetic(cfg));
  SyntheticConfig other = cfg;
  other.seed = 8;
  EXPECT_NE(generate_synthetic(cfg).features, generate_synthetic(other).features);
}

TEST(Synthetic, PosesStayInsideBox) {
  for (double step : {0.5, 5.0, 50.0}) {
    SyntheticConfig cfg;
    cfg.seed = 11;
    cfg.box_side = 10.0;
    cfg.step_sigma = step;
    const SceneDataset ds = generate_synthetic(cfg);
    EXPECT_EQ(ds.poses->front(), (Pose{5.0, 5.0, 0.0}));
    for (const Pose& p : *ds.poses) {
      ASSERT_GE(p.x, 0.0);
      ASSERT_LE(p.x, cfg.box_side);
      ASSERT_GE(p.y, 0.0);
      ASSERT_LE(p.y, cfg.box_side);
      ASSERT_EQ(p.z, 0.0);
    }
  }
}

TEST(Synthetic, InvalidConfigRejected) {
  SyntheticConfig cfg;
  cfg.n_frames = 0;
  EXPECT_THROW(generate_synthetic(cfg), Error);
  cfg = {};
  cfg.box_side = 0.0;
  EXPECT_THROW(generate_synthetic(cfg), Error);
  cfg = {};
  cfg.dim = 1;
  EXPECT_THROW(generate_synthetic(cfg), Error);
  cfg = {};
  cfg.noise_sigma = -1.0;
  EXPECT_THROW(generate_synthetic(cfg), Error);
}

// Brute force over all frame pairs of a 500-frame walk.
TEST(Synthetic, NearbyFramesHaveCloserFeatures) {
  SyntheticConfig cfg;
  cfg.seed = 5;
  const SceneDataset ds = generate_synthetic(cfg);
  double near_sum = 0, far_sum = 0;
  std::size_t near_n = 0, far_n = 0;
  for (std::size_t i = 0; i < ds.n_frames(); ++i) {
    for (std::size_t j = i + 1; j < ds.n_frames(); ++j) {
      const double dp = distance((*ds.poses)[i], (*ds.poses)[j]);
      double df = 0;
      for (std::size_t c = 0; c < ds.dim(); ++c) {
        const double d = ds.features(i, c) - ds.features(j, c);
        df += d * d;
      }
      df = std::sqrt(df);
      if (dp < cfg.box_side / 10) {
        near_sum += df;
        ++near_n;
      } else if (dp > cfg.box_side / 2) {
        far_sum += df;
        ++far_n;
      }
    }
  }
  ASSERT_GT(near_n, 0u);
  ASSERT_GT(far_n, 0u);
  EXPECT_LT(near_sum / near_n, far_sum / far_n);
}

TEST(Synthetic, FeatureDistanceRankCorrelatesWithPoseDistance) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    SyntheticConfig cfg;
    cfg.seed = seed;
    const SceneDataset ds = generate_synthetic(cfg);
    std::mt19937_64 rng(seed + 100);
    std::uniform_int_distribution<std::size_t> pick(0, ds.n_frames() - 1);
    std::vector<double> dp, df;
    for (int t = 0; t < 10000; ++t) {
      const std::size_t a = pick(rng), b = pick(rng);
      dp.push_back(distance((*ds.poses)[a], (*ds.poses)[b]));
      df.push_back(std::sqrt(squared_distance(ds.features.row(a), ds.features.row(b))));
    }
    EXPECT_GT(pearson(ranks(dp), ranks(df)), 0.0) << "seed " << seed;
  }
}

TEST(Synthetic, AppearanceOnlyFeaturesIgnorePose) {
  SyntheticConfig cfg;
  cfg.seed = 4;
  cfg.feature_mode = FeatureMode::appearance_only;
  const SceneDataset ds = generate_synthetic(cfg);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> pick(0, ds.n_frames() - 1);
  std::vector<double> dp, df;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t a = pick(rng), b = pick(rng);
    if (a == b) continue;
    dp.push_back(distance((*ds.poses)[a], (*ds.poses)[b]));
    df.push_back(std::sqrt(squared_distance(ds.features.row(a), ds.features.row(b))));
  }
  EXPECT_LT(std::abs(pearson(ranks(dp), ranks(df))), 0.1);
}
