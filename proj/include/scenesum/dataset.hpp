#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "scenesum/error.hpp"
#include "scenesum/matrix.hpp"

namespace scenesum {

/// Position where a frame was captured, in meters. z is 0 for planar scenes.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
  bool operator==(const Pose&) const = default;
};

inline double distance(const Pose& a, const Pose& b) noexcept {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// A sequence of frames represented by feature vectors, optionally tagged
/// with poses. Row i of `features` is frame i.
struct SceneDataset {
  std::string scene_id;
  FeatureMatrix features;
  std::optional<std::vector<Pose>> poses;

  std::size_t n_frames() const noexcept { return features.rows(); }
  std::size_t dim() const noexcept { return features.cols(); }
  bool has_poses() const noexcept { return poses.has_value(); }

  /// Throws Error(invalid_argument) when an invariant does not hold.
  void validate() const {
    require(n_frames() > 0, "dataset is empty");
    require(dim() > 0, "dataset feature dimension is zero");
    for (float v : features.data()) require(std::isfinite(v), "dataset features contain NaN or Inf");
    if (poses) {
      require(poses->size() == n_frames(), "pose count does not match frame count");
      for (const auto& p : *poses) require(p.finite(), "dataset poses contain NaN or Inf");
    }
  }

  bool operator==(const SceneDataset&) const = default;
};

enum class FeatureMode { pose_correlated, appearance_only };

inline const char* to_string(FeatureMode m) {
  return m == FeatureMode::pose_correlated ? "pose-correlated" : "appearance-only";
}

inline FeatureMode parse_feature_mode(const std::string& s) {
  if (s == "pose-correlated" || s == "pose_correlated") return FeatureMode::pose_correlated;
  if (s == "appearance-only" || s == "appearance_only") return FeatureMode::appearance_only;
  throw Error(ErrorKind::invalid_argument, "unknown feature mode '" + s + "'");
}

/// Parameters of the synthetic walkthrough generator.
struct SyntheticConfig {
  std::size_t n_frames = 500;
  double box_side = 20.0;    // meters
  double step_sigma = 0.5;   // meters per step
  FeatureMode feature_mode = FeatureMode::pose_correlated;
  std::size_t dim = 64;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;

  void validate() const {
    require(n_frames > 0, "synthetic n_frames must be positive");
    require(box_side > 0.0 && std::isfinite(box_side), "box_side must be positive");
    require(step_sigma > 0.0 && std::isfinite(step_sigma), "step_sigma must be positive");
    require(dim >= 2, "synthetic feature dimension must be at least 2");
    require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), "noise_sigma must be non-negative");
  }
};

namespace detail {

// Folds v back into [0, side] by mirroring at the walls.
inline double reflect_into(double v, double side) {
  const double period = 2.0 * side;
  v = std::fmod(v, period);
  if (v < 0.0) v += period;
  if (v > side) v = period - v;
  return v;
}

}  // namespace detail

/// Seeded planar random walk inside a square box with synthetic per-frame
/// features.
///
/// The walk starts at the box center and takes isotropic Gaussian steps,
/// mirrored at the walls. In pose-correlated mode each feature is a random
/// Fourier feature cos(w_j . pos + phi_j) of the position (frequencies drawn
/// with length scale box_side / 4), which mimics a place-recognition
/// descriptor: nearby frames get nearby features. In appearance-only mode
/// features ignore the pose entirely. Gaussian noise is added in both modes.
inline SceneDataset generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

  const double freq_scale = 4.0 / cfg.box_side;
  std::vector<double> wx(cfg.dim), wy(cfg.dim), phi(cfg.dim);
  for (std::size_t j = 0; j < cfg.dim; ++j) {
    wx[j] = freq_scale * gauss(rng);
    wy[j] = freq_scale * gauss(rng);
    phi[j] = phase(rng);
  }

  SceneDataset ds;
  ds.scene_id = "synthetic-" + std::to_string(cfg.seed);
  ds.features = FeatureMatrix(cfg.n_frames, cfg.dim);
  std::vector<Pose> poses(cfg.n_frames);

  Pose p{cfg.box_side / 2.0, cfg.box_side / 2.0, 0.0};
  for (std::size_t t = 0; t < cfg.n_frames; ++t) {
    if (t > 0) {
      p.x = detail::reflect_into(p.x + cfg.step_sigma * gauss(rng), cfg.box_side);
      p.y = detail::reflect_into(p.y + cfg.step_sigma * gauss(rng), cfg.box_side);
    }
    poses[t] = p;
    auto row = ds.features.row(t);
    for (std::size_t j = 0; j < cfg.dim; ++j) {
      const double arg = cfg.feature_mode == FeatureMode::pose_correlated
                             ? wx[j] * p.x + wy[j] * p.y + phi[j]
                             : phase(rng);
      const double noise = cfg.noise_sigma > 0.0 ? cfg.noise_sigma * gauss(rng) : 0.0;
      row[j] = static_cast<float>(std::cos(arg) + noise);
    }
  }
  ds.poses = std::move(poses);
  return ds;
}

// ---------------------------------------------------------------------------
// Archive I/O: JSON manifest + little-endian f32 feature blob + pose CSV.

namespace detail {

inline std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) | (v >> 24);
  }
  return v;
}

inline void write_f32le(std::ostream& os, float f) {
  const std::uint32_t u = to_little_endian(std::bit_cast<std::uint32_t>(f));
  os.write(reinterpret_cast<const char*>(&u), 4);
}

inline float read_f32le(const char* p) {
  std::uint32_t u;
  std::memcpy(&u, p, 4);
  return std::bit_cast<float>(to_little_endian(u));
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& ctx) {
  if (s.empty()) throw Error(ErrorKind::io, ctx + ": empty field");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorKind::io, ctx + ": bad numeric field '" + s + "'");
  }
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace detail

inline std::vector<Pose> read_pose_csv(const std::filesystem::path& path, std::size_t n_frames) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open pose table " + path.string());
  std::string line;
  if (!std::getline(in, line) || detail::strip_cr(line) != "frame,x,y,z") {
    throw Error(ErrorKind::io, "pose table " + path.string() + " lacks header 'frame,x,y,z'");
  }
  std::vector<Pose> poses;
  while (std::getline(in, line)) {
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const std::string ctx = "pose table row " + std::to_string(poses.size());
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 4) throw Error(ErrorKind::io, ctx + ": expected 4 fields");
    const double frame = detail::parse_double(fields[0], ctx);
    if (frame != static_cast<double>(poses.size())) {
      throw Error(ErrorKind::io, ctx + ": frame index out of order");
    }
    poses.push_back({detail::parse_double(fields[1], ctx), detail::parse_double(fields[2], ctx),
                     detail::parse_double(fields[3], ctx)});
  }
  if (poses.size() != n_frames) {
    throw Error(ErrorKind::io, "pose table has " + std::to_string(poses.size()) + " rows, expected " +
                                   std::to_string(n_frames));
  }
  return poses;
}

inline void write_pose_csv(const std::filesystem::path& path, const std::vector<Pose>& poses) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write pose table " + path.string());
  out << "frame,x,y,z\n";
  for (std::size_t i = 0; i < poses.size(); ++i) {
    out << i << ',' << detail::format_double(poses[i].x) << ',' << detail::format_double(poses[i].y)
        << ',' << detail::format_double(poses[i].z) << '\n';
  }
  if (!out) throw Error(ErrorKind::io, "failed writing pose table " + path.string());
}

/// Reads a dataset archive. Paths inside the manifest are relative to the
/// manifest's directory.
inline SceneDataset load_dataset(const std::filesystem::path& manifest_path) {
  namespace fs = std::filesystem;
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorKind::io, "cannot open manifest " + manifest_path.string());

  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io, "malformed manifest " + manifest_path.string() + ": " + e.what());
  }

  std::size_t n = 0, dim = 0;
  std::string features_rel;
  SceneDataset ds;
  try {
    ds.scene_id = m.at("scene_id").get<std::string>();
    n = m.at("n_frames").get<std::size_t>();
    dim = m.at("dim").get<std::size_t>();
    features_rel = m.at("features").get<std::string>();
    if (m.value("dtype", std::string("f32le")) != "f32le") {
      throw Error(ErrorKind::io, "unsupported feature dtype " + m.at("dtype").dump());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io, "manifest " + manifest_path.string() + ": " + e.what());
  }
  if (n == 0) throw Error(ErrorKind::invalid_argument, "manifest declares an empty dataset");

  const fs::path base = manifest_path.parent_path();
  const fs::path feat_path = base / features_rel;
  std::ifstream fin(feat_path, std::ios::binary);
  if (!fin) throw Error(ErrorKind::io, "cannot open feature file " + feat_path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(fin)), std::istreambuf_iterator<char>());
  const std::size_t expected = n * dim * 4;
  if (bytes.size() != expected) {
    throw Error(ErrorKind::io, "feature file " + feat_path.string() + " has " + std::to_string(bytes.size()) +
                                   " bytes, expected " + std::to_string(expected));
  }
  ds.features = FeatureMatrix(n, dim);
  for (std::size_t i = 0; i < n * dim; ++i) {
    const float v = detail::read_f32le(bytes.data() + 4 * i);
    if (!std::isfinite(v)) throw Error(ErrorKind::io, "feature file contains NaN or Inf");
    ds.features.data()[i] = v;
  }

  if (m.contains("poses") && !m["poses"].is_null()) {
    ds.poses = read_pose_csv(base / m["poses"].get<std::string>(), n);
  }
  ds.validate();
  return ds;
}

/// Writes manifest, feature blob and (if present) pose table next to each
/// other. Sidecar names derive from the manifest file stem. A non-null
/// `provenance` object is stored under the manifest key "provenance".
inline void save_dataset(const SceneDataset& ds, const std::filesystem::path& manifest_path,
                         const nlohmann::ordered_json& provenance = nullptr) {
  namespace fs = std::filesystem;
  ds.validate();
  const fs::path base = manifest_path.parent_path();
  if (!base.empty()) {
    std::error_code ec;
    fs::create_directories(base, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create directory " + base.string());
  }
  const std::string stem = manifest_path.stem().string();
  const std::string features_name = stem + "_features.f32";
  const std::string poses_name = stem + "_poses.csv";

  {
    std::ofstream out(base / features_name, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write feature file " + (base / features_name).string());
    for (float v : ds.features.data()) detail::write_f32le(out, v);
    if (!out) throw Error(ErrorKind::io, "failed writing feature file");
  }

  nlohmann::ordered_json m;
  m["scene_id"] = ds.scene_id;
  m["n_frames"] = ds.n_frames();
  m["dim"] = ds.dim();
  m["features"] = features_name;
  m["dtype"] = "f32le";
  if (ds.poses) {
    write_pose_csv(base / poses_name, *ds.poses);
    m["poses"] = poses_name;
  }
  if (!provenance.is_null()) m["provenance"] = provenance;
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write manifest " + manifest_path.string());
  out << m.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io, "failed writing manifest " + manifest_path.string());
}

}  // namespace scenesum
