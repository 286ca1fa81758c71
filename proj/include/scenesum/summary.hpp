#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "scenesum/error.hpp"

namespace scenesum {

/// Keyframes picked by one summarizer, plus the resolved configuration that
/// produced them.
struct SummaryResult {
  std::string method;
  std::vector<std::size_t> frame_indices;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();

  std::size_t k() const noexcept { return frame_indices.size(); }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["method"] = method;
    j["k"] = frame_indices.size();
    j["frames"] = frame_indices;
    j["config"] = config;
    return j;
  }

  static SummaryResult from_json(const nlohmann::json& j) {
    SummaryResult s;
    try {
      s.method = j.at("method").get<std::string>();
      s.frame_indices = j.at("frames").get<std::vector<std::size_t>>();
      if (j.contains("k") && j.at("k").get<std::size_t>() != s.frame_indices.size()) {
        throw Error(ErrorKind::io, "summary 'k' does not match number of frames");
      }
      if (j.contains("config")) s.config = j.at("config");
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::io, std::string("malformed summary: ") + e.what());
    }
    return s;
  }
};

inline void save_summary(const SummaryResult& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write summary " + path.string());
  out << s.to_json().dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io, "failed writing summary " + path.string());
}

inline SummaryResult load_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open summary " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io, "malformed summary " + path.string() + ": " + e.what());
  }
  return SummaryResult::from_json(j);
}

}  // namespace scenesum
