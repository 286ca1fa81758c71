#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "scenesum/error.hpp"
#include "scenesum/matrix.hpp"

namespace scenesum {

/// 8-bit RGB raster, row-major, interleaved channels.
struct PpmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // 3 * width * height

  PpmImage() = default;
  PpmImage(std::size_t w, std::size_t h, std::uint8_t fill = 0) : width(w), height(h), pixels(3 * w * h, fill) {}

  void validate() const {
    require(width >= 1 && height >= 1, "image dimensions must be at least 1x1");
    require(pixels.size() == 3 * width * height, "pixel buffer length does not match 3*W*H");
  }

  bool operator==(const PpmImage&) const = default;
};

namespace detail {

// Reads the next whitespace-delimited header token, skipping '#' comments.
inline std::string next_ppm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {}
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

inline std::size_t parse_ppm_uint(const std::string& tok, const std::string& what) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(ErrorKind::io, "bad PPM " + what + " '" + tok + "'");
  }
  return std::stoull(tok);
}

}  // namespace detail

/// Decodes a binary (P6) PPM with maxval 255.
inline PpmImage load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open image " + path.string());
  const std::string magic = detail::next_ppm_token(in);
  if (magic != "P6") throw Error(ErrorKind::io, "unsupported image format '" + magic + "' (only binary P6)");
  const std::size_t w = detail::parse_ppm_uint(detail::next_ppm_token(in), "width");
  const std::size_t h = detail::parse_ppm_uint(detail::next_ppm_token(in), "height");
  const std::size_t maxval = detail::parse_ppm_uint(detail::next_ppm_token(in), "maxval");
  if (maxval != 255) throw Error(ErrorKind::io, "unsupported PPM maxval " + std::to_string(maxval));
  if (w == 0 || h == 0) throw Error(ErrorKind::io, "PPM has zero extent");

  PpmImage img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) {
    throw Error(ErrorKind::io, "truncated PPM pixel data in " + path.string());
  }
  return img;
}

inline void write_ppm(const PpmImage& img, const std::filesystem::path& path) {
  img.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write image " + path.string());
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw Error(ErrorKind::io, "failed writing image " + path.string());
}

struct HistogramConfig {
  std::size_t bins_per_channel = 8;

  void validate() const {
    require(bins_per_channel >= 1 && bins_per_channel <= 256, "bins_per_channel must lie in [1, 256]");
  }
};

/// Concatenated R|G|B color histogram, each channel normalized to unit mass.
/// Bin of value v is floor(v * bins / 256).
inline std::vector<double> histogram_descriptor(const PpmImage& img, const HistogramConfig& cfg = {}) {
  img.validate();
  cfg.validate();
  const std::size_t bins = cfg.bins_per_channel;
  std::vector<std::size_t> counts(3 * bins, 0);
  const std::size_t n_px = img.width * img.height;
  for (std::size_t p = 0; p < n_px; ++p) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t v = img.pixels[3 * p + c];
      ++counts[c * bins + v * bins / 256];
    }
  }
  std::vector<double> out(3 * bins);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(counts[i]) / static_cast<double>(n_px);
  return out;
}

/// Projects rows of `xs` onto `target_dim` random Gaussian directions with
/// entries N(0, 1/target_dim), which approximately preserves distances.
template <typename T>
Matrix random_projection(const BasicMatrix<T>& xs, std::size_t target_dim, std::uint64_t seed) {
  require(target_dim >= 1, "random projection target_dim must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(target_dim)));
  Matrix proj(xs.cols(), target_dim);
  for (double& v : proj.data()) v = gauss(rng);

  Matrix out(xs.rows(), target_dim, 0.0);
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    for (std::size_t k = 0; k < xs.cols(); ++k) {
      const double a = static_cast<double>(xs(i, k));
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < target_dim; ++j) out(i, j) += a * proj(k, j);
    }
  }
  return out;
}

}  // namespace scenesum
