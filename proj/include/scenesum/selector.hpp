#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "scenesum/clustering.hpp"
#include "scenesum/dataset.hpp"
#include "scenesum/error.hpp"
#include "scenesum/matrix.hpp"
#include "scenesum/summary.hpp"

namespace scenesum {

using Vector = std::vector<double>;

// ---------------------------------------------------------------------------
// Autoencoder parameters

/// Affine layer y = W x + b with W stored out x in.
struct DenseLayer {
  Matrix weight;
  Vector bias;

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }
  bool operator==(const DenseLayer&) const = default;
};

struct AutoencoderArchitecture {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims{128};
  std::size_t latent_dim = 64;

  /// Encoder widths input -> hidden... -> latent.
  std::vector<std::size_t> encoder_widths() const {
    std::vector<std::size_t> w{input_dim};
    w.insert(w.end(), hidden_dims.begin(), hidden_dims.end());
    w.push_back(latent_dim);
    return w;
  }

  bool operator==(const AutoencoderArchitecture&) const = default;
};

/// Encoder f and decoder g. Hidden layers use tanh; the latent code and the
/// reconstruction are linear. The decoder mirrors the encoder widths.
struct AutoencoderParams {
  AutoencoderArchitecture arch;
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;

  static AutoencoderParams zeros(const AutoencoderArchitecture& arch) {
    require(arch.input_dim >= 1 && arch.latent_dim >= 1, "autoencoder dimensions must be positive");
    for (std::size_t h : arch.hidden_dims) require(h >= 1, "hidden widths must be positive");
    AutoencoderParams p;
    p.arch = arch;
    const auto w = arch.encoder_widths();
    for (std::size_t l = 0; l + 1 < w.size(); ++l) p.encoder.push_back({Matrix(w[l + 1], w[l], 0.0), Vector(w[l + 1], 0.0)});
    for (std::size_t l = w.size() - 1; l > 0; --l) p.decoder.push_back({Matrix(w[l - 1], w[l], 0.0), Vector(w[l - 1], 0.0)});
    return p;
  }

  /// Weights and biases uniform in +-1/sqrt(fan_in).
  static AutoencoderParams init(const AutoencoderArchitecture& arch, std::uint64_t seed) {
    AutoencoderParams p = zeros(arch);
    std::mt19937_64 rng(seed);
    auto fill = [&](DenseLayer& layer) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in_dim()));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (double& v : layer.weight.data()) v = u(rng);
      for (double& v : layer.bias) v = u(rng);
    };
    for (auto& l : p.encoder) fill(l);
    for (auto& l : p.decoder) fill(l);
    return p;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* net : {&encoder, &decoder})
      for (const auto& l : *net) n += l.weight.size() + l.bias.size();
    return n;
  }

  /// Visits every scalar parameter in a fixed order: encoder layers first,
  /// each layer's weights (row-major) then biases, then the decoder.
  template <typename F>
  void for_each_value(F&& f) {
    for (auto* net : {&encoder, &decoder}) {
      for (auto& l : *net) {
        for (double& v : l.weight.data()) f(v);
        for (double& v : l.bias) f(v);
      }
    }
  }
  template <typename F>
  void for_each_value(F&& f) const {
    const_cast<AutoencoderParams*>(this)->for_each_value([&](double& v) { f(static_cast<const double&>(v)); });
  }

  Vector flatten() const {
    Vector out;
    out.reserve(parameter_count());
    for_each_value([&](const double& v) { out.push_back(v); });
    return out;
  }

  void assign_flat(const Vector& flat) {
    require(flat.size() == parameter_count(), "flat parameter vector has wrong length");
    std::size_t i = 0;
    for_each_value([&](double& v) { v = flat[i++]; });
  }

  void validate() const {
    const auto w = arch.encoder_widths();
    require(encoder.size() == w.size() - 1 && decoder.size() == w.size() - 1, "layer count mismatch");
    for (std::size_t l = 0; l < encoder.size(); ++l) {
      require(encoder[l].in_dim() == w[l] && encoder[l].out_dim() == w[l + 1], "encoder layer shape mismatch");
      const auto& dl = decoder[encoder.size() - 1 - l];
      require(dl.in_dim() == w[l + 1] && dl.out_dim() == w[l], "decoder does not mirror encoder");
    }
    for_each_value([](const double& v) { require(std::isfinite(v), "autoencoder parameters must be finite"); });
  }

  bool operator==(const AutoencoderParams&) const = default;
};

// ---------------------------------------------------------------------------
// Forward / backward through a tanh MLP with a linear output layer.

namespace detail {

struct MlpTrace {
  std::vector<Vector> inputs;  // input of each layer
  Vector output;
};

template <typename Range>
MlpTrace mlp_forward(const std::vector<DenseLayer>& layers, const Range& x) {
  MlpTrace tr;
  Vector a(std::begin(x), std::end(x));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    require(a.size() == L.in_dim(), "input dimension does not match network");
    Vector y(L.bias);
    for (std::size_t o = 0; o < L.out_dim(); ++o) {
      double s = 0.0;
      const auto w = L.weight.row(o);
      for (std::size_t i = 0; i < a.size(); ++i) s += w[i] * a[i];
      y[o] += s;
    }
    if (l + 1 < layers.size()) {
      for (double& v : y) v = std::tanh(v);
    }
    tr.inputs.push_back(std::move(a));
    a = std::move(y);
  }
  tr.output = std::move(a);
  return tr;
}

// Accumulates parameter gradients into `grads` and returns d(loss)/d(input).
inline Vector mlp_backward(const std::vector<DenseLayer>& layers, const MlpTrace& tr, Vector grad_out,
                           std::vector<DenseLayer>& grads) {
  Vector delta = std::move(grad_out);
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& L = layers[l];
    auto& G = grads[l];
    if (l + 1 < layers.size()) {
      // Output of this layer is the input of the next one.
      const Vector& out = tr.inputs[l + 1];
      for (std::size_t o = 0; o < delta.size(); ++o) delta[o] *= 1.0 - out[o] * out[o];
    }
    const Vector& a = tr.inputs[l];
    Vector next(L.in_dim(), 0.0);
    for (std::size_t o = 0; o < L.out_dim(); ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      G.bias[o] += d;
      auto gw = G.weight.row(o);
      const auto w = L.weight.row(o);
      for (std::size_t i = 0; i < a.size(); ++i) {
        gw[i] += d * a[i];
        next[i] += w[i] * d;
      }
    }
    delta = std::move(next);
  }
  return delta;
}

}  // namespace detail

/// h = f(x).
template <typename Range>
Vector encode(const AutoencoderParams& params, const Range& x) {
  if (static_cast<std::size_t>(std::distance(std::begin(x), std::end(x))) != params.arch.input_dim) {
    throw Error(ErrorKind::invalid_argument, "encode: input dimension mismatch");
  }
  return detail::mlp_forward(params.encoder, x).output;
}

/// x' = g(h).
template <typename Range>
Vector decode(const AutoencoderParams& params, const Range& h) {
  if (static_cast<std::size_t>(std::distance(std::begin(h), std::end(h))) != params.arch.latent_dim) {
    throw Error(ErrorKind::invalid_argument, "decode: latent dimension mismatch");
  }
  return detail::mlp_forward(params.decoder, h).output;
}

// ---------------------------------------------------------------------------
// Pooling and losses

enum class Pooling { mean, max };

inline const char* to_string(Pooling p) { return p == Pooling::mean ? "mean" : "max"; }

inline Pooling parse_pooling(const std::string& s) {
  if (s == "mean") return Pooling::mean;
  if (s == "max") return Pooling::max;
  throw Error(ErrorKind::invalid_argument, "unknown pooling '" + s + "'");
}

/// Reduces N latent rows to one global vector (column mean by default).
inline Vector pool(const Matrix& rows, Pooling mode = Pooling::mean) {
  require(rows.rows() >= 1, "pool: empty input");
  Vector p(rows.cols(), mode == Pooling::mean ? 0.0 : -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    for (std::size_t c = 0; c < rows.cols(); ++c) {
      if (mode == Pooling::mean) {
        p[c] += rows(i, c);
      } else {
        p[c] = std::max(p[c], rows(i, c));
      }
    }
  }
  if (mode == Pooling::mean) {
    for (double& v : p) v /= static_cast<double>(rows.rows());
  }
  return p;
}

/// Mean over samples of the squared L2 reconstruction error.
inline double recon_loss(const Matrix& x, const Matrix& x_rec) {
  require(x.rows() == x_rec.rows() && x.cols() == x_rec.cols(), "recon_loss: shape mismatch");
  require(x.rows() >= 1, "recon_loss: empty batch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) s += squared_distance(x.row(i), x_rec.row(i));
  return s / static_cast<double>(x.rows());
}

inline double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vector& a) { return std::sqrt(dot(a, a)); }

inline double cosine_sim(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "cosine_sim: dimension mismatch");
  const double na = norm(a), nb = norm(b);
  require(na > 0.0 && nb > 0.0, "cosine_sim: zero vector");
  return dot(a, b) / (na * nb);
}

/// Contrastive term between two pooled cluster vectors,
/// -log(e^{sim(a,a)} / (e^{sim(a,a)} + e^{sim(a,b)})).
inline double infonce_pair(const Vector& p_a, const Vector& p_b) {
  const double s_aa = cosine_sim(p_a, p_a);
  const double s_ab = cosine_sim(p_a, p_b);
  return -std::log(std::exp(s_aa) / (std::exp(s_aa) + std::exp(s_ab)));
}

struct LossWeights {
  double recon = 1.0;
  double nce = 1.0;
  double gt = 1.0;
};

struct LossBreakdown {
  double total = 0.0;
  double recon = 0.0;  // unweighted
  double nce = 0.0;    // unweighted, summed over ordered pairs
  double gt = 0.0;     // unweighted; 0 in self-supervised mode
};

/// Norm guard used by the training-time similarity.
inline constexpr double kNormGuard = 1e-12;

namespace detail {

inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Guarded cosine a.b / ((|a|+g)(|b|+g)) and its gradient with respect to a.
inline double guarded_cosine(const Vector& a, const Vector& b) {
  return dot(a, b) / ((norm(a) + kNormGuard) * (norm(b) + kNormGuard));
}

inline Vector guarded_cosine_grad_a(const Vector& a, const Vector& b) {
  const double na = norm(a), nb = norm(b);
  const double den = (na + kNormGuard) * (nb + kNormGuard);
  const double ab = dot(a, b);
  Vector g(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    g[i] = b[i] / den;
    if (na > 0.0) g[i] -= ab / (den * (na + kNormGuard)) * a[i] / na;
  }
  return g;
}

template <typename T>
void check_loss_inputs(const AutoencoderParams& params, const BasicMatrix<T>& features,
                       const std::vector<ClusterSample>& samples,
                       const std::optional<std::vector<std::size_t>>& gt_keyframes) {
  require(samples.size() >= 2, "contrastive loss needs at least two clusters");
  require(features.cols() == params.arch.input_dim, "feature dimension does not match autoencoder input");
  for (const auto& s : samples) {
    require(!s.frame_indices.empty(), "cluster sample is empty");
    for (std::size_t i : s.frame_indices) require(i < features.rows(), "sample frame index out of range");
  }
  if (gt_keyframes) {
    require(gt_keyframes->size() == samples.size(), "need one ground-truth keyframe per cluster");
    for (std::size_t i : *gt_keyframes) require(i < features.rows(), "gt keyframe index out of range");
  }
}

}  // namespace detail

/// Loss value and its exact gradient with respect to every parameter.
///
/// L = w_recon * recon(all sampled frames as one batch)
///   + w_nce * sum over ordered cluster pairs (a != b) of InfoNCE(p_a, p_b)
///   + w_gt * (1/k) * sum_j |f(x_gt_j) - p_j|^2     (only with gt_keyframes)
/// where p_j pools the latent codes of cluster j's sample. Similarity is the
/// cosine with kNormGuard added to both norms, so the self-similarity term
/// is 1 and each pair contributes softplus(sim(p_a, p_b) - 1).
template <typename T>
std::pair<LossBreakdown, AutoencoderParams> loss_and_grad(const AutoencoderParams& params,
                                                          const BasicMatrix<T>& features,
                                                          const std::vector<ClusterSample>& samples,
                                                          const std::optional<std::vector<std::size_t>>& gt_keyframes,
                                                          const LossWeights& w = {}, Pooling pooling = Pooling::mean) {
  detail::check_loss_inputs(params, features, samples, gt_keyframes);
  const std::size_t k = samples.size();
  const std::size_t latent = params.arch.latent_dim;

  std::size_t m = 0;
  for (const auto& s : samples) m += s.frame_indices.size();

  // Forward.
  std::vector<std::vector<detail::MlpTrace>> enc(k), dec(k);
  std::vector<Vector> pooled(k);
  LossBreakdown out;
  for (std::size_t j = 0; j < k; ++j) {
    const auto& idx = samples[j].frame_indices;
    Matrix h(idx.size(), latent);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      enc[j].push_back(detail::mlp_forward(params.encoder, features.row(idx[r])));
      dec[j].push_back(detail::mlp_forward(params.decoder, enc[j].back().output));
      std::copy(enc[j].back().output.begin(), enc[j].back().output.end(), h.row(r).begin());
      out.recon += squared_distance(features.row(idx[r]), dec[j].back().output);
    }
    pooled[j] = pool(h, pooling);
  }
  out.recon /= static_cast<double>(m);

  std::vector<Vector> d_pooled(k, Vector(latent, 0.0));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      if (a == b) continue;
      const double s = detail::guarded_cosine(pooled[a], pooled[b]);
      out.nce += detail::softplus(s - 1.0);
      // Pair (a,b) depends on both p_a and p_b through the symmetric similarity.
      const double coef = w.nce * detail::sigmoid(s - 1.0);
      const Vector ga = detail::guarded_cosine_grad_a(pooled[a], pooled[b]);
      const Vector gb = detail::guarded_cosine_grad_a(pooled[b], pooled[a]);
      for (std::size_t c = 0; c < latent; ++c) {
        d_pooled[a][c] += coef * ga[c];
        d_pooled[b][c] += coef * gb[c];
      }
    }
  }

  std::vector<detail::MlpTrace> gt_traces;
  if (gt_keyframes) {
    for (std::size_t j = 0; j < k; ++j) {
      gt_traces.push_back(detail::mlp_forward(params.encoder, features.row((*gt_keyframes)[j])));
      out.gt += squared_distance(gt_traces.back().output, pooled[j]);
    }
    out.gt /= static_cast<double>(k);
  }
  out.total = w.recon * out.recon + w.nce * out.nce + w.gt * out.gt;

  // Backward.
  AutoencoderParams grad = AutoencoderParams::zeros(params.arch);
  if (gt_keyframes) {
    const double coef = w.gt * 2.0 / static_cast<double>(k);
    for (std::size_t j = 0; j < k; ++j) {
      Vector d_gt(latent);
      for (std::size_t c = 0; c < latent; ++c) {
        const double diff = pooled[j][c] - gt_traces[j].output[c];
        d_pooled[j][c] += coef * diff;
        d_gt[c] = -coef * diff;
      }
      detail::mlp_backward(params.encoder, gt_traces[j], std::move(d_gt), grad.encoder);
    }
  }

  const double recon_coef = w.recon * 2.0 / static_cast<double>(m);
  for (std::size_t j = 0; j < k; ++j) {
    const auto& idx = samples[j].frame_indices;
    const double inv_n = 1.0 / static_cast<double>(idx.size());
    // Max pooling routes the gradient to the first row attaining the max.
    std::vector<std::size_t> argmax(latent, 0);
    if (pooling == Pooling::max) {
      for (std::size_t c = 0; c < latent; ++c) {
        for (std::size_t r = 1; r < idx.size(); ++r) {
          if (enc[j][r].output[c] > enc[j][argmax[c]].output[c]) argmax[c] = r;
        }
      }
    }
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const auto x = features.row(idx[r]);
      Vector d_rec(x.size());
      for (std::size_t c = 0; c < x.size(); ++c) {
        d_rec[c] = recon_coef * (dec[j][r].output[c] - static_cast<double>(x[c]));
      }
      Vector d_h = detail::mlp_backward(params.decoder, dec[j][r], std::move(d_rec), grad.decoder);
      for (std::size_t c = 0; c < latent; ++c) {
        if (pooling == Pooling::mean) {
          d_h[c] += d_pooled[j][c] * inv_n;
        } else if (argmax[c] == r) {
          d_h[c] += d_pooled[j][c];
        }
      }
      detail::mlp_backward(params.encoder, enc[j][r], std::move(d_h), grad.encoder);
    }
  }
  return {out, std::move(grad)};
}

template <typename T>
LossBreakdown total_loss(const AutoencoderParams& params, const BasicMatrix<T>& features,
                         const std::vector<ClusterSample>& samples,
                         const std::optional<std::vector<std::size_t>>& gt_keyframes, const LossWeights& w = {},
                         Pooling pooling = Pooling::mean) {
  return loss_and_grad(params, features, samples, gt_keyframes, w, pooling).first;
}

template <typename T>
AutoencoderParams grad(const AutoencoderParams& params, const BasicMatrix<T>& features,
                       const std::vector<ClusterSample>& samples,
                       const std::optional<std::vector<std::size_t>>& gt_keyframes, const LossWeights& w = {},
                       Pooling pooling = Pooling::mean) {
  return loss_and_grad(params, features, samples, gt_keyframes, w, pooling).second;
}

// ---------------------------------------------------------------------------
// Optimizer

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction over the flattened parameter vector.
class Adam {
 public:
  Adam(std::size_t n_params, AdamConfig cfg) : cfg_(cfg), m_(n_params, 0.0), v_(n_params, 0.0) {}

  void step(AutoencoderParams& params, const AutoencoderParams& gradient) {
    Vector theta = params.flatten();
    const Vector g = gradient.flatten();
    require(theta.size() == m_.size() && g.size() == m_.size(), "Adam: parameter count mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g[i];
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double m_hat = m_[i] / bc1;
      const double v_hat = v_[i] / bc2;
      theta[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
    }
    params.assign_flat(theta);
  }

  std::uint64_t steps() const noexcept { return t_; }

 private:
  AdamConfig cfg_;
  Vector m_, v_;
  std::uint64_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Training

enum class TrainMode { self_supervised, supervised };

inline const char* to_string(TrainMode m) { return m == TrainMode::self_supervised ? "self_supervised" : "supervised"; }

struct TrainConfig {
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t latent_dim = 64;
  std::vector<std::size_t> hidden_dims{128};
  std::size_t sample_size = 8;  // N frames drawn per cluster per step
  TrainMode mode = TrainMode::self_supervised;
  LossWeights weights;
  Pooling pooling = Pooling::max;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Published full-scale setting: batch 64, lr 1e-3, 2048-d embedding,
  /// Adam, 100 epochs.
  static TrainConfig full_scale() {
    TrainConfig c;
    c.latent_dim = 2048;
    return c;
  }

  void validate() const {
    require(batch_size >= 1, "batch_size must be positive");
    require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be positive");
    require(latent_dim >= 1, "latent_dim must be positive");
    require(sample_size >= 1, "sample_size must be positive");
    for (std::size_t h : hidden_dims) require(h >= 1, "hidden widths must be positive");
    require(weights.recon >= 0.0 && weights.nce >= 0.0 && weights.gt >= 0.0, "loss weights must be non-negative");
    require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "Adam betas must lie in [0, 1)");
    require(epsilon > 0.0, "Adam epsilon must be positive");
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["batch_size"] = batch_size;
    j["learning_rate"] = learning_rate;
    j["epochs"] = epochs;
    j["latent_dim"] = latent_dim;
    j["hidden_dims"] = hidden_dims;
    j["sample_size"] = sample_size;
    j["mode"] = to_string(mode);
    j["weights"] = {{"recon", weights.recon}, {"nce", weights.nce}, {"gt", weights.gt}};
    j["pooling"] = to_string(pooling);
    j["seed"] = seed;
    j["adam"] = {{"beta1", beta1}, {"beta2", beta2}, {"epsilon", epsilon}};
    return j;
  }
};

struct TrainResult {
  AutoencoderParams params;
  std::vector<double> loss_history;  // mean total loss per epoch
  std::size_t sample_size = 0;       // N actually used
  std::vector<std::string> warnings;
};

/// Fits the autoencoder on one scene. Each step draws one sample of N frames
/// from every cluster and applies one Adam update; an epoch is
/// ceil(n / (k * N)) steps. If k * N exceeds the batch size, N is lowered to
/// max(1, batch_size / k) and a warning is recorded.
template <typename T>
TrainResult train(const BasicMatrix<T>& features, const ClusterPartition& partition, const TrainConfig& cfg) {
  cfg.validate();
  partition.validate();
  require(partition.n_frames() == features.rows(), "partition does not cover the dataset");
  std::optional<std::vector<std::size_t>> gt;
  if (cfg.mode == TrainMode::supervised) {
    if (!partition.gt_keyframes) {
      throw Error(ErrorKind::missing_capability, "supervised training requires ground-truth keyframes");
    }
    gt = partition.gt_keyframes;
  }
  const std::size_t k = partition.k;
  require(k >= 2, "training needs at least two clusters");

  TrainResult res;
  res.sample_size = cfg.sample_size;
  if (k * res.sample_size > cfg.batch_size) {
    res.sample_size = std::max<std::size_t>(1, cfg.batch_size / k);
    res.warnings.push_back("k * N = " + std::to_string(k * cfg.sample_size) + " exceeds batch size " +
                           std::to_string(cfg.batch_size) + "; using N = " + std::to_string(res.sample_size));
    if (k * res.sample_size > cfg.batch_size) {
      res.warnings.push_back("k = " + std::to_string(k) + " alone exceeds batch size; batch holds one frame per cluster");
    }
  }

  AutoencoderArchitecture arch{features.cols(), cfg.hidden_dims, cfg.latent_dim};
  res.params = AutoencoderParams::init(arch, cfg.seed);
  Adam opt(res.params.parameter_count(), {cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon});

  const std::size_t per_step = k * res.sample_size;
  const std::size_t steps_per_epoch = (features.rows() + per_step - 1) / per_step;
  std::uint64_t counter = 0;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    double acc = 0.0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s, ++counter) {
      std::vector<ClusterSample> batch;
      batch.reserve(k);
      for (std::size_t j = 0; j < k; ++j) batch.push_back(sample_cluster(partition, j, res.sample_size, cfg.seed, counter));
      auto [loss, g] = loss_and_grad(res.params, features, batch, gt, cfg.weights, cfg.pooling);
      acc += loss.total;
      opt.step(res.params, g);
    }
    res.loss_history.push_back(acc / static_cast<double>(steps_per_epoch));
  }
  return res;
}

/// One keyframe per cluster: the member whose latent code is nearest the
/// pooled code of the whole cluster (lowest frame index on ties).
template <typename T>
SummaryResult select_keyframes(const AutoencoderParams& params, const BasicMatrix<T>& features,
                               const ClusterPartition& partition, Pooling pooling = Pooling::mean,
                               std::string method = "scenesum") {
  partition.validate();
  require(partition.n_frames() == features.rows(), "partition does not cover the dataset");
  SummaryResult out;
  out.method = std::move(method);
  for (std::size_t j = 0; j < partition.k; ++j) {
    const auto& mem = partition.members[j];
    require(!mem.empty(), "cannot select a keyframe from an empty cluster");
    Matrix h(mem.size(), params.arch.latent_dim);
    for (std::size_t r = 0; r < mem.size(); ++r) {
      const Vector code = encode(params, features.row(mem[r]));
      std::copy(code.begin(), code.end(), h.row(r).begin());
    }
    const Vector p = pool(h, pooling);
    std::size_t best = mem.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < mem.size(); ++r) {
      const double d = squared_distance(h.row(r), p);
      if (d < best_d) {
        best_d = d;
        best = mem[r];
      }
    }
    out.frame_indices.push_back(best);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint: "SSAE", u32 version, u32 layer count, (u32 in, u32 out) per
// layer, then per layer f32 weights (row-major out x in) and f32 biases.
// Encoder layers come first. All integers and floats little-endian.

inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void write_u32le(std::ostream& os, std::uint32_t v) {
  v = to_little_endian(v);
  os.write(reinterpret_cast<const char*>(&v), 4);
}

inline std::uint32_t read_u32le(std::istream& is) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 4)) throw Error(ErrorKind::io, "truncated checkpoint");
  return to_little_endian(v);
}

}  // namespace detail

inline void save_checkpoint(const AutoencoderParams& params, const std::filesystem::path& path) {
  params.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write checkpoint " + path.string());
  out.write("SSAE", 4);
  detail::write_u32le(out, kCheckpointVersion);
  const std::size_t n_layers = params.encoder.size() + params.decoder.size();
  detail::write_u32le(out, static_cast<std::uint32_t>(n_layers));
  for (const auto* net : {&params.encoder, &params.decoder}) {
    for (const auto& l : *net) {
      detail::write_u32le(out, static_cast<std::uint32_t>(l.in_dim()));
      detail::write_u32le(out, static_cast<std::uint32_t>(l.out_dim()));
    }
  }
  for (const auto* net : {&params.encoder, &params.decoder}) {
    for (const auto& l : *net) {
      for (double v : l.weight.data()) detail::write_f32le(out, static_cast<float>(v));
      for (double v : l.bias) detail::write_f32le(out, static_cast<float>(v));
    }
  }
  if (!out) throw Error(ErrorKind::io, "failed writing checkpoint " + path.string());
}

inline AutoencoderParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open checkpoint " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SSAE", 4) != 0) throw Error(ErrorKind::io, "not an SSAE checkpoint");
  if (detail::read_u32le(in) != kCheckpointVersion) throw Error(ErrorKind::io, "unsupported checkpoint version");
  const std::uint32_t n_layers = detail::read_u32le(in);
  if (n_layers < 2 || n_layers % 2 != 0) throw Error(ErrorKind::io, "checkpoint layer count must be even and >= 2");
  std::vector<std::pair<std::size_t, std::size_t>> dims;
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    const std::size_t in_d = detail::read_u32le(in);
    const std::size_t out_d = detail::read_u32le(in);
    dims.emplace_back(in_d, out_d);
  }
  const std::size_t half = n_layers / 2;
  AutoencoderArchitecture arch;
  arch.input_dim = dims.front().first;
  arch.latent_dim = dims[half - 1].second;
  arch.hidden_dims.clear();
  for (std::size_t l = 0; l + 1 < half; ++l) arch.hidden_dims.push_back(dims[l].second);
  AutoencoderParams p;
  try {
    p = AutoencoderParams::zeros(arch);
  } catch (const Error& e) {
    throw Error(ErrorKind::io, std::string("bad checkpoint architecture: ") + e.what());
  }
  std::size_t l = 0;
  for (auto* net : {&p.encoder, &p.decoder}) {
    for (auto& layer : *net) {
      if (layer.in_dim() != dims[l].first || layer.out_dim() != dims[l].second) {
        throw Error(ErrorKind::io, "checkpoint decoder does not mirror encoder");
      }
      ++l;
      char buf[4];
      for (double& v : layer.weight.data()) {
        if (!in.read(buf, 4)) throw Error(ErrorKind::io, "truncated checkpoint weights");
        v = detail::read_f32le(buf);
      }
      for (double& v : layer.bias) {
        if (!in.read(buf, 4)) throw Error(ErrorKind::io, "truncated checkpoint biases");
        v = detail::read_f32le(buf);
      }
    }
  }
  p.validate();
  return p;
}

}  // namespace scenesum
