// scenesum command-line tool: generate, summarize, evaluate, sweep.
//
// Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 missing capability
// (for example a pose-dependent command on a pose-free dataset).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scenesum/scenesum.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCapability = 3;

struct Options {
  // generate
  std::size_t frames = 500;
  std::size_t dim = 64;
  std::string mode = "pose-correlated";
  double box = 20.0;
  double step_sigma = 0.5;
  double noise = 0.05;
  // shared
  std::uint64_t seed = 0;
  std::string out;
  std::string manifest;
  // summarize
  std::string method = "scenesum";
  std::size_t k = 20;
  std::size_t n_sample = 8;
  std::size_t epochs = 100;
  double lr = 1e-3;
  std::size_t latent = 64;
  std::size_t hidden = 128;
  std::size_t batch = 64;
  std::string pooling = "max";
  bool balance = false;
  std::size_t restarts = 10;
  // evaluate
  std::string summary;
  double r_max = 3.0;
  std::size_t steps = 100;
  std::string integration = "trapezoid";
  bool svg = false;
  // sweep
  std::vector<std::string> methods{"uniform", "random", "vsumm", "change", "scenesum"};
  std::vector<std::size_t> ks{10, 20, 30, 40};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
};

/// Tracks which flags were bound so that the resolved configuration is
/// defaults, then --config JSON, then explicit flags.
class Binder {
 public:
  explicit Binder(Options& parsed) : parsed_(parsed) {}

  template <typename T>
  CLI::Option* bind(CLI::App* app, const std::string& flag, T Options::*member, const std::string& help) {
    CLI::Option* opt = app->add_option(flag, parsed_.*member, help);
    record(app, opt, flag, member);
    return opt;
  }

  CLI::Option* bind_flag(CLI::App* app, const std::string& flag, bool Options::*member, const std::string& help) {
    CLI::Option* opt = app->add_flag(flag, parsed_.*member, help);
    record(app, opt, flag, member);
    return opt;
  }

  Options resolve(const ordered_json& config) const {
    Options resolved;
    for (const auto& b : bindings_) {
      if (config.contains(b.key)) b.from_json(resolved, config.at(b.key));
    }
    for (const auto& b : bindings_) {
      if (b.opt->count() > 0) b.copy(resolved, parsed_);
    }
    resolved.manifest = parsed_.manifest;
    return resolved;
  }

  ordered_json snapshot(const Options& o, CLI::App* sub) const {
    ordered_json j;
    for (const auto& b : bindings_) {
      if (b.app == sub && b.key != "config" && b.key != "out" && b.key != "summary") b.to_json(o, j[b.key]);
    }
    return j;
  }

 private:
  struct Binding {
    CLI::Option* opt;
    CLI::App* app;
    std::string key;
    std::function<void(Options&, const Options&)> copy;
    std::function<void(Options&, const nlohmann::json&)> from_json;
    std::function<void(const Options&, ordered_json&)> to_json;
  };

  template <typename T>
  void record(CLI::App* app, CLI::Option* opt, const std::string& flag, T Options::*member) {
    const std::string key = flag.substr(flag.find_first_not_of('-'));
    bindings_.push_back({opt, app, key,
                         [member](Options& dst, const Options& src) { dst.*member = src.*member; },
                         [member, key](Options& dst, const nlohmann::json& j) {
                           try {
                             dst.*member = j.get<T>();
                           } catch (const nlohmann::json::exception&) {
                             throw scenesum::Error(scenesum::ErrorKind::invalid_argument,
                                                   "config key '" + key + "' has the wrong type");
                           }
                         },
                         [member](const Options& o, ordered_json& j) { j = o.*member; }});
  }

  Options& parsed_;
  std::vector<Binding> bindings_;
};

ordered_json read_config(const std::string& path) {
  if (path.empty()) return ordered_json::object();
  std::ifstream in(path);
  if (!in) throw scenesum::Error(scenesum::ErrorKind::io, "cannot open config " + path);
  try {
    ordered_json j;
    in >> j;
    if (!j.is_object()) throw scenesum::Error(scenesum::ErrorKind::invalid_argument, "config must be a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw scenesum::Error(scenesum::ErrorKind::io, "malformed config " + path + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw scenesum::Error(scenesum::ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) throw scenesum::Error(scenesum::ErrorKind::io, "failed writing " + path.string());
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    write_text(out_path, text);
  }
}

scenesum::SummarizeConfig summarize_config(const Options& o) {
  scenesum::SummarizeConfig c;
  c.method = scenesum::parse_method(o.method);
  c.k = o.k;
  c.seed = o.seed;
  c.balance = o.balance;
  c.kmeans_restarts = o.restarts;
  c.train.batch_size = o.batch;
  c.train.learning_rate = o.lr;
  c.train.epochs = o.epochs;
  c.train.latent_dim = o.latent;
  c.train.hidden_dims = {o.hidden};
  c.train.sample_size = o.n_sample;
  c.train.pooling = scenesum::parse_pooling(o.pooling);
  c.train.validate();
  return c;
}

scenesum::EvaluateConfig evaluate_config(const Options& o) {
  scenesum::require(o.r_max > 0.0, "--r-max must be positive");
  scenesum::require(o.steps >= 2, "--steps must be at least 2");
  return {o.r_max, o.steps, scenesum::parse_integration(o.integration)};
}

int cmd_generate(const Options& o, const ordered_json& resolved) {
  scenesum::require(!o.out.empty(), "generate requires --out <directory>");
  scenesum::SyntheticConfig cfg;
  cfg.n_frames = o.frames;
  cfg.dim = o.dim;
  cfg.feature_mode = scenesum::parse_feature_mode(o.mode);
  cfg.box_side = o.box;
  cfg.step_sigma = o.step_sigma;
  cfg.noise_sigma = o.noise;
  cfg.seed = o.seed;
  const scenesum::SceneDataset ds = scenesum::generate_synthetic(cfg);
  const fs::path manifest = fs::path(o.out) / "manifest.json";
  scenesum::save_dataset(ds, manifest, resolved);
  std::cout << manifest.string() << '\n';
  return 0;
}

int cmd_summarize(const Options& o, const ordered_json& resolved) {
  const scenesum::SummarizeConfig cfg = summarize_config(o);
  const scenesum::SceneDataset ds = scenesum::load_dataset(o.manifest);
  scenesum::SummarizeOutput res = scenesum::summarize(ds, cfg);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  res.summary.config["scene_id"] = ds.scene_id;
  res.summary.config["flags"] = resolved;
  emit(o.out, res.summary.to_json().dump(2) + "\n");
  return 0;
}

int cmd_evaluate(const Options& o, const ordered_json& resolved) {
  scenesum::require(!o.summary.empty(), "evaluate requires --summary <file>");
  scenesum::require(!o.out.empty(), "evaluate requires --out <directory>");
  const scenesum::EvaluateConfig cfg = evaluate_config(o);
  const scenesum::SceneDataset ds = scenesum::load_dataset(o.manifest);
  const scenesum::SummaryResult s = scenesum::load_summary(o.summary);
  const scenesum::Evaluation ev = scenesum::evaluate(ds, s, cfg);

  const fs::path dir(o.out);
  write_text(dir / "curve.csv", scenesum::curve_csv(ev.curve));
  ordered_json report;
  report["method"] = s.method;
  report["k"] = s.k();
  report["r_max"] = cfg.r_max;
  report["steps"] = cfg.steps;
  report["integration"] = o.integration;
  report["auc"] = ev.auc;
  report["scene_id"] = ds.scene_id;
  report["flags"] = resolved;
  report["summary_config"] = s.config;
  write_text(dir / "report.json", report.dump(2) + "\n");
  if (o.svg) {
    const std::string title = "Divergence vs distance threshold: " + s.method + " (k=" + std::to_string(s.k()) + ")";
    write_text(dir / "curve.svg", scenesum::curve_svg(ev.curve, title));
  }
  std::cout << "auc " << report["auc"].dump() << '\n';
  return 0;
}

int cmd_sweep(const Options& o, const ordered_json&) {
  scenesum::SummarizeConfig base = summarize_config(o);
  const scenesum::EvaluateConfig eval = evaluate_config(o);
  std::vector<scenesum::Method> methods;
  for (const auto& m : o.methods) methods.push_back(scenesum::parse_method(m));
  const scenesum::SceneDataset ds = scenesum::load_dataset(o.manifest);
  const scenesum::SweepResult r = scenesum::sweep(ds, methods, o.ks, o.seeds, base, eval);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  emit(o.out, scenesum::sweep_csv(r));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene summarization: balanced clustering + contrastive keyframe selection"};
  app.require_subcommand(1);

  Options parsed;
  Binder binder(parsed);
  std::string config_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config; explicit flags override it");
    binder.bind(sub, "--seed", &Options::seed, "Random seed");
  };
  auto add_summarize_flags = [&](CLI::App* sub) {
    binder.bind(sub, "--k", &Options::k, "Number of keyframes / clusters");
    binder.bind(sub, "--n-sample", &Options::n_sample, "Frames sampled per cluster per training step");
    binder.bind(sub, "--epochs", &Options::epochs, "Training epochs");
    binder.bind(sub, "--lr", &Options::lr, "Adam learning rate");
    binder.bind(sub, "--latent", &Options::latent, "Latent (embedding) dimension");
    binder.bind(sub, "--hidden", &Options::hidden, "Hidden layer width");
    binder.bind(sub, "--batch-size", &Options::batch, "Cap on k * n-sample per step");
    binder.bind(sub, "--pooling", &Options::pooling, "Cluster pooling: mean | max");
    binder.bind_flag(sub, "--balance", &Options::balance, "Balanced (near-equal) cluster sizes");
    binder.bind(sub, "--restarts", &Options::restarts, "k-means restarts for scenesum clustering");
  };
  auto add_eval_flags = [&](CLI::App* sub) {
    binder.bind(sub, "--r-max", &Options::r_max, "Largest distance threshold (m)");
    binder.bind(sub, "--steps", &Options::steps, "Threshold intervals on [0, r-max]");
    binder.bind(sub, "--integration", &Options::integration, "AUC rule: trapezoid | left");
  };

  CLI::App* gen = app.add_subcommand("generate", "Write a synthetic walkthrough dataset");
  add_common(gen);
  binder.bind(gen, "--frames", &Options::frames, "Number of frames");
  binder.bind(gen, "--dim", &Options::dim, "Feature dimension");
  binder.bind(gen, "--mode", &Options::mode, "pose-correlated | appearance-only");
  binder.bind(gen, "--box", &Options::box, "Side of the square arena (m)");
  binder.bind(gen, "--step-sigma", &Options::step_sigma, "Random walk step std-dev (m)");
  binder.bind(gen, "--noise", &Options::noise, "Feature noise std-dev");
  binder.bind(gen, "--out", &Options::out, "Output directory");

  CLI::App* sum = app.add_subcommand("summarize", "Select keyframes from a dataset");
  add_common(sum);
  binder.bind(sum, "--method", &Options::method,
              "scenesum | scenesum-supervised | uniform | random | vsumm | change");
  add_summarize_flags(sum);
  binder.bind(sum, "--out", &Options::out, "Summary JSON path (stdout if omitted)");
  sum->add_option("manifest", parsed.manifest, "Dataset manifest")->required();

  CLI::App* ev = app.add_subcommand("evaluate", "Divergence curve and AUC of a summary");
  add_common(ev);
  binder.bind(ev, "--summary", &Options::summary, "Summary JSON produced by summarize");
  add_eval_flags(ev);
  binder.bind_flag(ev, "--svg", &Options::svg, "Also write curve.svg");
  binder.bind(ev, "--out", &Options::out, "Output directory");
  ev->add_option("manifest", parsed.manifest, "Dataset manifest")->required();

  CLI::App* sw = app.add_subcommand("sweep", "AUC table over methods x k x seeds");
  add_common(sw);
  binder.bind(sw, "--methods", &Options::methods, "Comma-separated methods")->delimiter(',');
  binder.bind(sw, "--ks", &Options::ks, "Comma-separated k values")->delimiter(',');
  binder.bind(sw, "--seeds", &Options::seeds, "Comma-separated seeds")->delimiter(',');
  add_summarize_flags(sw);
  add_eval_flags(sw);
  binder.bind(sw, "--out", &Options::out, "CSV path (stdout if omitted)");
  sw->add_option("manifest", parsed.manifest, "Dataset manifest")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    const Options o = binder.resolve(read_config(config_path));
    CLI::App* sub = app.get_subcommands().front();
    const ordered_json resolved = binder.snapshot(o, sub);
    if (sub == gen) return cmd_generate(o, resolved);
    if (sub == sum) return cmd_summarize(o, resolved);
    if (sub == ev) return cmd_evaluate(o, resolved);
    return cmd_sweep(o, resolved);
  } catch (const scenesum::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case scenesum::ErrorKind::io: return kExitIo;
      case scenesum::ErrorKind::missing_capability: return kExitCapability;
      case scenesum::ErrorKind::invalid_argument: return kExitUsage;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitIo;
}
