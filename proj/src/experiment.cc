/* Copyright 2026 The diffgo Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "diffgo/experiment.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "diffgo/error.h"

namespace diffgo {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kRandomLatentTag = 0x52414E44;  // receiver-side latent for rn/gesco
constexpr const char* kCheckpointFile = "model.dgm";
constexpr const char* kBasisFile = "basis.json";
constexpr const char* kLossFile = "loss.csv";

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::uint64_t> seed_list(const json& j, const char* what) {
  if (j.is_array()) return j.get<std::vector<std::uint64_t>>();
  if (j.is_object() && j.contains("count")) {
    const auto first = j.value("first_seed", std::uint64_t{1});
    const auto count = j.at("count").get<std::uint64_t>();
    std::vector<std::uint64_t> out(count);
    for (std::uint64_t i = 0; i < count; ++i) out[i] = first + i;
    return out;
  }
  throw ConfigError(std::string(what) + ": expected a list of seeds or {\"first_seed\", \"count\"}");
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.dataset.scene_seeds.empty()) throw ConfigError("dataset has no scene seeds");
  if (cfg.basis_seeds.empty()) throw ConfigError("basis seed list is empty");
  const std::size_t n = cfg.basis_seeds.size();
  for (std::size_t i = 0; i < cfg.hierarchy.size(); ++i) {
    if (cfg.hierarchy[i] < 1 || cfg.hierarchy[i] >= n || (i > 0 && cfg.hierarchy[i] <= cfg.hierarchy[i - 1]))
      throw ConfigError("hierarchy must be strictly increasing with entries in [1, n)");
  }
  try {
    make_schedule(cfg.schedule);
    make_goal_metric(cfg.metric, cfg.dataset.config);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (cfg.train.batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
}

bool bitwise_equal(const Image& a, const Image& b) {
  return a.height == b.height && a.width == b.width && a.pixels.size() == b.pixels.size() &&
         std::memcmp(a.pixels.data(), b.pixels.data(), a.pixels.size() * sizeof(float)) == 0;
}

double latent_distance(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

double ExperimentConfig::tau_for_metric() const {
  auto it = tau.find(metric);
  return it == tau.end() ? -1.0 : it->second;
}

std::uint64_t ExperimentConfig::hash() const {
  const std::string canonical = config_to_json(*this).dump();
  return fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(canonical.data()), canonical.size()));
}

Schedule make_schedule(const ScheduleParams& p) {
  return make_linear_schedule(p.steps, p.beta_start, p.beta_end);
}

json config_to_json(const ExperimentConfig& cfg) {
  return json{
      {"dataset", cfg.dataset},
      {"eval_scene_seeds", cfg.eval_scene_seeds},
      {"basis_seeds", cfg.basis_seeds},
      {"schedule", {{"steps", cfg.schedule.steps}, {"beta_start", cfg.schedule.beta_start},
                    {"beta_end", cfg.schedule.beta_end}}},
      {"train", {{"steps", cfg.train.steps}, {"batch_size", cfg.train.batch_size}, {"lr", cfg.train.lr},
                 {"train_seed", cfg.train.train_seed}, {"init_seed", cfg.train.init_seed},
                 {"hidden", cfg.train.hidden}, {"time_dim", cfg.train.time_dim},
                 {"projection_tol", cfg.train.projection.tol},
                 {"projection_max_iters", cfg.train.projection.max_iters}}},
      {"hierarchy", cfg.hierarchy},
      {"metric", cfg.metric},
      {"tau", cfg.tau},
      {"forward_seed", cfg.forward_seed},
      {"out_dir", cfg.out_dir},
  };
}

ExperimentConfig config_from_json(const json& j, const std::string& base_dir) {
  ExperimentConfig cfg;
  try {
    if (j.contains("manifest")) {
      cfg.manifest_path = resolve(base_dir, j.at("manifest").get<std::string>());
      try {
        cfg.dataset = load_manifest(cfg.manifest_path);
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
    } else if (j.contains("dataset")) {
      cfg.dataset = j.at("dataset").get<DatasetManifest>();
    } else {
      throw ConfigError("config needs \"manifest\" or an inline \"dataset\"");
    }

    if (j.contains("eval_scene_seeds")) cfg.eval_scene_seeds = seed_list(j.at("eval_scene_seeds"), "eval_scene_seeds");
    if (j.contains("basis_seeds")) {
      cfg.basis_seeds = seed_list(j.at("basis_seeds"), "basis_seeds");
    } else if (j.contains("basis")) {
      cfg.basis_seeds = seed_list(j.at("basis"), "basis");
    }

    if (j.contains("schedule")) {
      const json& s = j.at("schedule");
      cfg.schedule.steps = s.value("steps", cfg.schedule.steps);
      cfg.schedule.beta_start = s.value("beta_start", cfg.schedule.beta_start);
      cfg.schedule.beta_end = s.value("beta_end", cfg.schedule.beta_end);
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      cfg.train.steps = t.value("steps", cfg.train.steps);
      cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
      cfg.train.lr = t.value("lr", cfg.train.lr);
      cfg.train.train_seed = t.value("train_seed", cfg.train.train_seed);
      cfg.train.init_seed = t.value("init_seed", cfg.train.init_seed);
      cfg.train.hidden = t.value("hidden", cfg.train.hidden);
      cfg.train.time_dim = t.value("time_dim", cfg.train.time_dim);
      cfg.train.projection.tol = t.value("projection_tol", cfg.train.projection.tol);
      cfg.train.projection.max_iters = t.value("projection_max_iters", cfg.train.projection.max_iters);
    }
    cfg.hierarchy = j.value("hierarchy", cfg.hierarchy);
    cfg.metric = j.value("metric", cfg.metric);
    if (j.contains("tau")) cfg.tau = j.at("tau").get<std::map<std::string, double>>();
    cfg.forward_seed = j.value("forward_seed", cfg.forward_seed);
    cfg.out_dir = resolve(base_dir, j.value("out_dir", cfg.out_dir));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j, fs::path(path).parent_path().string());
}

std::vector<TrainExample> build_dataset(const DatasetManifest& manifest) {
  std::vector<TrainExample> out;
  out.reserve(manifest.scene_seeds.size());
  for (std::uint64_t seed : manifest.scene_seeds) {
    Scene s = generate_scene(seed, manifest.config);
    out.push_back({std::move(s.image), make_conditions(s.labels)});
  }
  return out;
}

std::uint64_t scene_forward_seed(const ExperimentConfig& cfg, std::uint64_t scene_seed) {
  return derive_seed(cfg.forward_seed, scene_seed);
}

// ---------------------------------------------------------------------------

MethodOutcome run_method(const Scene& scene, const SharedModel& shared, const GoalMetric& metric, Method method,
                         const RunOptions& opts) {
  MethodOutcome out;
  out.method = method;
  ConditionSet cond = make_conditions(scene.labels);
  const std::size_t dim = scene.image.size();

  switch (method) {
    case Method::kDiffGo: {
      DiffGoMessage msg;
      std::vector<float> x_t;
      std::vector<float> latent;
      if (opts.fixed_k) {
        const Vec x = encode_latent(scene.image, shared.sched, opts.forward_seed);
        x_t.assign(x.begin(), x.end());
        const WeightVector full = WeightVector::from_dense(Projector(shared.basis).solve_gd(x));
        Candidate c = evaluate_candidate(full, *opts.fixed_k, cond, scene, shared, metric);
        out.feedback.push_back({*opts.fixed_k, c.score.value});
        msg.basis_fingerprint = shared.basis.fingerprint();
        msg.weights = std::move(c.weights);
        msg.conditions = cond;
        latent = std::move(c.latent);
        out.reconstruction = std::move(c.image);
      } else {
        TransmitResult tx = transmit_pipeline(scene, shared, metric,
                                              TransmitConfig{opts.tau, opts.hierarchy, opts.forward_seed, {}});
        x_t = std::move(tx.latent);
        msg = std::move(tx.message);
        latent = reconstruct(msg.weights, shared.basis);
        out.reconstruction = std::move(tx.accepted);
        out.feedback = std::move(tx.feedback);
      }
      out.latent_residual = latent_distance(x_t, latent);
      out.k_used = msg.k_used();
      out.accounting = floats_transmitted(msg, Method::kDiffGo);
      if (opts.replay) {
        InMemoryTransport link;
        link.send(encode_message(msg));
        const DiffGoMessage received = decode_message(*link.receive());
        out.exact = bitwise_equal(receive_pipeline(received, shared), out.reconstruction);
      }
      break;
    }
    case Method::kOd: {
      const Vec x = encode_latent(scene.image, shared.sched, opts.forward_seed);
      const std::vector<float> latent(x.begin(), x.end());
      out.reconstruction = reverse_sample(shared.params, latent, cond, shared.sched);
      break;
    }
    case Method::kRn:
    case Method::kGesco: {
      if (method == Method::kGesco) std::fill(cond.edges.bits.begin(), cond.edges.bits.end(), 0);
      const std::vector<float> latent = gaussian_stream(derive_seed(scene.seed, kRandomLatentTag), dim);
      out.reconstruction = reverse_sample(shared.params, latent, cond, shared.sched);
      break;
    }
  }
  if (method != Method::kDiffGo) {
    DiffGoMessage carrier;
    carrier.basis_fingerprint = shared.basis.fingerprint();
    carrier.weights.n = static_cast<std::uint32_t>(shared.basis.size());
    carrier.conditions = make_conditions(scene.labels);
    out.accounting = floats_transmitted(carrier, method);
  }
  return out;
}

MetricSummary summarize(const std::vector<Scene>& truths, const std::vector<Image>& reconstructions,
                        const SceneConfig& scene_cfg) {
  if (truths.size() != reconstructions.size() || truths.empty())
    throw Error(ErrorCode::kInvalidArgument, "summarize: need matching non-empty sets");
  MetricSummary s;
  std::vector<LabeledImage> real;
  std::vector<LabeledImage> fake;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const Image& rec = reconstructions[i];
    const LabelMap seg = segment_by_levels(rec, scene_cfg);
    real.push_back({truths[i].image, segment_by_levels(truths[i].image, scene_cfg)});
    fake.push_back({rec, seg});
    s.edge_iou += edge_iou(extract_edges(seg), extract_edges(truths[i].labels)).value;
    s.miou += downstream_miou(rec, truths[i].labels, scene_cfg).value;
    s.rmse += rmse(rec, truths[i].image).value;
  }
  const double n = static_cast<double>(truths.size());
  s.edge_iou /= n;
  s.miou /= n;
  s.rmse /= n;
  s.toy_fid = toy_fid(real, fake).value;
  return s;
}

// ---------------------------------------------------------------------------

TrainOutputs cmd_train(const ExperimentConfig& cfg, std::ostream& out) {
  fs::create_directories(cfg.out_dir);
  const std::vector<TrainExample> dataset = build_dataset(cfg.dataset);
  const std::size_t dim = dataset.front().image.size();
  const SeedBasis basis = SeedBasis::build(cfg.basis_seeds, dim);
  const Schedule sched = make_schedule(cfg.schedule);
  const TrainResult trained = train_diffgo(dataset, basis, sched, cfg.train);

  TrainOutputs paths;
  paths.checkpoint_path = (fs::path(cfg.out_dir) / kCheckpointFile).string();
  paths.basis_path = (fs::path(cfg.out_dir) / kBasisFile).string();
  paths.loss_path = (fs::path(cfg.out_dir) / kLossFile).string();
  save_checkpoint(trained.params, paths.checkpoint_path);

  {
    std::ofstream b(paths.basis_path);
    b << json{{"dim", dim},
              {"seeds", basis.seeds()},
              {"fingerprint", hex64(basis.fingerprint())},
              {"config_hash", hex64(cfg.hash())}}
             .dump(2)
      << "\n";
  }

  std::ostringstream curve;
  curve << "step,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < trained.losses.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", i + 1, trained.losses[i]);
    curve << buf;
  }
  std::ofstream(paths.loss_path) << curve.str();
  out << curve.str();
  paths.loss = summarize_losses(trained.losses);
  return paths;
}

Workspace load_workspace(const ExperimentConfig& cfg) {
  const fs::path ckpt = fs::path(cfg.out_dir) / kCheckpointFile;
  const fs::path basis_path = fs::path(cfg.out_dir) / kBasisFile;
  if (!fs::exists(ckpt)) throw MissingArtifactError("missing checkpoint " + ckpt.string() + " (run train first)");
  if (!fs::exists(basis_path)) throw MissingArtifactError("missing basis file " + basis_path.string());

  std::ifstream in(basis_path);
  const json b = json::parse(in);
  const auto seeds = b.at("seeds").get<std::vector<std::uint64_t>>();
  const auto dim = b.at("dim").get<std::size_t>();
  Workspace ws{load_checkpoint(ckpt.string()), SeedBasis::build(seeds, dim), make_schedule(cfg.schedule)};
  if (hex64(ws.basis.fingerprint()) != b.at("fingerprint").get<std::string>())
    throw Error(ErrorCode::kBasisMismatch, "basis.json fingerprint does not match its seed list");
  if (ws.params.shape.dim != dim) throw Error(ErrorCode::kBasisMismatch, "checkpoint and basis disagree on D");
  return ws;
}

void cmd_run(const ExperimentConfig& cfg, std::uint64_t scene_seed, Method method, std::ostream& out) {
  const Workspace ws = load_workspace(cfg);
  const Scene scene = generate_scene(scene_seed, cfg.dataset.config);
  const GoalMetric metric = make_goal_metric(cfg.metric, cfg.dataset.config);

  RunOptions opts;
  opts.forward_seed = scene_forward_seed(cfg, scene_seed);
  opts.hierarchy = cfg.hierarchy;
  opts.tau = cfg.tau_for_metric();
  opts.replay = true;
  const MethodOutcome r = run_method(scene, ws.shared(), metric, method, opts);
  const MetricSummary m = summarize({scene}, {r.reconstruction}, cfg.dataset.config);

  char row[512];
  std::snprintf(row, sizeof row, "%s,%llu,%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%zu,%s,%s",
                method_name(method), static_cast<unsigned long long>(scene_seed), r.k_used, m.toy_fid, m.edge_iou,
                m.miou, m.rmse, r.accounting.condition_floats, r.accounting.edge_floats,
                r.accounting.extra_floats, r.accounting.total_floats, r.accounting.wire_bytes,
                r.accounting.pattern.c_str(), r.exact ? (*r.exact ? "true" : "false") : "");
  out << kRunCsvHeader << "\n" << row << "\n";

  fs::create_directories(cfg.out_dir);
  std::ofstream report(fs::path(cfg.out_dir) /
                       ("run_" + std::to_string(scene_seed) + "_" + method_name(method) + ".csv"));
  report << kRunCsvHeader << "\n" << row << "\n\n" << kMetricCsvHeader << "\n";
  for (const MetricScore& s : {MetricScore{m.toy_fid, "toy_fid"}, MetricScore{m.edge_iou, "edge_iou"},
                               MetricScore{m.miou, "miou"}, MetricScore{m.rmse, "rmse"}})
    report << format_metric_row(s, r.k_used, scene_seed) << "\n";
}

void cmd_ablate(const ExperimentConfig& cfg, const std::vector<std::size_t>& k_list, std::ostream& out) {
  const Workspace ws = load_workspace(cfg);
  const std::size_t n = ws.basis.size();
  for (std::size_t k : k_list)
    if (k < 1 || k > n) throw ConfigError("k-list entries must lie in [1, n]");
  if (cfg.eval_scene_seeds.empty()) throw ConfigError("eval_scene_seeds is empty");

  const GoalMetric metric = make_goal_metric(cfg.metric, cfg.dataset.config);
  const Projector projector(ws.basis);

  struct Prepared {
    Scene scene;
    ConditionSet cond;
    std::vector<float> x_t;
    WeightVector full;
  };
  std::vector<Prepared> items;
  std::vector<Scene> truths;
  for (std::uint64_t seed : cfg.eval_scene_seeds) {
    Prepared p;
    p.scene = generate_scene(seed, cfg.dataset.config);
    p.cond = make_conditions(p.scene.labels);
    const Vec x = encode_latent(p.scene.image, ws.sched, scene_forward_seed(cfg, seed));
    p.x_t.assign(x.begin(), x.end());
    p.full = WeightVector::from_dense(projector.solve_gd(x, cfg.train.projection));
    truths.push_back(p.scene);
    items.push_back(std::move(p));
  }

  std::ostringstream table;
  table << kAblationCsvHeader << "\n";
  for (std::size_t k : k_list) {
    std::vector<Image> recs;
    double residual = 0.0;
    for (const Prepared& p : items) {
      Candidate c = evaluate_candidate(p.full, k, p.cond, p.scene, ws.shared(), metric);
      residual += latent_distance(p.x_t, c.latent);
      recs.push_back(std::move(c.image));
    }
    residual /= static_cast<double>(items.size());
    const MetricSummary m = summarize(truths, recs, cfg.dataset.config);
    char row[256];
    std::snprintf(row, sizeof row, "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%zu", k, residual, m.toy_fid, m.edge_iou, m.miou,
                  m.rmse, k);
    table << row << "\n";
  }
  fs::create_directories(cfg.out_dir);
  std::ofstream(fs::path(cfg.out_dir) / "ablation.csv") << table.str();
  out << table.str();
}

}  // namespace diffgo
