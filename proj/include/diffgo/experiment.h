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

#ifndef DIFFGO_EXPERIMENT_H_
#define DIFFGO_EXPERIMENT_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffgo/diffusion.h"
#include "diffgo/goqos.h"
#include "diffgo/noise_codec.h"
#include "diffgo/protocol.h"
#include "diffgo/scenes.h"
#include "json.hpp"

namespace diffgo {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitMissingArtifact = 3;
inline constexpr int kExitRuntime = 4;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScheduleParams {
  std::size_t steps = kDefaultSteps;
  double beta_start = kDefaultBetaStart;
  double beta_end = kDefaultBetaEnd;
};

struct ExperimentConfig {
  std::string manifest_path;
  DatasetManifest dataset;  // resolved from manifest_path
  std::vector<std::uint64_t> eval_scene_seeds;
  std::vector<std::uint64_t> basis_seeds;
  ScheduleParams schedule;
  TrainConfig train;
  std::vector<std::size_t> hierarchy;
  std::string metric = "miou";
  std::map<std::string, double> tau;
  std::uint64_t forward_seed = 0x5EED;
  std::string out_dir = "out";

  double tau_for_metric() const;
  // FNV-1a 64 of the canonical JSON form.
  std::uint64_t hash() const;
};

nlohmann::json config_to_json(const ExperimentConfig& cfg);
// Relative manifest/out paths resolve against `base_dir`. Throws ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

std::vector<TrainExample> build_dataset(const DatasetManifest& manifest);

// Trained state both endpoints hold.
struct Workspace {
  DenoiserParams params;
  SeedBasis basis;
  Schedule sched;

  SharedModel shared() const { return {params, basis, sched}; }
};

Schedule make_schedule(const ScheduleParams& p);

// Per-scene forward-noise seed.
std::uint64_t scene_forward_seed(const ExperimentConfig& cfg, std::uint64_t scene_seed);

struct MethodOutcome {
  Method method = Method::kDiffGo;
  Image reconstruction;
  std::size_t k_used = 0;
  Accounting accounting;
  double latent_residual = 0.0;  // ||x_T - latent used||, diffgo only
  std::optional<bool> exact;     // receiver replay equals local candidate
  std::vector<FeedbackEntry> feedback;
};

struct RunOptions {
  std::uint64_t forward_seed = 0;
  std::vector<std::size_t> hierarchy;
  double tau = 0.0;
  // When set, diffgo sends exactly this many weights instead of running the
  // feedback ladder.
  std::optional<std::size_t> fixed_k;
  bool replay = false;  // diffgo: push the message through a transport and receiver
};

// od shares the full forward latent; rn draws a receiver-side random latent;
// gesco is rn without the edge condition.
MethodOutcome run_method(const Scene& scene, const SharedModel& shared, const GoalMetric& metric, Method method,
                         const RunOptions& opts);

struct MetricSummary {
  double toy_fid = 0.0;   // set-level
  double edge_iou = 0.0;  // mean
  double miou = 0.0;      // mean
  double rmse = 0.0;      // mean
};

MetricSummary summarize(const std::vector<Scene>& truths, const std::vector<Image>& reconstructions,
                        const SceneConfig& scene_cfg);

// ---------------------------------------------------------------------------
// Commands. Each returns a process exit code; usage/config problems surface
// as ConfigError, missing inputs as MissingArtifactError.
// ---------------------------------------------------------------------------

struct TrainOutputs {
  std::string checkpoint_path;
  std::string basis_path;
  std::string loss_path;
  LossSummary loss;
};

TrainOutputs cmd_train(const ExperimentConfig& cfg, std::ostream& out);
void cmd_run(const ExperimentConfig& cfg, std::uint64_t scene_seed, Method method, std::ostream& out);
void cmd_ablate(const ExperimentConfig& cfg, const std::vector<std::size_t>& k_list, std::ostream& out);

// Loads the checkpoint and basis written by cmd_train.
Workspace load_workspace(const ExperimentConfig& cfg);

inline constexpr const char* kRunCsvHeader =
    "method,scene_seed,k_used,toy_fid,edge_iou,miou,rmse,condition_floats,edge_floats,extra_floats,"
    "total_floats,wire_bytes,pattern,exact";
inline constexpr const char* kAblationCsvHeader = "k,residual_norm,toy_fid,edge_iou,miou,rmse,extra_floats";

}  // namespace diffgo

#endif  // DIFFGO_EXPERIMENT_H_
