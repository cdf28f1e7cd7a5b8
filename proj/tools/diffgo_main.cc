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

// Command-line driver: init, train, run, ablate.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "diffgo/error.h"
#include "diffgo/experiment.h"

namespace {

using namespace diffgo;

std::vector<std::size_t> parse_k_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError("bad --k-list entry '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("--k-list is empty");
  return out;
}

ExperimentConfig load(const std::string& path, const std::string& out_override) {
  ExperimentConfig cfg = load_config(path);
  if (!out_override.empty()) cfg.out_dir = out_override;
  return cfg;
}

void write_default_config(const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  DatasetManifest manifest;
  for (std::uint64_t s = 1; s <= 200; ++s) manifest.scene_seeds.push_back(s);
  save_manifest(manifest, (fs::path(dir) / "manifest.json").string());

  nlohmann::json cfg = {
      {"manifest", "manifest.json"},
      {"eval_scene_seeds", {{"first_seed", 100001}, {"count", 50}}},
      {"basis", {{"first_seed", 1}, {"count", 128}}},
      {"schedule", {{"steps", 100}, {"beta_start", 1e-4}, {"beta_end", 0.1}}},
      {"train", {{"steps", 2000}, {"batch_size", 8}, {"lr", 1e-3}, {"train_seed", 1}, {"init_seed", 1}}},
      {"hierarchy", {1, 8, 32}},
      {"metric", "miou"},
      {"tau", {{"miou", 0.1}, {"edge_iou", 0.3}, {"toy_fid", 0.01}, {"rmse", 0.1}}},
      {"forward_seed", 24301},
      {"out_dir", "out"},
  };
  std::ofstream(fs::path(dir) / "config.json") << cfg.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diffgo: seeded-noise-basis diffusion codec with local generative feedback"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t scene_seed = 0;
  std::string method = "diffgo";
  std::string k_list = "1,8,32,128";
  std::string init_dir = ".";

  auto* init = app.add_subcommand("init", "Write a default config.json and manifest.json");
  init->add_option("--out", init_dir, "Directory to write into");

  auto* train = app.add_subcommand("train", "Train the denoiser; writes checkpoint, basis seeds, loss curve");
  auto* run = app.add_subcommand("run", "Transmit one scene with a method and report metrics + accounting");
  auto* ablate = app.add_subcommand("ablate", "Sweep the number of shared weights over the evaluation set");
  for (auto* sub : {train, run, ablate}) {
    sub->add_option("--config", config_path, "Experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "Override the output directory");
  }
  run->add_option("--scene-seed", scene_seed, "Scene seed")->required();
  run->add_option("--method", method, "diffgo | od | rn | gesco");
  ablate->add_option("--k-list", k_list, "Comma-separated weight counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (init->parsed()) {
      write_default_config(init_dir);
      std::cerr << "wrote " << init_dir << "/config.json and manifest.json\n";
    } else if (train->parsed()) {
      const ExperimentConfig cfg = load(config_path, out_dir);
      const TrainOutputs t = cmd_train(cfg, std::cout);
      std::cerr << "checkpoint: " << t.checkpoint_path << "\nloss: " << t.loss.initial << " -> " << t.loss.final
                << "\n";
    } else if (run->parsed()) {
      const ExperimentConfig cfg = load(config_path, out_dir);
      const auto m = parse_method(method);
      if (!m) throw ConfigError("unknown method '" + method + "'");
      cmd_run(cfg, scene_seed, *m, std::cout);
    } else if (ablate->parsed()) {
      const ExperimentConfig cfg = load(config_path, out_dir);
      cmd_ablate(cfg, parse_k_list(k_list), std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const MissingArtifactError& e) {
    std::cerr << "missing artifact: " << e.what() << "\n";
    return kExitMissingArtifact;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
