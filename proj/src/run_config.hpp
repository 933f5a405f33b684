#pragma once

// Run configuration: a JSON document with the sections below. Unknown keys
// are rejected; every value, defaulted or not, is echoed back by to_json().
//
//   seed, output_dir
//   data      { source: synth|files, format: page|funsd, level: word|entity, train_dir, eval_dir }
//   synth     { pages, eval_pages, columns, ..., render_scale }
//   sampler   { strategy: directional|knn|beta, horizontal_k, vertical_k, band_overlap_min, knn_k, beta }
//   model     { box_info, image_provider, hidden_dim, gnn_layers, graph_refresh, edge_features, ... }
//   optimizer { lr, beta1, beta2, eps, weight_decay }
//   train     { epochs, batch_size, warmup_epochs, edge_loss_weight, pos_weight, shuffle, edge_threshold, checkpoint_every }
//   gradcheck { nodes, step, max_coords_per_param, jitter }

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "model.hpp"
#include "optim.hpp"
#include "page_io.hpp"
#include "sampling.hpp"
#include "synth.hpp"

namespace p2g {

enum class DataSource { Synth, Files };

struct DataConfig {
  DataSource source = DataSource::Synth;
  DataFormat format = DataFormat::Page;
  FunsdLevel level = FunsdLevel::Word;
  std::string train_dir;
  std::string eval_dir;
};

struct SynthSection {
  SynthConfig generator;  // generator.seed is derived from the run seed
  int eval_pages = 10;
  double render_scale = 0.0;  // > 0 writes a grayscale rendering next to each page
};

struct TrainSection {
  int epochs = 60;
  int batch_size = 2;
  double warmup_epochs = 10.0;
  double edge_loss_weight = 1.0;
  double pos_weight = 1.0;
  bool shuffle = true;
  double edge_threshold = 0.5;
  int checkpoint_every = 0;  // 0 keeps only the latest checkpoint
};

struct GradCheckSection {
  int nodes = 6;
  double step = 1e-5;
  int max_coords_per_param = 0;
  double jitter = 1e-3;
};

struct RunConfig {
  std::uint64_t seed = 7;
  std::string output_dir = "runs/default";
  DataConfig data;
  SynthSection synth;
  SamplerConfig sampler;
  ModelConfig model;
  nn::AdamHyper optimizer;
  TrainSection train;
  GradCheckSection gradcheck;
};

RunConfig run_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& doc);
nlohmann::json sampler_config_to_json(const SamplerConfig& cfg);
SamplerConfig sampler_config_from_json(const nlohmann::json& doc);
nlohmann::json adam_to_json(const nn::AdamHyper& h);
nn::AdamHyper adam_from_json(const nlohmann::json& doc);

/// Dotted names of fields that differ, e.g. "model.hidden_dim (64 vs 32)".
std::vector<std::string> model_config_diff(const ModelConfig& a, const ModelConfig& b);

SamplerKind parse_sampler_kind(const std::string& s);
std::string sampler_kind_name(SamplerKind k);
FunsdLevel parse_funsd_level(const std::string& s);

}  // namespace p2g
