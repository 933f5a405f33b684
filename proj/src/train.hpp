#pragma once

// Mini-batch training loop and evaluation over prepared pages.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "decode.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "optim.hpp"

namespace p2g {

struct TrainOptions {
  int epochs = 60;
  int batch_size = 2;
  double warmup_epochs = 10.0;
  LossWeights loss;
  bool shuffle = true;
  double edge_threshold = 0.5;
  std::uint64_t seed = 0;
  nn::AdamHyper adam;
};

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0;     // mean batch loss
  double node_f1 = 0.0;  // on the training pages, measured before each update
  double edge_f1 = 0.0;
  double lr = 0.0;       // at the last step of the epoch
};

nlohmann::json to_json(const EpochMetrics& m);

struct TrainResult {
  nn::ParamStore params;
  nn::AdamState state;
  std::vector<EpochMetrics> log;
};

using EpochCallback = std::function<void(const EpochMetrics&, const nn::ParamStore&)>;

/// Fresh parameters with input standardization fitted on `pages`.
nn::ParamStore initialize_for_training(const ModelConfig& cfg, std::uint64_t seed, std::span<const PreparedPage> pages);

TrainResult train(std::span<const PreparedPage> pages, const ModelConfig& cfg, const TrainOptions& opts,
                  const EpochCallback& on_epoch = {});
/// Continues from given parameters.
TrainResult train(std::span<const PreparedPage> pages, const ModelConfig& cfg, const TrainOptions& opts,
                  nn::ParamStore params, const EpochCallback& on_epoch = {});

/// Mean total loss over pages with the current parameters.
double dataset_loss(std::span<const PreparedPage> pages, const ModelConfig& cfg, nn::ParamStore& params,
                    const LossWeights& w);

struct PagePrediction {
  nn::Matrix node_logits;
  std::vector<Edge> out_edges;
  nn::Matrix edge_logits;  // [|out_edges|, 2]
  std::vector<Edge> positive;
  std::vector<LayoutInstance> instances;
};

/// Symmetric heads decode instances from positive edges; directed heads keep one instance per node.
PagePrediction predict(const PreparedPage& page, const ModelConfig& cfg, nn::ParamStore& params,
                       double edge_threshold = 0.5);

struct EvalReport {
  std::size_t pages = 0, nodes = 0, edges = 0;
  F1Report node;
  ClassScore edge;
  CocoResult coco;
  SamplerRecall recall;  // pooled over pages
  std::vector<std::string> category_names;
};

/// Gold instances of a labeled page: one per group, category = majority node label.
std::vector<LayoutInstance> gold_instances(const Page& page);

EvalReport evaluate(std::span<const Page> pages, std::span<const PreparedPage> prepared, const ModelConfig& cfg,
                    nn::ParamStore& params, double edge_threshold = 0.5);

std::string format_report(const EvalReport& r);
nlohmann::json report_to_json(const EvalReport& r);

}  // namespace p2g
