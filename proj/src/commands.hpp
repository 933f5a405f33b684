#pragma once

// End-to-end operations behind the CLI and the C API.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "optim.hpp"
#include "run_config.hpp"
#include "train.hpp"

namespace p2g {

using Logger = std::function<void(const std::string&)>;

struct CommandOptions {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> checkpoint;
  std::optional<std::string> page;
  std::optional<SamplerKind> strategy;
  std::optional<FunsdLevel> level;
  std::optional<int> knn_k;
  std::optional<double> beta;
  std::string split = "eval";
};

/// Config file (or defaults) with command-line overrides applied.
RunConfig resolve_config(const CommandOptions& opts);

/// Pages of a split ("train" or "eval") as described by the run config.
std::vector<Page> load_split(const RunConfig& cfg, const std::string& split);

struct SynthSummary {
  std::size_t train_pages = 0, eval_pages = 0, boxes = 0;
  std::string out_dir;
};
SynthSummary cmd_synth(const CommandOptions& opts, const Logger& log = {});

struct SampleSummary {
  std::size_t nodes = 0, edges = 0;
  std::optional<SamplerRecall> recall;
  std::string svg_path;
};
SampleSummary cmd_sample(const CommandOptions& opts, const Logger& log = {});

struct TrainSummary {
  std::vector<EpochMetrics> log;
  std::string checkpoint_path;
  std::size_t trainable_parameters = 0;
};
TrainSummary cmd_train(const CommandOptions& opts, const Logger& log = {});

EvalReport cmd_eval(const CommandOptions& opts, const Logger& log = {});

struct InferSummary {
  std::vector<LayoutInstance> instances;
  std::string svg_path, json_path;
};
InferSummary cmd_infer(const CommandOptions& opts, const Logger& log = {});

/// Small labeled page for finite-difference checks: the first `nodes` boxes of a
/// synthetic page with coordinates jittered by up to `jitter` of the page size.
Page gradcheck_page(std::uint64_t seed, int nodes, double jitter);

struct GradCheckSummary {
  nn::GradCheckReport report;
  std::size_t nodes = 0, edges = 0;
  double tolerance = 1e-4;
  bool passed = false;
};
GradCheckSummary run_gradcheck(const RunConfig& cfg);
GradCheckSummary cmd_gradcheck(const CommandOptions& opts, const Logger& log = {});

}  // namespace p2g
