#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <random>

#include <fmt/format.h>

#include "checkpoint.hpp"
#include "coco.hpp"
#include "errors.hpp"
#include "render_svg.hpp"
#include "synth.hpp"

namespace p2g {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

fs::path out_dir_of(const RunConfig& cfg) { return fs::path(cfg.output_dir); }

void echo_config(const RunConfig& cfg, const std::string& name) {
  write_text_file(out_dir_of(cfg) / name, to_json(cfg).dump(2) + "\n");
}

SynthConfig split_generator(const RunConfig& cfg, const std::string& split) {
  SynthConfig g = cfg.synth.generator;
  g.seed = cfg.seed;
  if (split == "train") return g;
  if (split != "eval") fail(ErrorKind::InvalidConfig, "unknown split '" + split + "' (expected train|eval)");
  g.seed = nn::mix64(cfg.seed + 1);
  g.pages = cfg.synth.eval_pages;
  g.id_prefix = "eval_";
  return g;
}

// Page images for RawPixel models: the file named by the page when present,
// otherwise a rendering of the boxes (synthetic pages carry no image).
class PageImageProvider final : public ImageFeatureProvider {
 public:
  PageImageProvider(const ModelConfig& cfg, double render_scale)
      : raw_(cfg.image_size, cfg.image_channels), scale_(render_scale > 0 ? render_scale : 0.25) {}
  std::string name() const override { return raw_.name(); }
  int channels() const override { return raw_.channels(); }
  FeatureMap feature_map(const Page& page) const override {
    if (page.image_path) return raw_.feature_map(page);
    return raw_.from_image(render_page_image(page, scale_));
  }

 private:
  RawPixelProvider raw_;
  double scale_;
};

std::unique_ptr<ImageFeatureProvider> provider_for(const RunConfig& cfg, const ModelConfig& model) {
  if (model.image_provider == ImageProviderKind::None) return std::make_unique<NullProvider>();
  if (cfg.data.source == DataSource::Synth) return std::make_unique<PageImageProvider>(model, cfg.synth.render_scale);
  return make_image_provider(model);
}

std::vector<PreparedPage> prepare_all(const std::vector<Page>& pages, const RunConfig& cfg, const ModelConfig& model) {
  const auto provider = provider_for(cfg, model);
  std::vector<PreparedPage> out;
  out.reserve(pages.size());
  for (const auto& page : pages) {
    out.push_back(prepare_page(page, model, run_sampler(normalized_boxes(page), cfg.sampler), *provider));
  }
  return out;
}

void check_category_count(const std::vector<Page>& pages, const ModelConfig& model, const std::string& what) {
  const int n = dataset_category_count(pages);
  if (n != model.num_classes) {
    fail(ErrorKind::ConfigMismatch, fmt::format("{} uses {} categories but the model has num_classes = {}", what, n,
                                                model.num_classes));
  }
}

std::vector<std::string> category_names(const std::vector<Page>& pages) {
  std::vector<std::string> names;
  for (const auto& p : pages) {
    if (p.category_names.size() > names.size()) names = p.category_names;
  }
  return names;
}

Checkpoint load_checked_checkpoint(const CommandOptions& opts, const RunConfig& cfg) {
  if (!opts.checkpoint) fail(ErrorKind::InvalidConfig, "--checkpoint is required");
  Checkpoint ckpt = load_checkpoint(*opts.checkpoint);
  if (opts.config_path) require_same_config(cfg.model, ckpt.model);
  return ckpt;
}

}  // namespace

RunConfig resolve_config(const CommandOptions& opts) {
  RunConfig cfg = opts.config_path ? load_run_config(*opts.config_path) : run_config_from_json(json::object());
  if (opts.seed) {
    cfg.seed = *opts.seed;
    cfg.synth.generator.seed = *opts.seed;
  }
  if (opts.out_dir) cfg.output_dir = *opts.out_dir;
  if (opts.strategy) cfg.sampler.kind = *opts.strategy;
  if (opts.knn_k) {
    if (*opts.knn_k < 1) fail(ErrorKind::InvalidConfig, "knn k must be >= 1");
    cfg.sampler.knn_k = *opts.knn_k;
  }
  if (opts.beta) {
    if (!(*opts.beta > 0.0 && *opts.beta <= 1.0)) fail(ErrorKind::InvalidBeta, "beta must lie in (0, 1]");
    cfg.sampler.beta = *opts.beta;
  }
  if (opts.level) cfg.data.level = *opts.level;
  return cfg;
}

std::vector<Page> load_split(const RunConfig& cfg, const std::string& split) {
  if (cfg.data.source == DataSource::Synth) return synth_generate(split_generator(cfg, split));
  const std::string& dir = split == "train" ? cfg.data.train_dir : split == "eval" ? cfg.data.eval_dir : std::string();
  if (split != "train" && split != "eval") fail(ErrorKind::InvalidConfig, "unknown split '" + split + "'");
  if (dir.empty()) fail(ErrorKind::InvalidConfig, "no directory configured for the " + split + " split");
  return load_dataset(dir, cfg.data.format, cfg.data.level);
}

SynthSummary cmd_synth(const CommandOptions& opts, const Logger& log) {
  const RunConfig cfg = resolve_config(opts);
  SynthSummary s;
  s.out_dir = cfg.output_dir;
  for (const std::string split : {"train", "eval"}) {
    auto pages = synth_generate(split_generator(cfg, split));
    const fs::path dir = out_dir_of(cfg) / split;
    fs::create_directories(dir);
    for (auto& page : pages) {
      if (cfg.synth.render_scale > 0.0) {
        const std::string image = page.page_id + ".pgm";
        write_pnm((dir / image).string(), render_page_image(page, cfg.synth.render_scale));
        page.image_path = image;
      }
      save_page_file(page, dir / (page.page_id + ".json"));
      s.boxes += page.size();
    }
    (split == "train" ? s.train_pages : s.eval_pages) = pages.size();
    say(log, fmt::format("wrote {} {} pages to {}", pages.size(), split, dir.string()));
  }
  echo_config(cfg, "config.resolved.json");
  return s;
}

SampleSummary cmd_sample(const CommandOptions& opts, const Logger& log) {
  const RunConfig cfg = resolve_config(opts);
  if (!opts.page) fail(ErrorKind::InvalidConfig, "--page is required");
  const Page page = load_page_file(*opts.page);
  const SampledGraph graph = run_sampler(normalized_boxes(page), cfg.sampler);
  SampleSummary s;
  s.nodes = graph.n_nodes;
  s.edges = graph.edges.size();
  if (page.labels) s.recall = sampler_recall(graph, page.labels);
  s.svg_path = (out_dir_of(cfg) / fmt::format("{}_{}.svg", page.page_id, sampler_kind_name(cfg.sampler.kind))).string();
  write_text_file(s.svg_path, render_sample_svg(page, graph));
  say(log, fmt::format("{} nodes, {} edges -> {}", s.nodes, s.edges, s.svg_path));
  if (s.recall) {
    say(log, fmt::format("group_connectivity {:.6f}", s.recall->group_connectivity));
    if (s.recall->link_coverage) say(log, fmt::format("link_coverage {:.6f}", *s.recall->link_coverage));
  }
  return s;
}

TrainSummary cmd_train(const CommandOptions& opts, const Logger& log) {
  const RunConfig cfg = resolve_config(opts);
  const auto pages = load_split(cfg, "train");
  if (pages.empty()) fail(ErrorKind::EmptyDataset, "the training split is empty");
  check_category_count(pages, cfg.model, "the training data");
  const auto prepared = prepare_all(pages, cfg, cfg.model);
  const fs::path out = out_dir_of(cfg);
  fs::create_directories(out);
  echo_config(cfg, "config.resolved.json");

  TrainOptions to;
  to.epochs = cfg.train.epochs;
  to.batch_size = cfg.train.batch_size;
  to.warmup_epochs = cfg.train.warmup_epochs;
  to.loss = {cfg.train.edge_loss_weight, cfg.train.pos_weight};
  to.shuffle = cfg.train.shuffle;
  to.edge_threshold = cfg.train.edge_threshold;
  to.seed = cfg.seed;
  to.adam = cfg.optimizer;

  Checkpoint ckpt;
  ckpt.model = cfg.model;
  ckpt.optimizer = cfg.optimizer;
  ckpt.seed = cfg.seed;
  ckpt.category_names = category_names(pages);

  TrainSummary s;
  s.checkpoint_path = (out / "checkpoint.p2g").string();
  std::string metrics_log;
  nn::ParamStore params = initialize_for_training(cfg.model, cfg.seed, prepared);
  s.trainable_parameters = params.trainable_scalars();
  say(log, fmt::format("training on {} pages, {} trainable parameters", pages.size(), s.trainable_parameters));

  auto on_epoch = [&](const EpochMetrics& m, const nn::ParamStore& ps) {
    metrics_log += to_json(m).dump() + "\n";
    write_text_file(out / "metrics.jsonl", metrics_log);
    ckpt.params = ps;
    save_checkpoint(ckpt, s.checkpoint_path);
    if (cfg.train.checkpoint_every > 0 && m.epoch % cfg.train.checkpoint_every == 0) {
      save_checkpoint(ckpt, out / fmt::format("checkpoint_epoch_{:04d}.p2g", m.epoch));
    }
    say(log, fmt::format("epoch {:4d}  loss {:.6f}  node_f1 {:.4f}  edge_f1 {:.4f}  lr {:.3g}", m.epoch, m.loss,
                         m.node_f1, m.edge_f1, m.lr));
  };
  TrainResult result = train(prepared, cfg.model, to, std::move(params), on_epoch);
  if (cfg.train.epochs == 0) {
    ckpt.params = result.params;
    save_checkpoint(ckpt, s.checkpoint_path);
    write_text_file(out / "metrics.jsonl", "");
  }
  s.log = result.log;
  return s;
}

EvalReport cmd_eval(const CommandOptions& opts, const Logger& log) {
  const RunConfig cfg = resolve_config(opts);
  Checkpoint ckpt = load_checked_checkpoint(opts, cfg);
  const auto pages = load_split(cfg, opts.split);
  if (pages.empty()) fail(ErrorKind::EmptyDataset, "the " + opts.split + " split is empty");
  check_category_count(pages, ckpt.model, "the " + opts.split + " data");
  const auto prepared = prepare_all(pages, cfg, ckpt.model);
  EvalReport report = evaluate(pages, prepared, ckpt.model, ckpt.params, cfg.train.edge_threshold);
  if (report.category_names.empty()) report.category_names = ckpt.category_names;

  const fs::path out = out_dir_of(cfg);
  write_text_file(out / fmt::format("report_{}.txt", opts.split), format_report(report));
  write_text_file(out / fmt::format("metrics_{}.json", opts.split), report_to_json(report).dump(2) + "\n");
  std::vector<PageInstances> dets;
  for (std::size_t i = 0; i < pages.size(); ++i) {
    const auto pred = predict(prepared[i], ckpt.model, ckpt.params, cfg.train.edge_threshold);
    dets.push_back({pages[i].page_id, pages[i].width_px, pages[i].height_px, pred.instances});
  }
  write_text_file(out / fmt::format("detections_{}.json", opts.split),
                  export_coco(dets, report.category_names).dump(1) + "\n");
  say(log, format_report(report));
  return report;
}

InferSummary cmd_infer(const CommandOptions& opts, const Logger& log) {
  const RunConfig cfg = resolve_config(opts);
  Checkpoint ckpt = load_checked_checkpoint(opts, cfg);
  if (!opts.page) fail(ErrorKind::InvalidConfig, "--page is required");
  const Page page = load_page_file(*opts.page);
  const auto provider = provider_for(cfg, ckpt.model);
  Page unlabeled = page;
  unlabeled.labels.reset();
  const PreparedPage pp =
      prepare_page(unlabeled, ckpt.model, run_sampler(normalized_boxes(page), cfg.sampler), *provider);
  const PagePrediction pred = predict(pp, ckpt.model, ckpt.params, cfg.train.edge_threshold);

  const std::vector<std::string> names = ckpt.category_names.empty() ? page.category_names : ckpt.category_names;
  InferSummary s;
  s.instances = pred.instances;
  const fs::path out = out_dir_of(cfg);
  s.svg_path = (out / (page.page_id + ".infer.svg")).string();
  s.json_path = (out / (page.page_id + ".infer.json")).string();
  write_text_file(s.svg_path, render_infer_svg(page, pred, names));

  json instances = json::array();
  for (const auto& inst : pred.instances) {
    instances.push_back({{"members", inst.members},
                         {"category", inst.category},
                         {"category_name", inst.category < static_cast<int>(names.size()) ? names[inst.category] : ""},
                         {"bbox", to_pixel_xywh(inst.bbox, page.width_px, page.height_px)},
                         {"score", inst.score}});
  }
  json node_classes = argmax_rows(pred.node_logits);
  json edges = json::array();
  for (const auto& e : pred.positive) edges.push_back({e.a, e.b});
  const json doc{{"page_id", page.page_id},
                 {"instances", instances},
                 {"node_classes", node_classes},
                 {"positive_edges", edges},
                 {"coco", export_coco({{page.page_id, page.width_px, page.height_px, pred.instances}}, names)}};
  write_text_file(s.json_path, doc.dump(1) + "\n");
  say(log, fmt::format("{} instances -> {}, {}", pred.instances.size(), s.svg_path, s.json_path));
  return s;
}

Page gradcheck_page(std::uint64_t seed, int nodes, double jitter) {
  SynthConfig sc;
  sc.seed = seed;
  sc.pages = 1;
  Page page = synth_generate(sc).front();
  const auto n = static_cast<std::size_t>(std::min<std::size_t>(nodes, page.boxes.size()));
  page.boxes.resize(n);
  GoldLabels labels;
  labels.node_category.assign(page.labels->node_category.begin(), page.labels->node_category.begin() + n);
  for (const auto& g : page.labels->groups) {
    std::vector<NodeId> kept;
    for (NodeId id : g) {
      if (static_cast<std::size_t>(id) < n) kept.push_back(id);
    }
    if (!kept.empty()) labels.groups.push_back(std::move(kept));
  }
  page.labels = std::move(labels);
  std::mt19937_64 gen(nn::mix64(seed ^ 0x6a17ULL));
  auto wiggle = [&](double& v, double scale) { v += (2.0 * nn::unit_uniform(gen()) - 1.0) * jitter * scale; };
  for (auto& b : page.boxes) {
    wiggle(b.bbox.xmin, page.width_px);
    wiggle(b.bbox.xmax, page.width_px);
    wiggle(b.bbox.ymin, page.height_px);
    wiggle(b.bbox.ymax, page.height_px);
  }
  return page;
}

GradCheckSummary run_gradcheck(const RunConfig& cfg) {
  const Page page = gradcheck_page(cfg.seed, cfg.gradcheck.nodes, cfg.gradcheck.jitter);
  ModelConfig model = cfg.model;
  model.num_classes = std::max(model.num_classes, dataset_category_count({page}));
  const auto provider = provider_for(cfg, model);
  const PreparedPage pp = prepare_page(page, model, run_sampler(normalized_boxes(page), cfg.sampler), *provider);
  nn::ParamStore params = initialize_for_training(model, cfg.seed, std::span<const PreparedPage>(&pp, 1));
  const LossWeights w{cfg.train.edge_loss_weight, cfg.train.pos_weight};

  const nn::Objective objective = [&](nn::ParamStore& ps, bool backward) {
    nn::Graph g;
    const ForwardOutput out = forward(g, pp, model, ps);
    const nn::Var l = loss(g, out, pp, w);
    if (backward) g.backward(l);
    return g.value(l)(0, 0);
  };
  nn::GradCheckOptions go;
  go.step = cfg.gradcheck.step;
  go.max_coords_per_param = static_cast<std::size_t>(cfg.gradcheck.max_coords_per_param);
  go.seed = cfg.seed;

  GradCheckSummary s;
  s.report = nn::grad_check(params, objective, go);
  s.nodes = pp.size();
  s.edges = pp.candidates.edges.size();
  s.passed = s.report.max_rel_error < s.tolerance;
  return s;
}

GradCheckSummary cmd_gradcheck(const CommandOptions& opts, const Logger& log) {
  const RunConfig cfg = resolve_config(opts);
  const GradCheckSummary s = run_gradcheck(cfg);
  say(log, fmt::format("gradcheck: {} nodes, {} candidate edges, {} coordinates", s.nodes, s.edges,
                       s.report.coords_checked));
  say(log, fmt::format("max_rel_error {:.3e} (worst {}[{}]: analytic {:.9g}, numeric {:.9g})", s.report.max_rel_error,
                       s.report.worst_param, s.report.worst_index, s.report.worst_analytic, s.report.worst_numeric));
  return s;
}

}  // namespace p2g
