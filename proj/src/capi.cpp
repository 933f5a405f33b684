#include "p2g/p2g.h"

#include <cstring>
#include <exception>
#include <mutex>
#include <new>
#include <string>

#include "checkpoint.hpp"
#include "commands.hpp"
#include "errors.hpp"
#include "page_io.hpp"
#include "train.hpp"

using namespace p2g;

namespace {

constexpr std::uint32_t kPageMagic = 0x50414745;
constexpr std::uint32_t kGraphMagic = 0x47525048;
constexpr std::uint32_t kModelMagic = 0x4d4f444c;
constexpr std::uint32_t kPredMagic = 0x50524544;

thread_local std::string t_error;
thread_local std::string t_kind;

std::mutex g_log_mutex;
p2g_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

p2g_status set_error(p2g_status status, const std::string& kind, const std::string& message) {
  t_kind = kind;
  t_error = message;
  return status;
}

p2g_status from_category(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return P2G_ERR_CONFIG;
    case ErrorCategory::Data: return P2G_ERR_DATA;
    case ErrorCategory::Numeric: return P2G_ERR_NUMERIC;
    case ErrorCategory::Internal: break;
  }
  return P2G_ERR_INTERNAL;
}

template <class F>
p2g_status guarded(F&& body) {
  try {
    body();
    return P2G_OK;
  } catch (const Error& e) {
    return set_error(from_category(e.category()), std::string(kind_name(e.kind())), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return set_error(P2G_ERR_DATA, "IoError", e.what());
  } catch (const std::bad_alloc&) {
    return set_error(P2G_ERR_INTERNAL, "OutOfMemory", "out of memory");
  } catch (const std::exception& e) {
    return set_error(P2G_ERR_INTERNAL, "Internal", e.what());
  } catch (...) {
    return set_error(P2G_ERR_INTERNAL, "Internal", "unknown failure");
  }
}

p2g_status invalid_argument(const std::string& what) { return set_error(P2G_ERR_INVALID_ARGUMENT, "InvalidArgument", what); }
p2g_status invalid_handle(const char* what) {
  return set_error(P2G_ERR_INVALID_HANDLE, "InvalidHandle", std::string("invalid ") + what + " handle");
}

Logger logger() {
  return [](const std::string& line) {
    std::lock_guard<std::mutex> lock(g_log_mutex);
    if (g_log_fn) g_log_fn(line.c_str(), g_log_user);
  };
}

CommandOptions to_options(const p2g_options* o) {
  CommandOptions c;
  if (!o) return c;
  if (o->config_path) c.config_path = o->config_path;
  if (o->out_dir) c.out_dir = o->out_dir;
  if (o->checkpoint) c.checkpoint = o->checkpoint;
  if (o->page_path) c.page = o->page_path;
  if (o->strategy) c.strategy = parse_sampler_kind(o->strategy);
  if (o->level) c.level = parse_funsd_level(o->level);
  if (o->split) c.split = o->split;
  if (o->has_seed) c.seed = o->seed;
  if (o->knn_k > 0) c.knn_k = o->knn_k;
  if (o->beta > 0.0) c.beta = o->beta;
  return c;
}

}  // namespace

struct p2g_page {
  std::uint32_t magic = kPageMagic;
  Page page;
};

struct p2g_graph {
  std::uint32_t magic = kGraphMagic;
  SampledGraph graph;
};

struct p2g_model {
  std::uint32_t magic = kModelMagic;
  mutable Checkpoint ckpt;  // forward passes bind parameters by reference
};

struct p2g_prediction {
  std::uint32_t magic = kPredMagic;
  PagePrediction pred;
  int width_px = 0, height_px = 0;
};

template <class H>
static bool valid(const H* h, std::uint32_t magic) {
  return h != nullptr && h->magic == magic;
}

extern "C" {

const char* p2g_version(void) { return "1.0.0"; }

const char* p2g_status_name(p2g_status status) {
  switch (status) {
    case P2G_OK: return "ok";
    case P2G_ERR_INTERNAL: return "internal error";
    case P2G_ERR_CONFIG: return "config error";
    case P2G_ERR_DATA: return "data error";
    case P2G_ERR_NUMERIC: return "numeric failure";
    case P2G_ERR_INVALID_HANDLE: return "invalid handle";
    case P2G_ERR_INVALID_ARGUMENT: return "invalid argument";
  }
  return "unknown status";
}

const char* p2g_last_error(void) { return t_error.c_str(); }
const char* p2g_last_error_kind(void) { return t_kind.c_str(); }

void p2g_set_log_callback(p2g_log_fn fn, void* user) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
}

void p2g_options_init(p2g_options* opts) {
  if (opts) std::memset(opts, 0, sizeof(*opts));
}

p2g_status p2g_synth(const p2g_options* opts, p2g_synth_summary* out) {
  return guarded([&] {
    const SynthSummary s = cmd_synth(to_options(opts), logger());
    if (out) *out = {s.train_pages, s.eval_pages, s.boxes};
  });
}

p2g_status p2g_sample(const p2g_options* opts, p2g_sample_summary* out) {
  return guarded([&] {
    const SampleSummary s = cmd_sample(to_options(opts), logger());
    if (out) {
      out->nodes = s.nodes;
      out->edges = s.edges;
      out->group_connectivity = s.recall ? s.recall->group_connectivity : -1.0;
      out->link_coverage = s.recall && s.recall->link_coverage ? *s.recall->link_coverage : -1.0;
    }
  });
}

p2g_status p2g_train(const p2g_options* opts, p2g_train_summary* out) {
  return guarded([&] {
    const TrainSummary s = cmd_train(to_options(opts), logger());
    if (out) {
      *out = {};
      out->epochs = static_cast<int>(s.log.size());
      if (!s.log.empty()) {
        out->final_loss = s.log.back().loss;
        out->final_node_f1 = s.log.back().node_f1;
        out->final_edge_f1 = s.log.back().edge_f1;
      }
      out->trainable_parameters = s.trainable_parameters;
    }
  });
}

p2g_status p2g_evaluate(const p2g_options* opts, p2g_eval_summary* out) {
  return guarded([&] {
    const EvalReport r = cmd_eval(to_options(opts), logger());
    if (out) {
      out->pages = r.pages;
      out->nodes = r.nodes;
      out->edges = r.edges;
      out->node_f1_micro = r.node.micro.f1;
      out->node_f1_macro = r.node.macro_f1;
      out->edge_precision = r.edge.precision;
      out->edge_recall = r.edge.recall;
      out->edge_f1 = r.edge.f1;
      out->map_50_95 = r.coco.map;
      out->group_connectivity = r.recall.group_connectivity;
      out->link_coverage = r.recall.link_coverage ? *r.recall.link_coverage : -1.0;
    }
  });
}

p2g_status p2g_infer(const p2g_options* opts, size_t* n_instances) {
  return guarded([&] {
    const InferSummary s = cmd_infer(to_options(opts), logger());
    if (n_instances) *n_instances = s.instances.size();
  });
}

p2g_status p2g_gradcheck(const p2g_options* opts, p2g_gradcheck_summary* out) {
  return guarded([&] {
    const GradCheckSummary s = cmd_gradcheck(to_options(opts), logger());
    if (out) {
      *out = {s.report.max_rel_error, s.tolerance, s.report.coords_checked, s.nodes, s.edges, s.passed ? 1 : 0};
    }
  });
}

p2g_status p2g_page_load(const char* path, p2g_page** out) {
  if (!path || !out) return invalid_argument("path and out are required");
  *out = nullptr;
  return guarded([&] {
    auto h = std::make_unique<p2g_page>();
    h->page = load_page_file(path);
    *out = h.release();
  });
}

p2g_status p2g_page_from_json(const char* json_text, p2g_page** out) {
  if (!json_text || !out) return invalid_argument("json_text and out are required");
  *out = nullptr;
  return guarded([&] {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::SchemaError, std::string("invalid JSON: ") + e.what());
    }
    auto h = std::make_unique<p2g_page>();
    h->page = parse_page(doc);
    *out = h.release();
  });
}

p2g_status p2g_page_box_count(const p2g_page* page, size_t* out) {
  if (!valid(page, kPageMagic)) return invalid_handle("page");
  if (!out) return invalid_argument("out is required");
  *out = page->page.size();
  return P2G_OK;
}

void p2g_page_free(p2g_page* page) {
  if (valid(page, kPageMagic)) {
    page->magic = 0;
    delete page;
  }
}

p2g_status p2g_graph_sample(const p2g_page* page, const char* strategy, int k, double beta, p2g_graph** out) {
  if (!valid(page, kPageMagic)) return invalid_handle("page");
  if (!out) return invalid_argument("out is required");
  *out = nullptr;
  return guarded([&] {
    SamplerConfig cfg;
    if (strategy) cfg.kind = parse_sampler_kind(strategy);
    if (k > 0) cfg.knn_k = k;
    if (beta != 0.0) cfg.beta = beta;
    auto h = std::make_unique<p2g_graph>();
    h->graph = run_sampler(normalized_boxes(page->page), cfg);
    *out = h.release();
  });
}

p2g_status p2g_graph_edge_count(const p2g_graph* graph, size_t* out) {
  if (!valid(graph, kGraphMagic)) return invalid_handle("graph");
  if (!out) return invalid_argument("out is required");
  *out = graph->graph.edges.size();
  return P2G_OK;
}

p2g_status p2g_graph_edges(const p2g_graph* graph, int32_t* pairs, size_t capacity) {
  if (!valid(graph, kGraphMagic)) return invalid_handle("graph");
  const auto& edges = graph->graph.edges;
  if (capacity < edges.size() || (!pairs && !edges.empty())) {
    return invalid_argument("buffer holds " + std::to_string(capacity) + " pairs, need " + std::to_string(edges.size()));
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    pairs[2 * i] = edges[i].a;
    pairs[2 * i + 1] = edges[i].b;
  }
  return P2G_OK;
}

void p2g_graph_free(p2g_graph* graph) {
  if (valid(graph, kGraphMagic)) {
    graph->magic = 0;
    delete graph;
  }
}

p2g_status p2g_model_load(const char* checkpoint_path, p2g_model** out) {
  if (!checkpoint_path || !out) return invalid_argument("checkpoint_path and out are required");
  *out = nullptr;
  return guarded([&] {
    auto h = std::make_unique<p2g_model>();
    h->ckpt = load_checkpoint(checkpoint_path);
    *out = h.release();
  });
}

p2g_status p2g_model_num_classes(const p2g_model* model, int* out) {
  if (!valid(model, kModelMagic)) return invalid_handle("model");
  if (!out) return invalid_argument("out is required");
  *out = model->ckpt.model.num_classes;
  return P2G_OK;
}

p2g_status p2g_model_parameter_count(const p2g_model* model, size_t* out) {
  if (!valid(model, kModelMagic)) return invalid_handle("model");
  if (!out) return invalid_argument("out is required");
  *out = model->ckpt.params.trainable_scalars();
  return P2G_OK;
}

void p2g_model_free(p2g_model* model) {
  if (valid(model, kModelMagic)) {
    model->magic = 0;
    delete model;
  }
}

p2g_status p2g_predict(const p2g_model* model, const p2g_page* page, p2g_prediction** out) {
  if (!valid(model, kModelMagic)) return invalid_handle("model");
  if (!valid(page, kPageMagic)) return invalid_handle("page");
  if (!out) return invalid_argument("out is required");
  *out = nullptr;
  return guarded([&] {
    Page unlabeled = page->page;
    unlabeled.labels.reset();
    const auto provider = make_image_provider(model->ckpt.model);
    const PreparedPage pp =
        prepare_page(unlabeled, model->ckpt.model, sample_directional(normalized_boxes(unlabeled)), *provider);
    auto h = std::make_unique<p2g_prediction>();
    h->pred = predict(pp, model->ckpt.model, model->ckpt.params);
    h->width_px = page->page.width_px;
    h->height_px = page->page.height_px;
    *out = h.release();
  });
}

p2g_status p2g_prediction_instance_count(const p2g_prediction* pred, size_t* out) {
  if (!valid(pred, kPredMagic)) return invalid_handle("prediction");
  if (!out) return invalid_argument("out is required");
  *out = pred->pred.instances.size();
  return P2G_OK;
}

p2g_status p2g_prediction_instance(const p2g_prediction* pred, size_t index, p2g_instance* out) {
  if (!valid(pred, kPredMagic)) return invalid_handle("prediction");
  if (!out) return invalid_argument("out is required");
  if (index >= pred->pred.instances.size()) return invalid_argument("instance index out of range");
  const LayoutInstance& inst = pred->pred.instances[index];
  out->x = inst.bbox.xmin * pred->width_px;
  out->y = inst.bbox.ymin * pred->height_px;
  out->width = inst.bbox.width() * pred->width_px;
  out->height = inst.bbox.height() * pred->height_px;
  out->category = inst.category;
  out->score = inst.score;
  out->member_count = inst.members.size();
  return P2G_OK;
}

p2g_status p2g_prediction_members(const p2g_prediction* pred, size_t index, int32_t* ids, size_t capacity) {
  if (!valid(pred, kPredMagic)) return invalid_handle("prediction");
  if (index >= pred->pred.instances.size()) return invalid_argument("instance index out of range");
  const auto& members = pred->pred.instances[index].members;
  if (!ids || capacity < members.size()) return invalid_argument("member buffer too small");
  std::copy(members.begin(), members.end(), ids);
  return P2G_OK;
}

p2g_status p2g_prediction_node_classes(const p2g_prediction* pred, int32_t* classes, size_t capacity) {
  if (!valid(pred, kPredMagic)) return invalid_handle("prediction");
  const auto cls = argmax_rows(pred->pred.node_logits);
  if ((!classes && !cls.empty()) || capacity < cls.size()) return invalid_argument("class buffer too small");
  std::copy(cls.begin(), cls.end(), classes);
  return P2G_OK;
}

void p2g_prediction_free(p2g_prediction* pred) {
  if (valid(pred, kPredMagic)) {
    pred->magic = 0;
    delete pred;
  }
}

}  // extern "C"
