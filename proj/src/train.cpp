#include "train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "errors.hpp"

namespace p2g {

using nlohmann::json;
using nn::Matrix;

json to_json(const EpochMetrics& m) {
  return json{{"epoch", m.epoch}, {"loss", m.loss}, {"node_f1", m.node_f1}, {"edge_f1", m.edge_f1}, {"lr", m.lr}};
}

nn::ParamStore initialize_for_training(const ModelConfig& cfg, std::uint64_t seed, std::span<const PreparedPage> pages) {
  nn::ParamStore params = init_model(cfg, seed);
  fit_input_normalization(params, cfg, pages);
  return params;
}

namespace {

std::vector<std::size_t> epoch_order(std::size_t n, bool shuffle, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (!shuffle) return order;
  std::mt19937_64 gen(nn::mix64(seed ^ nn::mix64(0x5eedULL + static_cast<std::uint64_t>(epoch))));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[gen() % i]);
  return order;
}

void collect_predictions(const nn::Graph& g, const ForwardOutput& out, const PreparedPage& page, double threshold,
                         std::vector<int>& node_pred, std::vector<int>& node_gold, std::vector<int>& edge_pred,
                         std::vector<int>& edge_gold) {
  const auto cls = argmax_rows(g.value(out.node_logits));
  node_pred.insert(node_pred.end(), cls.begin(), cls.end());
  node_gold.insert(node_gold.end(), page.node_targets.begin(), page.node_targets.end());
  if (!out.edge_logits.valid()) return;
  const Matrix p = softmax_rows(g.value(out.edge_logits));
  for (Eigen::Index k = 0; k < p.rows(); ++k) edge_pred.push_back(p(k, 1) > threshold ? 1 : 0);
  edge_gold.insert(edge_gold.end(), page.edge_targets.begin(), page.edge_targets.end());
}

}  // namespace

TrainResult train(std::span<const PreparedPage> pages, const ModelConfig& cfg, const TrainOptions& opts,
                  const EpochCallback& on_epoch) {
  if (pages.empty()) fail(ErrorKind::EmptyDataset, "no training pages");
  return train(pages, cfg, opts, initialize_for_training(cfg, opts.seed, pages), on_epoch);
}

TrainResult train(std::span<const PreparedPage> pages, const ModelConfig& cfg, const TrainOptions& opts,
                  nn::ParamStore params, const EpochCallback& on_epoch) {
  if (pages.empty()) fail(ErrorKind::EmptyDataset, "no training pages");
  if (opts.batch_size < 1) fail(ErrorKind::InvalidConfig, "batch_size must be >= 1");
  for (const auto& p : pages) {
    if (!p.has_labels) fail(ErrorKind::MissingLabels, "training page '" + p.page_id + "' has no gold labels");
  }
  TrainResult result{std::move(params), nn::AdamState{opts.adam, 0, {}}, {}};
  const std::size_t batch = static_cast<std::size_t>(opts.batch_size);
  const std::size_t steps_per_epoch = (pages.size() + batch - 1) / batch;
  const double warmup_steps = opts.warmup_epochs * static_cast<double>(steps_per_epoch);

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    const auto order = epoch_order(pages.size(), opts.shuffle, opts.seed, epoch);
    std::vector<int> node_pred, node_gold, edge_pred, edge_gold;
    double loss_sum = 0.0;
    double lr = opts.adam.lr;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      const double inv = 1.0 / static_cast<double>(stop - start);
      result.params.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const PreparedPage& page = pages[order[k]];
        nn::Graph g;
        const ForwardOutput out = forward(g, page, cfg, result.params);
        const nn::Var l = loss(g, out, page, opts.loss);
        batch_loss += g.value(l)(0, 0) * inv;
        g.backward(g.scale(l, inv));
        collect_predictions(g, out, page, opts.edge_threshold, node_pred, node_gold, edge_pred, edge_gold);
      }
      const double step = static_cast<double>(result.state.step + 1);
      lr = warmup_steps > 0.0 ? opts.adam.lr * std::min(1.0, step / warmup_steps) : opts.adam.lr;
      nn::adam_step(result.params, result.state, lr);
      loss_sum += batch_loss;
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.loss = loss_sum / static_cast<double>(steps_per_epoch);
    m.node_f1 = f1_scores(node_pred, node_gold, F1Mode::NodeMulticlass, cfg.num_classes).micro.f1;
    m.edge_f1 = f1_scores(edge_pred, edge_gold, F1Mode::EdgeBinary, 2).micro.f1;
    m.lr = lr;
    result.log.push_back(m);
    if (on_epoch) on_epoch(m, result.params);
  }
  return result;
}

double dataset_loss(std::span<const PreparedPage> pages, const ModelConfig& cfg, nn::ParamStore& params,
                    const LossWeights& w) {
  if (pages.empty()) fail(ErrorKind::EmptyDataset, "no pages");
  double total = 0.0;
  for (const auto& page : pages) {
    nn::Graph g;
    const ForwardOutput out = forward(g, page, cfg, params);
    total += g.value(loss(g, out, page, w))(0, 0);
  }
  return total / static_cast<double>(pages.size());
}

PagePrediction predict(const PreparedPage& page, const ModelConfig& cfg, nn::ParamStore& params,
                       double edge_threshold) {
  nn::Graph g;
  const ForwardOutput out = forward(g, page, cfg, params);
  PagePrediction pred;
  pred.node_logits = g.value(out.node_logits);
  pred.out_edges = out.out_edges;
  pred.edge_logits = out.edge_logits.valid() ? g.value(out.edge_logits) : Matrix(0, 2);
  pred.positive = positive_edges(pred.out_edges, pred.edge_logits, edge_threshold);
  std::vector<std::vector<NodeId>> components;
  if (cfg.edge_head == EdgeHeadMode::Symmetric) {
    components = connected_components(page.size(), pred.positive);
  } else {
    for (std::size_t i = 0; i < page.size(); ++i) components.push_back({static_cast<NodeId>(i)});
  }
  pred.instances = decode_instances(components, pred.node_logits, page.boxes);
  return pred;
}

std::vector<LayoutInstance> gold_instances(const Page& page) {
  if (!page.labels) fail(ErrorKind::MissingLabels, "page '" + page.page_id + "' has no gold labels");
  const auto boxes = normalized_boxes(page);
  std::vector<LayoutInstance> out;
  for (const auto& group : page.labels->groups) {
    if (group.empty()) continue;
    LayoutInstance inst;
    inst.members = group;
    std::sort(inst.members.begin(), inst.members.end());
    std::vector<NormBox> member_boxes;
    std::map<int, int> votes;
    for (NodeId id : inst.members) {
      member_boxes.push_back(boxes[id]);
      ++votes[page.labels->node_category[id]];
    }
    inst.bbox = min_bounding_rect(member_boxes);
    int best = -1;
    for (const auto& [c, v] : votes) {
      if (best < 0 || v > votes[best]) best = c;
    }
    inst.category = best;
    inst.score = 1.0;
    out.push_back(std::move(inst));
  }
  return out;
}

EvalReport evaluate(std::span<const Page> pages, std::span<const PreparedPage> prepared, const ModelConfig& cfg,
                    nn::ParamStore& params, double edge_threshold) {
  if (pages.size() != prepared.size()) fail(ErrorKind::LengthMismatch, "pages and prepared pages differ in count");
  if (pages.empty()) fail(ErrorKind::EmptyDataset, "no evaluation pages");
  EvalReport r;
  r.pages = pages.size();
  std::vector<int> node_pred, node_gold, edge_pred, edge_gold;
  std::vector<ScoredInstance> dets, golds;
  std::size_t links_total = 0, links_covered = 0;
  for (std::size_t i = 0; i < pages.size(); ++i) {
    const PreparedPage& pp = prepared[i];
    if (!pp.has_labels) fail(ErrorKind::MissingLabels, "evaluation page '" + pp.page_id + "' has no gold labels");
    const PagePrediction pred = predict(pp, cfg, params, edge_threshold);
    const auto cls = argmax_rows(pred.node_logits);
    node_pred.insert(node_pred.end(), cls.begin(), cls.end());
    node_gold.insert(node_gold.end(), pp.node_targets.begin(), pp.node_targets.end());
    const Matrix p = softmax_rows(pred.edge_logits);
    for (Eigen::Index k = 0; k < p.rows(); ++k) edge_pred.push_back(p(k, 1) > edge_threshold ? 1 : 0);
    edge_gold.insert(edge_gold.end(), pp.edge_targets.begin(), pp.edge_targets.end());
    for (const auto& inst : pred.instances) dets.push_back({i, inst.bbox, inst.category, inst.score});
    for (const auto& inst : gold_instances(pages[i])) golds.push_back({i, inst.bbox, inst.category, 1.0});

    const SamplerRecall rec = sampler_recall(pp.candidates, pages[i].labels);
    r.recall.groups_total += rec.groups_total;
    r.recall.groups_connected += rec.groups_connected;
    links_total += rec.links_total;
    links_covered += rec.links_covered;
    r.nodes += pp.size();
    r.edges += pred.out_edges.size();
  }
  r.node = f1_scores(node_pred, node_gold, F1Mode::NodeMulticlass, cfg.num_classes);
  r.edge = f1_scores(edge_pred, edge_gold, F1Mode::EdgeBinary, 2).micro;
  r.coco = coco_map(dets, golds);
  r.recall.group_connectivity =
      r.recall.groups_total > 0 ? static_cast<double>(r.recall.groups_connected) / r.recall.groups_total : 1.0;
  r.recall.links_total = links_total;
  r.recall.links_covered = links_covered;
  if (links_total > 0) r.recall.link_coverage = static_cast<double>(links_covered) / links_total;
  for (const auto& page : pages) {
    if (page.category_names.size() > r.category_names.size()) r.category_names = page.category_names;
  }
  return r;
}

namespace {

std::string class_name(const EvalReport& r, int c) {
  return c < static_cast<int>(r.category_names.size()) ? r.category_names[c] : "class_" + std::to_string(c);
}

}  // namespace

std::string format_report(const EvalReport& r) {
  std::string s;
  s += fmt::format("pages {}  nodes {}  edges {}\n", r.pages, r.nodes, r.edges);
  s += fmt::format("node_f1_micro {:.6f}\nnode_f1_macro {:.6f}\n", r.node.micro.f1, r.node.macro_f1);
  for (std::size_t c = 0; c < r.node.per_class.size(); ++c) {
    const auto& k = r.node.per_class[c];
    s += fmt::format("node_class {:<16} P {:.4f}  R {:.4f}  F1 {:.4f}  (tp {} fp {} fn {})\n",
                     class_name(r, static_cast<int>(c)), k.precision, k.recall, k.f1, k.tp, k.fp, k.fn);
  }
  s += fmt::format("edge_precision {:.6f}\nedge_recall {:.6f}\nedge_f1 {:.6f}\n", r.edge.precision, r.edge.recall,
                   r.edge.f1);
  s += fmt::format("map_50_95 {:.6f}\n", r.coco.map);
  for (std::size_t k = 0; k < r.coco.classes.size(); ++k) {
    s += fmt::format("ap {:<16} {:.4f}\n", class_name(r, r.coco.classes[k]), r.coco.class_ap[k]);
  }
  s += fmt::format("sampler_group_connectivity {:.6f}\n", r.recall.group_connectivity);
  if (r.recall.link_coverage) s += fmt::format("sampler_link_coverage {:.6f}\n", *r.recall.link_coverage);
  return s;
}

json report_to_json(const EvalReport& r) {
  json per_class = json::array();
  for (std::size_t c = 0; c < r.node.per_class.size(); ++c) {
    const auto& k = r.node.per_class[c];
    per_class.push_back({{"class", class_name(r, static_cast<int>(c))},
                         {"precision", k.precision},
                         {"recall", k.recall},
                         {"f1", k.f1},
                         {"tp", k.tp},
                         {"fp", k.fp},
                         {"fn", k.fn}});
  }
  json ap = json::object();
  for (std::size_t k = 0; k < r.coco.classes.size(); ++k) ap[class_name(r, r.coco.classes[k])] = r.coco.class_ap[k];
  json recall{{"group_connectivity", r.recall.group_connectivity},
              {"groups_total", r.recall.groups_total},
              {"groups_connected", r.recall.groups_connected}};
  if (r.recall.link_coverage) recall["link_coverage"] = *r.recall.link_coverage;
  return json{{"pages", r.pages},
              {"nodes", r.nodes},
              {"edges", r.edges},
              {"node", {{"micro_f1", r.node.micro.f1}, {"macro_f1", r.node.macro_f1}, {"per_class", per_class}}},
              {"edge", {{"precision", r.edge.precision}, {"recall", r.edge.recall}, {"f1", r.edge.f1}}},
              {"map_50_95", r.coco.map},
              {"class_ap", ap},
              {"sampler_recall", recall}};
}

}  // namespace p2g
