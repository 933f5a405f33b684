#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "errors.hpp"

namespace p2g {

using nn::Matrix;
using nn::Var;

void ModelConfig::validate() const {
  if (gnn == "gravnet") {
    fail(ErrorKind::InvalidConfig,
         "gnn 'gravnet' is not implemented: it scored below the DGCNN/EdgeConv variant in layout ablations; use 'dgcnn'");
  }
  if (gnn != "dgcnn") fail(ErrorKind::InvalidConfig, "unknown gnn '" + gnn + "' (expected 'dgcnn')");
  if (hidden_dim <= 0) fail(ErrorKind::InvalidConfig, "hidden_dim must be positive");
  if (gnn_layers < 1) fail(ErrorKind::InvalidConfig, "gnn_layers must be at least 1");
  if (num_classes < 2) fail(ErrorKind::InvalidConfig, "num_classes must be at least 2");
  if (static_cast<int>(graph_refresh.size()) != gnn_layers) {
    fail(ErrorKind::InvalidConfig, "graph_refresh needs one entry per gnn layer (" + std::to_string(gnn_layers) +
                                       "), got " + std::to_string(graph_refresh.size()));
  }
  if (dynamic_k < 1) fail(ErrorKind::InvalidConfig, "dynamic_k must be at least 1");
  if (roi_output < 1 || roi_sampling_ratio < 1) fail(ErrorKind::InvalidConfig, "ROIAlign dims must be positive");
  if (image_size < 1) fail(ErrorKind::InvalidConfig, "image_size must be positive");
  if (image_channels != 1 && image_channels != 3) fail(ErrorKind::InvalidConfig, "image_channels must be 1 or 3");
  edge_features.validate();
}

NodeInputShape ModelConfig::node_input_shape() const {
  NodeInputShape s;
  s.layout_width = layout_width(box_info);
  s.image_width = image_provider == ImageProviderKind::None
                      ? 0
                      : static_cast<std::size_t>(roi_output) * roi_output * image_channels;
  return s;
}

std::size_t ModelConfig::edge_input_width() const {
  return p2g::edge_input_width(edge_features, static_cast<std::size_t>(hidden_dim),
                               static_cast<std::size_t>(num_classes));
}

std::unique_ptr<ImageFeatureProvider> make_image_provider(const ModelConfig& cfg) {
  if (cfg.image_provider == ImageProviderKind::RawPixel) {
    return std::make_unique<RawPixelProvider>(cfg.image_size, cfg.image_channels);
  }
  return std::make_unique<NullProvider>();
}

std::vector<std::int32_t> edge_gold(const GoldLabels& gold, std::size_t n_nodes, std::span<const Edge> out_edges,
                                    EdgeHeadMode mode) {
  const auto group = gold.group_of(n_nodes);
  std::set<std::pair<int, int>> links(gold.links.begin(), gold.links.end());
  std::vector<std::int32_t> out;
  out.reserve(out_edges.size());
  for (const auto& e : out_edges) {
    if (mode == EdgeHeadMode::Symmetric) {
      out.push_back(group[e.a] >= 0 && group[e.a] == group[e.b] ? 1 : 0);
    } else {
      out.push_back(links.contains({group[e.a], group[e.b]}) ? 1 : 0);
    }
  }
  return out;
}

PreparedPage prepare_page(const Page& page, const ModelConfig& cfg, const SampledGraph& candidates,
                          const ImageFeatureProvider& provider) {
  cfg.validate();
  PreparedPage p;
  p.page_id = page.page_id;
  p.boxes = normalized_boxes(page);
  const std::size_t n = p.boxes.size();
  if (candidates.n_nodes != n) fail(ErrorKind::ShapeMismatch, "candidate graph built for a different node count");
  const NodeInputShape shape = cfg.node_input_shape();

  FeatureMap fmap;
  if (shape.image_width > 0) fmap = provider.feature_map(page);
  p.layout.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(shape.layout_width));
  p.node_input.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(shape.total()));
  for (std::size_t i = 0; i < n; ++i) {
    const auto lv = layout_vector(p.boxes[i], cfg.box_info);
    std::vector<double> img;
    if (shape.image_width > 0) img = roi_align(fmap, p.boxes[i], cfg.roi_output, cfg.roi_sampling_ratio);
    const auto in = assemble_node_input(lv, img, shape);
    for (std::size_t c = 0; c < lv.size(); ++c) p.layout(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = lv[c];
    for (std::size_t c = 0; c < in.size(); ++c) p.node_input(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = in[c];
  }

  p.candidates = candidates;
  const auto adj = candidates.adjacency();
  // code_of[i][k]: reading-order rank of adj[i][k] among i's neighbors.
  std::vector<std::vector<int>> code_of(n);
  for (std::size_t i = 0; i < n; ++i) code_of[i] = reading_order_codes(static_cast<NodeId>(i), adj[i], p.boxes);
  auto code = [&](NodeId s, NodeId o) {
    const auto& list = adj[s];
    const auto it = std::lower_bound(list.begin(), list.end(), o);
    return code_of[s][static_cast<std::size_t>(it - list.begin())];
  };

  const std::size_t static_w = edge_static_width(cfg.edge_features);
  p.oriented.reserve(2 * candidates.edges.size());
  for (const auto& e : candidates.edges) {
    p.oriented.push_back({e.a, e.b});
    p.oriented.push_back({e.b, e.a});
  }
  p.edge_static.resize(static_cast<Eigen::Index>(p.oriented.size()), static_cast<Eigen::Index>(static_w));
  if (static_w > 0) {
    for (std::size_t r = 0; r < p.oriented.size(); ++r) {
      const auto [s, o] = p.oriented[r];
      const auto f = edge_static_features(p.boxes[s], p.boxes[o], code(s, o), cfg.edge_features);
      for (std::size_t c = 0; c < static_w; ++c) p.edge_static(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = f[c];
    }
    if (cfg.compress_rel_inputs && cfg.edge_features.use_rel) {
      const auto first = static_cast<Eigen::Index>(cfg.edge_features.use_rope ? cfg.edge_features.rope_dim : 0);
      auto block = p.edge_static.middleCols(first, 18).array();
      block = block.sign() * block.abs().log1p();
    }
  }

  if (page.labels) {
    p.has_labels = true;
    p.node_targets.assign(page.labels->node_category.begin(), page.labels->node_category.end());
    for (auto t : p.node_targets) {
      if (t < 0 || t >= cfg.num_classes) {
        fail(ErrorKind::ConfigMismatch, "page '" + page.page_id + "' has category " + std::to_string(t) +
                                            " but the model has " + std::to_string(cfg.num_classes) + " classes");
      }
    }
    const std::vector<Edge>& outs = cfg.edge_head == EdgeHeadMode::Symmetric ? candidates.edges : p.oriented;
    p.edge_targets = edge_gold(*page.labels, n, outs, cfg.edge_head);
  }
  return p;
}

PreparedPage prepare_page(const Page& page, const ModelConfig& cfg, const SamplerConfig& sampler) {
  const auto boxes = normalized_boxes(page);
  const auto provider = make_image_provider(cfg);
  return prepare_page(page, cfg, run_sampler(boxes, sampler), *provider);
}

namespace {

std::string layer_prefix(int l) { return "gnn." + std::to_string(l); }

void add_linear(nn::ParamStore& ps, const std::string& prefix, std::size_t in, std::size_t out) {
  ps.add(prefix + ".weight", {in, out}, nn::Init::Glorot);
  ps.add(prefix + ".bias", {out}, nn::Init::Zeros);
}

Var linear_layer(nn::Graph& g, nn::ParamStore& ps, const std::string& prefix, Var x) {
  return g.linear(x, g.param(ps.at(prefix + ".weight")), g.param(ps.at(prefix + ".bias")));
}

// Linear -> ReLU -> Linear.
Var mlp2(nn::Graph& g, nn::ParamStore& ps, const std::string& first, const std::string& second, Var x) {
  return linear_layer(g, ps, second, g.relu(linear_layer(g, ps, first, x)));
}

Matrix standardize(const Matrix& raw, const nn::ParamStore& ps, const std::string& which) {
  const auto& mean = ps.at("norm." + which + "_mean").value;
  const auto& stdev = ps.at("norm." + which + "_std").value;
  Matrix out = raw;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    out.col(c).array() = (out.col(c).array() - mean.data[c]) / stdev.data[c];
  }
  return out;
}

}  // namespace

nn::ParamStore init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  nn::ParamStore ps(seed);
  const auto h = static_cast<std::size_t>(cfg.hidden_dim);
  const auto c = static_cast<std::size_t>(cfg.num_classes);
  const std::size_t in = cfg.node_input_shape().total();
  add_linear(ps, "fusion.fc1", in, h);
  add_linear(ps, "fusion.fc2", h, h);
  for (int l = 0; l < cfg.gnn_layers; ++l) {
    add_linear(ps, layer_prefix(l) + ".fc1", 2 * h, h);
    add_linear(ps, layer_prefix(l) + ".fc2", h, h);
  }
  add_linear(ps, "node_head.fc", h, h);
  add_linear(ps, "node_head.out", h, c);
  add_linear(ps, "edge_head.fc", cfg.edge_input_width(), h);
  add_linear(ps, "edge_head.out", h, 2);

  ps.add("norm.node_mean", {in}, nn::Init::Zeros, false);
  ps.add("norm.node_std", {in}, nn::Init::Ones, false);
  const std::size_t sw = edge_static_width(cfg.edge_features);
  if (sw > 0) {
    ps.add("norm.edge_mean", {sw}, nn::Init::Zeros, false);
    ps.add("norm.edge_std", {sw}, nn::Init::Ones, false);
  }
  return ps;
}

void fit_input_normalization(nn::ParamStore& params, const ModelConfig& cfg, std::span<const PreparedPage> pages) {
  if (!cfg.normalize_inputs) return;
  auto fit = [&](const std::string& which, auto rows_of) {
    auto& mean = params.at("norm." + which + "_mean").value;
    auto& stdev = params.at("norm." + which + "_std").value;
    const std::size_t w = mean.numel();
    std::vector<double> sum(w, 0.0), sq(w, 0.0);
    double count = 0;
    for (const auto& p : pages) {
      const Matrix& m = rows_of(p);
      if (m.rows() == 0) continue;
      if (static_cast<std::size_t>(m.cols()) != w) fail(ErrorKind::ShapeMismatch, "normalization width mismatch");
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < w; ++c) {
          sum[c] += m(r, static_cast<Eigen::Index>(c));
        }
      }
      count += static_cast<double>(m.rows());
    }
    if (count == 0) return;
    for (std::size_t c = 0; c < w; ++c) mean.data[c] = sum[c] / count;
    for (const auto& p : pages) {
      const Matrix& m = rows_of(p);
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < w; ++c) {
          const double d = m(r, static_cast<Eigen::Index>(c)) - mean.data[c];
          sq[c] += d * d;
        }
      }
    }
    for (std::size_t c = 0; c < w; ++c) {
      const double sd = std::sqrt(sq[c] / count);
      stdev.data[c] = sd > 1e-6 ? sd : 1.0;
    }
  };
  fit("node", [](const PreparedPage& p) -> const Matrix& { return p.node_input; });
  if (params.contains("norm.edge_mean")) {
    fit("edge", [](const PreparedPage& p) -> const Matrix& { return p.edge_static; });
  }
}

Var edgeconv_layer(nn::Graph& g, Var x, const SampledGraph& graph, const EdgeConvWeights& w) {
  const auto n = static_cast<std::int32_t>(g.value(x).rows());
  if (graph.n_nodes != static_cast<std::size_t>(n)) fail(ErrorKind::ShapeMismatch, "edgeconv graph/node count mismatch");
  std::vector<std::int32_t> target, source;
  target.reserve(n + 2 * graph.edges.size());
  source.reserve(n + 2 * graph.edges.size());
  for (std::int32_t i = 0; i < n; ++i) {
    target.push_back(i);
    source.push_back(i);
  }
  for (const auto& e : graph.edges) {
    target.push_back(e.a);
    source.push_back(e.b);
    target.push_back(e.b);
    source.push_back(e.a);
  }
  Var xi = g.gather_rows(x, target);
  Var xj = g.gather_rows(x, source);
  const Var parts[] = {xi, g.sub(xj, xi)};
  Var hidden = g.relu(g.linear(g.concat_cols(parts), w.w1, w.b1));
  Var msg = g.linear(hidden, w.w2, w.b2);
  return g.segment_max(msg, std::move(target), n);
}

Var residual_max(nn::Graph& g, Var x, Var y, bool enabled) {
  if (!enabled) return y;
  const Var ops[] = {x, y};
  return g.rowwise_max(ops);
}

SampledGraph refresh_graph(const Matrix& embeddings, const Matrix& layout, const SampledGraph& geometric,
                           GraphRefresh mode, int k) {
  if (mode == GraphRefresh::Static) return geometric;
  if (embeddings.rows() != layout.rows()) fail(ErrorKind::ShapeMismatch, "refresh_graph: row counts differ");
  const Eigen::Index n = embeddings.rows();
  const Eigen::Index d = embeddings.cols() + layout.cols();
  std::vector<double> points(static_cast<std::size_t>(n * d));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < embeddings.cols(); ++c) points[i * d + c] = embeddings(i, c);
    for (Eigen::Index c = 0; c < layout.cols(); ++c) points[i * d + embeddings.cols() + c] = layout(i, c);
  }
  SampledGraph dynamic = knn_graph(points, static_cast<std::size_t>(d), k);
  dynamic.n_nodes = static_cast<std::size_t>(n);
  if (mode == GraphRefresh::DynamicKnn) return dynamic;
  return graph_union(geometric, dynamic);
}

ForwardOutput forward(nn::Graph& g, const PreparedPage& page, const ModelConfig& cfg, nn::ParamStore& params) {
  ForwardOutput out;
  const Matrix node_in = cfg.normalize_inputs ? standardize(page.node_input, params, "node") : page.node_input;
  Var h = mlp2(g, params, "fusion.fc1", "fusion.fc2", g.constant(node_in));

  for (int l = 0; l < cfg.gnn_layers; ++l) {
    SampledGraph graph = refresh_graph(g.value(h), page.layout, page.candidates, cfg.graph_refresh[l], cfg.dynamic_k);
    const std::string pre = layer_prefix(l);
    EdgeConvWeights w{g.param(params.at(pre + ".fc1.weight")), g.param(params.at(pre + ".fc1.bias")),
                      g.param(params.at(pre + ".fc2.weight")), g.param(params.at(pre + ".fc2.bias"))};
    Var y = edgeconv_layer(g, h, graph, w);
    h = residual_max(g, h, y, cfg.gnn_residual);
    out.layer_graphs.push_back(std::move(graph));
  }
  out.embeddings = h;
  out.node_logits = mlp2(g, params, "node_head.fc", "node_head.out", h);

  out.out_edges = cfg.edge_head == EdgeHeadMode::Symmetric ? page.candidates.edges : page.oriented;
  if (page.oriented.empty()) return out;

  std::vector<std::int32_t> src, dst;
  src.reserve(page.oriented.size());
  dst.reserve(page.oriented.size());
  for (const auto& e : page.oriented) {
    src.push_back(e.a);
    dst.push_back(e.b);
  }
  std::vector<Var> parts;
  const auto& ef = cfg.edge_features;
  if (ef.use_pair) {
    parts.push_back(g.gather_rows(h, src));
    parts.push_back(g.gather_rows(h, dst));
  }
  if (edge_static_width(ef) > 0) {
    parts.push_back(g.constant(cfg.normalize_inputs ? standardize(page.edge_static, params, "edge") : page.edge_static));
  }
  if (ef.use_node_class) {
    parts.push_back(g.gather_rows(out.node_logits, src));
    parts.push_back(g.gather_rows(out.node_logits, dst));
  }
  Var oriented_logits = mlp2(g, params, "edge_head.fc", "edge_head.out", g.concat_cols(parts));

  if (cfg.edge_head == EdgeHeadMode::Directed) {
    out.edge_logits = oriented_logits;
  } else {
    std::vector<std::int32_t> fwd, bwd;
    for (std::size_t k = 0; k < page.candidates.edges.size(); ++k) {
      fwd.push_back(static_cast<std::int32_t>(2 * k));
      bwd.push_back(static_cast<std::int32_t>(2 * k + 1));
    }
    out.edge_logits = g.scale(g.add(g.gather_rows(oriented_logits, std::move(fwd)),
                                    g.gather_rows(oriented_logits, std::move(bwd))),
                              0.5);
  }
  return out;
}

Var loss(nn::Graph& g, const ForwardOutput& out, const PreparedPage& page, const LossWeights& w) {
  if (!page.has_labels) fail(ErrorKind::MissingLabels, "page '" + page.page_id + "' has no gold labels");
  Var total = g.softmax_cross_entropy(out.node_logits, page.node_targets);
  if (out.edge_logits.valid() && !page.edge_targets.empty()) {
    const double weights[] = {1.0, w.pos_weight};
    Var edge = g.softmax_cross_entropy(out.edge_logits, page.edge_targets, weights);
    total = g.add(total, g.scale(edge, w.edge_weight));
  }
  return total;
}

}  // namespace p2g
