#pragma once

// Graph network over sampled text-box graphs: fusion MLP, stacked EdgeConv
// layers with max-residual updates and optional graph refresh, then node and
// edge classification heads.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "autodiff.hpp"
#include "features.hpp"
#include "geometry.hpp"
#include "sampling.hpp"
#include "tensor.hpp"

namespace p2g {

enum class ImageProviderKind { None, RawPixel };
enum class GraphRefresh { Static, DynamicKnn, Union };
enum class EdgeHeadMode { Symmetric, Directed };

struct ModelConfig {
  BoxInfoMode box_info = BoxInfoMode::Eight;
  ImageProviderKind image_provider = ImageProviderKind::None;
  int image_size = 112;
  int image_channels = 1;
  int roi_output = 3;
  int roi_sampling_ratio = 2;
  int hidden_dim = 64;
  int gnn_layers = 2;
  std::vector<GraphRefresh> graph_refresh{GraphRefresh::Static, GraphRefresh::Union};
  int dynamic_k = 6;
  bool gnn_residual = true;
  std::string gnn = "dgcnn";
  EdgeFeatureConfig edge_features;
  int num_classes = 5;
  EdgeHeadMode edge_head = EdgeHeadMode::Symmetric;
  bool normalize_inputs = true;
  /// sign(x)*log1p(|x|) on the relationship block of the static edge inputs.
  bool compress_rel_inputs = false;

  void validate() const;
  NodeInputShape node_input_shape() const;
  std::size_t edge_input_width() const;
  bool operator==(const ModelConfig&) const = default;
};

std::unique_ptr<ImageFeatureProvider> make_image_provider(const ModelConfig& cfg);

/// Per-page tensors that do not depend on model parameters.
struct PreparedPage {
  std::string page_id;
  std::vector<NormBox> boxes;
  nn::Matrix layout;      // [n, 4|8]
  nn::Matrix node_input;  // [n, image + layout], before normalization
  SampledGraph candidates;
  /// Edge-head rows. Candidate k contributes rows 2k = (a->b) and 2k+1 = (b->a).
  std::vector<Edge> oriented;
  nn::Matrix edge_static;  // [oriented, static width], before normalization
  bool has_labels = false;
  std::vector<std::int32_t> node_targets;
  /// One target per output edge (candidate for symmetric heads, oriented row for directed).
  std::vector<std::int32_t> edge_targets;
  std::size_t size() const { return boxes.size(); }
};

PreparedPage prepare_page(const Page& page, const ModelConfig& cfg, const SampledGraph& candidates,
                          const ImageFeatureProvider& provider);
PreparedPage prepare_page(const Page& page, const ModelConfig& cfg, const SamplerConfig& sampler);

/// Gold edge label for grouping (same group) or linking (ordered pair crosses a link).
std::vector<std::int32_t> edge_gold(const GoldLabels& gold, std::size_t n_nodes, std::span<const Edge> out_edges,
                                    EdgeHeadMode mode);

nn::ParamStore init_model(const ModelConfig& cfg, std::uint64_t seed);

/// Fits the per-column standardization buffers on training pages.
void fit_input_normalization(nn::ParamStore& params, const ModelConfig& cfg, std::span<const PreparedPage> pages);

struct EdgeConvWeights {
  nn::Var w1, b1, w2, b2;
};

/// out_i = max over j in N(i) + {i} of MLP(x_i ++ (x_j - x_i)).
nn::Var edgeconv_layer(nn::Graph& g, nn::Var x, const SampledGraph& graph, const EdgeConvWeights& w);

/// Elementwise max(x, y), or y alone when the residual is disabled.
nn::Var residual_max(nn::Graph& g, nn::Var x, nn::Var y, bool enabled = true);

SampledGraph refresh_graph(const nn::Matrix& embeddings, const nn::Matrix& layout, const SampledGraph& geometric,
                           GraphRefresh mode, int k);

struct ForwardOutput {
  nn::Var node_logits;           // [n, c]
  nn::Var edge_logits;           // [|out_edges|, 2]; invalid when there are no candidates
  std::vector<Edge> out_edges;   // canonical pairs (symmetric) or ordered (src, dst) pairs (directed)
  std::vector<SampledGraph> layer_graphs;
  nn::Var embeddings;            // final node embeddings [n, h]
};

ForwardOutput forward(nn::Graph& g, const PreparedPage& page, const ModelConfig& cfg, nn::ParamStore& params);

struct LossWeights {
  double edge_weight = 1.0;  // lambda
  double pos_weight = 1.0;   // class weight of positive edges
};

nn::Var loss(nn::Graph& g, const ForwardOutput& out, const PreparedPage& page, const LossWeights& w = {});

}  // namespace p2g
