#pragma once

// Sparse candidate-edge construction over text boxes: the four-direction
// nearest-box sampler, plus KNN and beta-skeleton baselines.

#include <compare>
#include <optional>
#include <span>
#include <vector>

#include "geometry.hpp"

namespace p2g {

struct Edge {
  NodeId a = 0;
  NodeId b = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Undirected edges stored canonically: a < b, sorted, unique.
struct SampledGraph {
  std::size_t n_nodes = 0;
  std::vector<Edge> edges;

  bool contains(NodeId i, NodeId j) const;
  /// Sorted neighbor lists.
  std::vector<std::vector<NodeId>> adjacency() const;
  bool operator==(const SampledGraph&) const = default;
};

/// Sorts, dedups and orients pairs; drops self-loops.
SampledGraph canonicalize(std::size_t n_nodes, std::vector<Edge> edges);
SampledGraph graph_union(const SampledGraph& a, const SampledGraph& b);

struct DirectionalConfig {
  int horizontal_k = 1;
  int vertical_k = 2;
  double band_overlap_min = 0.0;
};

enum class SamplerKind { Directional, Knn, BetaSkeleton };

struct SamplerConfig {
  SamplerKind kind = SamplerKind::Directional;
  DirectionalConfig directional;
  int knn_k = 4;
  double beta = 1.0;
};

SampledGraph sample_directional(std::span<const NormBox> boxes, const DirectionalConfig& cfg = {});
SampledGraph sample_knn(std::span<const NormBox> boxes, int k);
/// kNN over arbitrary row vectors (row-major, `dim` values per point).
SampledGraph knn_graph(std::span<const double> points, std::size_t dim, int k);
SampledGraph sample_beta_skeleton(std::span<const NormBox> boxes, double beta);
SampledGraph run_sampler(std::span<const NormBox> boxes, const SamplerConfig& cfg);

struct SamplerRecall {
  double group_connectivity = 0.0;
  std::optional<double> link_coverage;  // empty when the labels carry no links
  std::size_t groups_total = 0;
  std::size_t groups_connected = 0;
  std::size_t links_total = 0;
  std::size_t links_covered = 0;
};

SamplerRecall sampler_recall(const SampledGraph& graph, const std::optional<GoldLabels>& gold);

/// Gold groups whose induced subgraph is split; used to draw missing pairs.
std::vector<std::size_t> disconnected_groups(const SampledGraph& graph, const GoldLabels& gold);

}  // namespace p2g
