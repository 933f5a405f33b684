#pragma once

// Turning edge decisions into layout instances.

#include <span>
#include <vector>

#include "geometry.hpp"
#include "sampling.hpp"
#include "tensor.hpp"

namespace p2g {

struct LayoutInstance {
  std::vector<NodeId> members;  // sorted
  NormBox bbox;
  int category = 0;
  double score = 0.0;
};

/// Components sorted by smallest member; members sorted ascending.
std::vector<std::vector<NodeId>> connected_components(std::size_t n, std::span<const Edge> positive_edges);

/// bbox = min bounding rect of members; category = mode of member argmax
/// classes (ties to the lower class); score = mean member probability of it.
std::vector<LayoutInstance> decode_instances(const std::vector<std::vector<NodeId>>& components,
                                             const nn::Matrix& node_logits, std::span<const NormBox> boxes);

/// Row-wise softmax.
nn::Matrix softmax_rows(const nn::Matrix& logits);
std::vector<int> argmax_rows(const nn::Matrix& logits);

/// Edges whose positive-class probability exceeds `threshold`; 0.5 is the 2-way argmax.
std::vector<Edge> positive_edges(std::span<const Edge> edges, const nn::Matrix& edge_logits, double threshold = 0.5);

}  // namespace p2g
