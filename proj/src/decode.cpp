#include "decode.hpp"

#include <algorithm>
#include <numeric>

#include "errors.hpp"

namespace p2g {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<int> rank_;
};

}  // namespace

std::vector<std::vector<NodeId>> connected_components(std::size_t n, std::span<const Edge> positive_edges) {
  DisjointSets sets(n);
  for (const auto& e : positive_edges) {
    if (e.a < 0 || e.b < 0 || static_cast<std::size_t>(e.a) >= n || static_cast<std::size_t>(e.b) >= n) {
      fail(ErrorKind::ShapeMismatch, "edge endpoint outside [0, n)");
    }
    sets.unite(static_cast<std::size_t>(e.a), static_cast<std::size_t>(e.b));
  }
  // Iterating ids in order makes each component's first member its smallest.
  std::vector<int> slot(n, -1);
  std::vector<std::vector<NodeId>> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(out.size());
      out.emplace_back();
    }
    out[slot[root]].push_back(static_cast<NodeId>(i));
  }
  return out;
}

nn::Matrix softmax_rows(const nn::Matrix& logits) {
  nn::Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

std::vector<int> argmax_rows(const nn::Matrix& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

std::vector<LayoutInstance> decode_instances(const std::vector<std::vector<NodeId>>& components,
                                             const nn::Matrix& node_logits, std::span<const NormBox> boxes) {
  const nn::Matrix probs = softmax_rows(node_logits);
  const std::vector<int> cls = argmax_rows(node_logits);
  const auto n_classes = static_cast<std::size_t>(node_logits.cols());
  std::vector<LayoutInstance> out;
  out.reserve(components.size());
  for (const auto& comp : components) {
    if (comp.empty()) continue;
    LayoutInstance inst;
    inst.members = comp;
    std::sort(inst.members.begin(), inst.members.end());
    std::vector<NormBox> member_boxes;
    std::vector<int> votes(n_classes, 0);
    for (NodeId id : inst.members) {
      member_boxes.push_back(boxes[id]);
      ++votes[cls[id]];
    }
    inst.bbox = min_bounding_rect(member_boxes);
    inst.category = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    double s = 0.0;
    for (NodeId id : inst.members) s += probs(id, inst.category);
    inst.score = s / static_cast<double>(inst.members.size());
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<Edge> positive_edges(std::span<const Edge> edges, const nn::Matrix& edge_logits, double threshold) {
  if (static_cast<Eigen::Index>(edges.size()) != edge_logits.rows()) {
    fail(ErrorKind::LengthMismatch, "one logit row per edge required");
  }
  std::vector<Edge> out;
  const nn::Matrix p = softmax_rows(edge_logits);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (p(static_cast<Eigen::Index>(k), 1) > threshold) out.push_back(edges[k]);
  }
  return out;
}

}  // namespace p2g
