#include "sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "errors.hpp"

namespace p2g {

bool SampledGraph::contains(NodeId i, NodeId j) const {
  const Edge e = i < j ? Edge{i, j} : Edge{j, i};
  return std::binary_search(edges.begin(), edges.end(), e);
}

std::vector<std::vector<NodeId>> SampledGraph::adjacency() const {
  std::vector<std::vector<NodeId>> adj(n_nodes);
  for (const auto& e : edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return adj;
}

SampledGraph canonicalize(std::size_t n_nodes, std::vector<Edge> edges) {
  std::vector<Edge> out;
  out.reserve(edges.size());
  for (auto e : edges) {
    if (e.a == e.b) continue;
    if (e.a > e.b) std::swap(e.a, e.b);
    out.push_back(e);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return SampledGraph{n_nodes, std::move(out)};
}

SampledGraph graph_union(const SampledGraph& a, const SampledGraph& b) {
  std::vector<Edge> all = a.edges;
  all.insert(all.end(), b.edges.begin(), b.edges.end());
  return canonicalize(std::max(a.n_nodes, b.n_nodes), std::move(all));
}

namespace {

// Ranking key for one directional candidate: edge-to-edge gap, then center
// distance, then id.
struct Candidate {
  double gap;
  double center_dist;
  NodeId id;
  bool operator<(const Candidate& o) const {
    return std::tie(gap, center_dist, id) < std::tie(o.gap, o.center_dist, o.id);
  }
};

// Keeps the k smallest candidates seen so far, sorted.
class TopK {
 public:
  explicit TopK(int k) : k_(static_cast<std::size_t>(k)) { items_.reserve(k_ + 1); }

  void offer(const Candidate& c) {
    if (items_.size() == k_ && !(c < items_.back())) return;
    items_.insert(std::upper_bound(items_.begin(), items_.end(), c), c);
    if (items_.size() > k_) items_.pop_back();
  }
  const std::vector<Candidate>& items() const { return items_; }

 private:
  std::size_t k_;
  std::vector<Candidate> items_;
};

enum class Axis { Horizontal, Vertical };

// Picks, for every node, the nearest boxes on both sides along `axis` among
// boxes whose perpendicular interval overlaps it.
void directional_pass(std::span<const NormBox> boxes, Axis axis, int k, double band_min, std::vector<Edge>& out) {
  const std::size_t n = boxes.size();
  // Perpendicular extent: y-interval for horizontal search, x-interval for vertical.
  auto perp_lo = [&](std::size_t i) { return axis == Axis::Horizontal ? boxes[i].ymin : boxes[i].xmin; };
  auto perp_hi = [&](std::size_t i) { return axis == Axis::Horizontal ? boxes[i].ymax : boxes[i].xmax; };
  auto perp_len = [&](std::size_t i) { return perp_hi(i) - perp_lo(i); };
  auto along_lo = [&](std::size_t i) { return axis == Axis::Horizontal ? boxes[i].xmin : boxes[i].ymin; };
  auto along_hi = [&](std::size_t i) { return axis == Axis::Horizontal ? boxes[i].xmax : boxes[i].ymax; };
  auto along_ctr = [&](std::size_t i) { return axis == Axis::Horizontal ? boxes[i].xctr() : boxes[i].yctr(); };

  std::vector<std::size_t> by_lo(n);
  std::iota(by_lo.begin(), by_lo.end(), 0);
  std::stable_sort(by_lo.begin(), by_lo.end(), [&](std::size_t a, std::size_t b) { return perp_lo(a) < perp_lo(b); });
  std::vector<double> sorted_lo(n);
  for (std::size_t r = 0; r < n; ++r) sorted_lo[r] = perp_lo(by_lo[r]);

  for (std::size_t i = 0; i < n; ++i) {
    TopK before(k), after(k);
    // Only boxes starting before i ends can overlap it.
    const auto end = std::lower_bound(sorted_lo.begin(), sorted_lo.end(), perp_hi(i)) - sorted_lo.begin();
    for (std::ptrdiff_t r = 0; r < end; ++r) {
      const std::size_t j = by_lo[r];
      if (j == i || perp_hi(j) <= perp_lo(i)) continue;
      const double overlap = interval_overlap_1d({perp_lo(i), perp_hi(i)}, {perp_lo(j), perp_hi(j)});
      if (!(overlap > band_min * std::min(perp_len(i), perp_len(j)))) continue;
      const double cd = center_distance(boxes[i], boxes[j]);
      if (along_ctr(j) < along_ctr(i)) {
        before.offer({std::max(0.0, along_lo(i) - along_hi(j)), cd, static_cast<NodeId>(j)});
      } else if (along_ctr(j) > along_ctr(i)) {
        after.offer({std::max(0.0, along_lo(j) - along_hi(i)), cd, static_cast<NodeId>(j)});
      }
    }
    for (const auto& c : before.items()) out.push_back({static_cast<NodeId>(i), c.id});
    for (const auto& c : after.items()) out.push_back({static_cast<NodeId>(i), c.id});
  }
}

}  // namespace

SampledGraph sample_directional(std::span<const NormBox> boxes, const DirectionalConfig& cfg) {
  if (cfg.horizontal_k < 1 || cfg.vertical_k < 1) {
    fail(ErrorKind::InvalidConfig, "directional sampler needs horizontal_k >= 1 and vertical_k >= 1");
  }
  if (!(cfg.band_overlap_min >= 0.0 && cfg.band_overlap_min <= 1.0)) {
    fail(ErrorKind::InvalidConfig, "band_overlap_min must lie in [0,1]");
  }
  std::vector<Edge> edges;
  directional_pass(boxes, Axis::Horizontal, cfg.horizontal_k, cfg.band_overlap_min, edges);
  directional_pass(boxes, Axis::Vertical, cfg.vertical_k, cfg.band_overlap_min, edges);
  return canonicalize(boxes.size(), std::move(edges));
}

SampledGraph knn_graph(std::span<const double> points, std::size_t dim, int k) {
  if (k < 1) fail(ErrorKind::InvalidConfig, "knn needs k >= 1");
  if (dim == 0 || points.size() % dim != 0) fail(ErrorKind::ShapeMismatch, "knn point buffer not a multiple of dim");
  const std::size_t n = points.size() / dim;
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k), n == 0 ? 0 : n - 1);
  std::vector<Edge> edges;
  edges.reserve(n * keep);
  std::vector<std::pair<double, NodeId>> dist;
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        const double diff = points[i * dim + c] - points[j * dim + c];
        d2 += diff * diff;
      }
      dist.emplace_back(d2, static_cast<NodeId>(j));
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(keep), dist.end());
    for (std::size_t r = 0; r < keep; ++r) edges.push_back({static_cast<NodeId>(i), dist[r].second});
  }
  return canonicalize(n, std::move(edges));
}

SampledGraph sample_knn(std::span<const NormBox> boxes, int k) {
  std::vector<double> centers;
  centers.reserve(boxes.size() * 2);
  for (const auto& b : boxes) {
    centers.push_back(b.xctr());
    centers.push_back(b.yctr());
  }
  return knn_graph(centers, 2, k);
}

SampledGraph sample_beta_skeleton(std::span<const NormBox> boxes, double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    fail(ErrorKind::InvalidBeta, "beta must lie in (0, 1], got " + std::to_string(beta));
  }
  const std::size_t n = boxes.size();
  std::vector<double> cx(n), cy(n);
  for (std::size_t i = 0; i < n; ++i) {
    cx[i] = boxes[i].xctr();
    cy[i] = boxes[i].yctr();
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = cx[j] - cx[i];
      const double dy = cy[j] - cy[i];
      const double d2 = dx * dx + dy * dy;
      if (d2 == 0.0) {
        edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
        continue;
      }
      // Lune: intersection of two disks of radius d/(2 beta) whose boundaries
      // pass through both endpoints. Their centers sit on the bisector.
      const double r2 = d2 / (4.0 * beta * beta);
      const double offset = std::sqrt(std::max(0.0, r2 - d2 / 4.0));
      const double len = std::sqrt(d2);
      const double nx = -dy / len;
      const double ny = dx / len;
      const double mx = 0.5 * (cx[i] + cx[j]);
      const double my = 0.5 * (cy[i] + cy[j]);
      const double c1x = mx + offset * nx, c1y = my + offset * ny;
      const double c2x = mx - offset * nx, c2y = my - offset * ny;
      // Points within a relative hair of the boundary count as outside.
      const double limit = r2 * (1.0 - 1e-12);
      bool blocked = false;
      for (std::size_t m = 0; m < n && !blocked; ++m) {
        if (m == i || m == j) continue;
        const double a = (cx[m] - c1x) * (cx[m] - c1x) + (cy[m] - c1y) * (cy[m] - c1y);
        const double b = (cx[m] - c2x) * (cx[m] - c2x) + (cy[m] - c2y) * (cy[m] - c2y);
        blocked = a < limit && b < limit;
      }
      if (!blocked) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
    }
  }
  return canonicalize(n, std::move(edges));
}

SampledGraph run_sampler(std::span<const NormBox> boxes, const SamplerConfig& cfg) {
  switch (cfg.kind) {
    case SamplerKind::Directional: return sample_directional(boxes, cfg.directional);
    case SamplerKind::Knn: return sample_knn(boxes, cfg.knn_k);
    case SamplerKind::BetaSkeleton: return sample_beta_skeleton(boxes, cfg.beta);
  }
  return SampledGraph{boxes.size(), {}};
}

namespace {

bool group_connected(const std::vector<NodeId>& members, const std::vector<std::vector<NodeId>>& adj,
                     const std::vector<int>& group_of, int g) {
  if (members.size() <= 1) return true;
  std::vector<NodeId> stack{members.front()};
  std::vector<char> seen(adj.size(), 0);
  seen[members.front()] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : adj[u]) {
      if (seen[v] || group_of[v] != g) continue;
      seen[v] = 1;
      ++reached;
      stack.push_back(v);
    }
  }
  return reached == members.size();
}

}  // namespace

std::vector<std::size_t> disconnected_groups(const SampledGraph& graph, const GoldLabels& gold) {
  const auto adj = graph.adjacency();
  const auto group_of = gold.group_of(graph.n_nodes);
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < gold.groups.size(); ++g) {
    if (!group_connected(gold.groups[g], adj, group_of, static_cast<int>(g))) out.push_back(g);
  }
  return out;
}

SamplerRecall sampler_recall(const SampledGraph& graph, const std::optional<GoldLabels>& gold) {
  if (!gold) fail(ErrorKind::MissingLabels, "sampler_recall needs gold labels");
  SamplerRecall r;
  r.groups_total = gold->groups.size();
  r.groups_connected = r.groups_total - disconnected_groups(graph, *gold).size();
  r.group_connectivity = r.groups_total == 0 ? 1.0 : static_cast<double>(r.groups_connected) / r.groups_total;

  r.links_total = gold->links.size();
  for (const auto& [src, dst] : gold->links) {
    bool covered = false;
    for (NodeId a : gold->groups.at(src)) {
      for (NodeId b : gold->groups.at(dst)) {
        if (a != b && graph.contains(a, b)) {
          covered = true;
          break;
        }
      }
      if (covered) break;
    }
    if (covered) ++r.links_covered;
  }
  if (r.links_total > 0) r.link_coverage = static_cast<double>(r.links_covered) / r.links_total;
  return r;
}

}  // namespace p2g
