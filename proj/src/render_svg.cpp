#include "render_svg.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "decode.hpp"
#include "train.hpp"

namespace p2g {

namespace {

const std::vector<std::string> kPalette{"#2ca02c", "#d62728", "#ff7f0e", "#1f77b4", "#9467bd",
                                        "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class Svg {
 public:
  Svg(const Page& page) : w_(page.width_px), h_(page.height_px) {
    out_ = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
        "<title>{2}</title>\n<rect x=\"0\" y=\"0\" width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
        w_, h_, escape(page.page_id));
  }

  void rect(const NormBox& b, const std::string& stroke, const std::string& fill, double width,
            const std::string& extra = {}) {
    out_ += fmt::format(
        "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\" stroke=\"{}\" "
        "stroke-width=\"{:.1f}\"{}/>\n",
        b.xmin * w_, b.ymin * h_, b.width() * w_, b.height() * h_, fill, stroke, width, extra);
  }

  void line(const NormBox& a, const NormBox& b, const std::string& stroke, double width, bool dashed,
            const std::string& cls) {
    out_ += fmt::format(
        "<line class=\"{}\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" "
        "stroke-width=\"{:.1f}\"{}/>\n",
        cls, a.xctr() * w_, a.yctr() * h_, b.xctr() * w_, b.yctr() * h_, stroke, width,
        dashed ? " stroke-dasharray=\"4 3\"" : "");
  }

  void raw(const std::string& s) { out_ += s; }

  std::string finish() { return out_ + "</svg>\n"; }

 private:
  int w_, h_;
  std::string out_;
};

// One bridging pair per extra component of a split group, joining each
// component to the nearest member of the components before it.
std::vector<Edge> missing_pairs(const SampledGraph& graph, const GoldLabels& gold, const std::vector<NormBox>& boxes) {
  std::vector<Edge> out;
  for (std::size_t gi : disconnected_groups(graph, gold)) {
    const auto& members = gold.groups[gi];
    std::set<NodeId> in_group(members.begin(), members.end());
    std::vector<Edge> inner;
    for (const auto& e : graph.edges) {
      if (in_group.contains(e.a) && in_group.contains(e.b)) inner.push_back(e);
    }
    // Components over local indices.
    std::vector<NodeId> local(members.begin(), members.end());
    std::sort(local.begin(), local.end());
    std::vector<Edge> local_edges;
    for (const auto& e : inner) {
      const auto a = std::lower_bound(local.begin(), local.end(), e.a) - local.begin();
      const auto b = std::lower_bound(local.begin(), local.end(), e.b) - local.begin();
      local_edges.push_back({static_cast<NodeId>(a), static_cast<NodeId>(b)});
    }
    const auto comps = connected_components(local.size(), local_edges);
    for (std::size_t c = 1; c < comps.size(); ++c) {
      double best = -1.0;
      Edge pick{};
      for (std::size_t prev = 0; prev < c; ++prev) {
        for (NodeId u : comps[prev]) {
          for (NodeId v : comps[c]) {
            const double d = center_distance(boxes[local[u]], boxes[local[v]]);
            if (best < 0.0 || d < best) {
              best = d;
              pick = {std::min(local[u], local[v]), std::max(local[u], local[v])};
            }
          }
        }
      }
      out.push_back(pick);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

const std::string& category_color(int category) {
  return kPalette[static_cast<std::size_t>(std::max(0, category)) % kPalette.size()];
}

std::string render_sample_svg(const Page& page, const SampledGraph& graph) {
  const auto boxes = normalized_boxes(page);
  Svg svg(page);
  for (const auto& b : boxes) svg.rect(b, "#333333", "#e8e8e8", 1.0);
  for (const auto& e : graph.edges) svg.line(boxes[e.a], boxes[e.b], "#1f77b4", 1.2, false, "edge");
  if (page.labels) {
    for (const auto& e : missing_pairs(graph, *page.labels, boxes)) {
      svg.line(boxes[e.a], boxes[e.b], "#d62728", 1.6, true, "missing");
    }
  }
  return svg.finish();
}

std::string render_infer_svg(const Page& page, const PagePrediction& pred, const std::vector<std::string>& categories) {
  const auto boxes = normalized_boxes(page);
  const auto cls = argmax_rows(pred.node_logits);
  Svg svg(page);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    svg.rect(boxes[i], category_color(cls[i]), category_color(cls[i]), 0.8, " fill-opacity=\"0.35\"");
  }
  std::set<Edge> positive(pred.positive.begin(), pred.positive.end());
  for (const auto& e : pred.out_edges) {
    if (!positive.contains(e)) svg.line(boxes[e.a], boxes[e.b], "#999999", 0.8, true, "unpaired");
  }
  for (const auto& e : pred.positive) svg.line(boxes[e.a], boxes[e.b], "#222222", 1.4, false, "paired");
  for (const auto& inst : pred.instances) {
    NormBox b = inst.bbox;
    svg.rect(b, category_color(inst.category), "none", 2.0);
    const std::string name = inst.category < static_cast<int>(categories.size())
                                 ? categories[inst.category]
                                 : "class_" + std::to_string(inst.category);
    svg.raw(fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"10\" fill=\"{}\">{} {:.2f}</text>\n",
                        b.xmin * page.width_px, std::max(10.0, b.ymin * page.height_px - 2.0),
                        category_color(inst.category), escape(name), inst.score));
  }
  return svg.finish();
}

}  // namespace p2g
