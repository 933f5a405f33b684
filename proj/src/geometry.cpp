#include "geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace p2g {

std::vector<int> GoldLabels::group_of(std::size_t n_nodes) const {
  std::vector<int> out(n_nodes, -1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (NodeId id : groups[g]) {
      if (id >= 0 && static_cast<std::size_t>(id) < n_nodes) out[id] = static_cast<int>(g);
    }
  }
  return out;
}

NormBox normalize_box(const PixelBox& box, int width_px, int height_px) {
  if (width_px <= 0 || height_px <= 0) {
    fail(ErrorKind::DegenerateBox, "page dimensions must be positive");
  }
  const double w = width_px;
  const double h = height_px;
  const double xmin = std::clamp(box.xmin, 0.0, w);
  const double xmax = std::clamp(box.xmax, 0.0, w);
  const double ymin = std::clamp(box.ymin, 0.0, h);
  const double ymax = std::clamp(box.ymax, 0.0, h);
  if (!(xmin < xmax) || !(ymin < ymax)) {
    fail(ErrorKind::DegenerateBox, "box (" + std::to_string(box.xmin) + "," + std::to_string(box.ymin) + "," +
                                       std::to_string(box.xmax) + "," + std::to_string(box.ymax) +
                                       ") has no area inside the page");
  }
  return NormBox{xmin / w, ymin / h, xmax / w, ymax / h};
}

NormBox normalize_box(const TextBox& box, const Page& page) {
  return normalize_box(box.bbox, page.width_px, page.height_px);
}

std::vector<NormBox> normalized_boxes(const Page& page) {
  std::vector<NormBox> out;
  out.reserve(page.boxes.size());
  for (const auto& b : page.boxes) out.push_back(normalize_box(b, page));
  return out;
}

std::vector<double> layout_vector(const NormBox& b, BoxInfoMode mode) {
  if (mode == BoxInfoMode::Four) return {b.xmin, b.ymin, b.width(), b.height()};
  return {b.xmin, b.ymin, b.xmax, b.ymax, b.xctr(), b.yctr(), b.width(), b.height()};
}

std::size_t layout_width(BoxInfoMode mode) { return mode == BoxInfoMode::Four ? 4 : 8; }

NormBox min_bounding_rect(const NormBox& a, const NormBox& b) {
  return NormBox{std::min(a.xmin, b.xmin), std::min(a.ymin, b.ymin), std::max(a.xmax, b.xmax),
                 std::max(a.ymax, b.ymax)};
}

NormBox min_bounding_rect(std::span<const NormBox> boxes) {
  if (boxes.empty()) fail(ErrorKind::EmptySet, "min_bounding_rect of an empty box list");
  NormBox r = boxes.front();
  for (const auto& b : boxes.subspan(1)) r = min_bounding_rect(r, b);
  return r;
}

double interval_overlap_1d(Interval a, Interval b) {
  return std::max(0.0, std::min(a.hi, b.hi) - std::max(a.lo, b.lo));
}

double center_distance(const NormBox& a, const NormBox& b) {
  return std::hypot(a.xctr() - b.xctr(), a.yctr() - b.yctr());
}

void check_norm_box(const NormBox& b) {
  const bool finite = std::isfinite(b.xmin) && std::isfinite(b.xmax) && std::isfinite(b.ymin) && std::isfinite(b.ymax);
  if (!finite || !(b.xmin < b.xmax) || !(b.ymin < b.ymax)) {
    fail(ErrorKind::DegenerateBox, "box has non-positive width or height");
  }
}

}  // namespace p2g
