#pragma once

// Page data model and the pure box geometry shared by every other module.
// Everything past ingestion works in normalized page coordinates.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace p2g {

using NodeId = std::int32_t;

struct PixelBox {
  double xmin = 0, ymin = 0, xmax = 0, ymax = 0;
  bool operator==(const PixelBox&) const = default;
};

/// Axis-aligned box in unitless page fractions, 0 <= min < max <= 1.
struct NormBox {
  double xmin = 0, ymin = 0, xmax = 0, ymax = 0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double xctr() const { return 0.5 * (xmin + xmax); }
  double yctr() const { return 0.5 * (ymin + ymax); }

  bool operator==(const NormBox&) const = default;
};

struct TextBox {
  NodeId id = 0;
  PixelBox bbox;
  std::optional<std::string> text;  // display only, never a model input
  bool operator==(const TextBox&) const = default;
};

struct GoldLabels {
  std::vector<int> node_category;
  std::vector<std::vector<NodeId>> groups;
  std::vector<std::pair<int, int>> links;  // directed (src_group, dst_group)

  /// group index of every node; requires groups to be a partition.
  std::vector<int> group_of(std::size_t n_nodes) const;
  bool operator==(const GoldLabels&) const = default;
};

struct Page {
  std::string page_id;
  int width_px = 0;
  int height_px = 0;
  std::vector<TextBox> boxes;
  std::optional<GoldLabels> labels;
  std::optional<std::string> image_path;
  std::vector<std::string> category_names;

  std::size_t size() const { return boxes.size(); }
  bool operator==(const Page&) const = default;
};

enum class BoxInfoMode { Four, Eight };

struct Interval {
  double lo = 0, hi = 0;
};

/// Clamps into the page, then divides by the page dimensions.
/// Throws DegenerateBox when the clamped box has no area.
NormBox normalize_box(const TextBox& box, const Page& page);
NormBox normalize_box(const PixelBox& box, int width_px, int height_px);

std::vector<NormBox> normalized_boxes(const Page& page);

/// eight: (xmin, ymin, xmax, ymax, xctr, yctr, w, h); four: (xmin, ymin, w, h).
std::vector<double> layout_vector(const NormBox& b, BoxInfoMode mode);
std::size_t layout_width(BoxInfoMode mode);

NormBox min_bounding_rect(std::span<const NormBox> boxes);
NormBox min_bounding_rect(const NormBox& a, const NormBox& b);

double interval_overlap_1d(Interval a, Interval b);

double center_distance(const NormBox& a, const NormBox& b);

/// Validates NormBox invariants, throwing DegenerateBox.
void check_norm_box(const NormBox& b);

}  // namespace p2g
