#pragma once

// COCO-style detection export (version 1):
//
//   {"version": 1,
//    "categories": [{"id": 0, "name": "title"}, ...],
//    "images": [{"id": 0, "page_id": "...", "width": W, "height": H}],
//    "detections": [{"image_id", "page_id", "category_id", "bbox": [x, y, w, h], "score"}]}
//
// Boxes are absolute pixels, (x, y) the top-left corner.

#include <string>
#include <vector>

#include <json.hpp>

#include "decode.hpp"
#include "geometry.hpp"

namespace p2g {

inline constexpr int kCocoExportVersion = 1;

struct PageInstances {
  std::string page_id;
  int width_px = 0;
  int height_px = 0;
  std::vector<LayoutInstance> instances;
};

struct CocoDetection {
  int image_id = 0;
  std::string page_id;
  int category_id = 0;
  std::array<double, 4> bbox{};  // x, y, w, h in pixels
  double score = 0.0;
  bool operator==(const CocoDetection&) const = default;
};

struct CocoDocument {
  std::vector<std::string> categories;
  std::vector<PageInstances> images;  // instances left empty by the reader
  std::vector<CocoDetection> detections;
};

std::array<double, 4> to_pixel_xywh(const NormBox& b, int width_px, int height_px);

nlohmann::json export_coco(const std::vector<PageInstances>& pages, const std::vector<std::string>& category_names);
CocoDocument read_coco(const nlohmann::json& doc);

}  // namespace p2g
