#include "coco.hpp"

#include "errors.hpp"

namespace p2g {

using nlohmann::json;

std::array<double, 4> to_pixel_xywh(const NormBox& b, int width_px, int height_px) {
  return {b.xmin * width_px, b.ymin * height_px, b.width() * width_px, b.height() * height_px};
}

json export_coco(const std::vector<PageInstances>& pages, const std::vector<std::string>& category_names) {
  json cats = json::array();
  for (std::size_t c = 0; c < category_names.size(); ++c) cats.push_back({{"id", c}, {"name", category_names[c]}});
  json images = json::array();
  json dets = json::array();
  for (std::size_t i = 0; i < pages.size(); ++i) {
    const auto& p = pages[i];
    images.push_back({{"id", i}, {"page_id", p.page_id}, {"width", p.width_px}, {"height", p.height_px}});
    for (const auto& inst : p.instances) {
      dets.push_back({{"image_id", i},
                      {"page_id", p.page_id},
                      {"category_id", inst.category},
                      {"bbox", to_pixel_xywh(inst.bbox, p.width_px, p.height_px)},
                      {"score", inst.score}});
    }
  }
  return json{{"version", kCocoExportVersion}, {"categories", cats}, {"images", images}, {"detections", dets}};
}

CocoDocument read_coco(const json& doc) {
  CocoDocument out;
  try {
    if (doc.at("version").get<int>() != kCocoExportVersion) {
      fail(ErrorKind::SchemaError, "unsupported COCO export version");
    }
    for (const auto& c : doc.at("categories")) {
      const auto id = c.at("id").get<std::size_t>();
      if (id != out.categories.size()) fail(ErrorKind::SchemaError, "category ids must be dense and ordered");
      out.categories.push_back(c.at("name").get<std::string>());
    }
    for (const auto& im : doc.at("images")) {
      PageInstances p;
      p.page_id = im.at("page_id").get<std::string>();
      p.width_px = im.at("width").get<int>();
      p.height_px = im.at("height").get<int>();
      out.images.push_back(std::move(p));
    }
    for (const auto& d : doc.at("detections")) {
      CocoDetection det;
      det.image_id = d.at("image_id").get<int>();
      det.page_id = d.at("page_id").get<std::string>();
      det.category_id = d.at("category_id").get<int>();
      det.bbox = d.at("bbox").get<std::array<double, 4>>();
      det.score = d.at("score").get<double>();
      if (det.image_id < 0 || det.image_id >= static_cast<int>(out.images.size())) {
        fail(ErrorKind::SchemaError, "detection refers to unknown image " + std::to_string(det.image_id));
      }
      out.detections.push_back(std::move(det));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaError, std::string("COCO document: ") + e.what());
  }
  return out;
}

}  // namespace p2g
