#include "funsd.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "errors.hpp"

namespace p2g {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& path, const std::string& what) {
  fail(ErrorKind::MalformedAnnotation, path + ": " + what);
}

PixelBox read_box(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 4) malformed(path, "expected [x0, y0, x1, y1]");
  double v[4];
  for (int k = 0; k < 4; ++k) {
    if (!j[k].is_number()) malformed(path, "box coordinates must be numbers");
    v[k] = j[k].get<double>();
  }
  return {std::min(v[0], v[2]), std::min(v[1], v[3]), std::max(v[0], v[2]), std::max(v[1], v[3])};
}

struct Entity {
  long long id;
  int label;
  std::vector<TextBox> words;
  std::string text;
};

}  // namespace

FunsdResult funsd_adapter(const json& doc, const FunsdOptions& opts) {
  if (!doc.is_object() || !doc.contains("form") || !doc["form"].is_array()) malformed("$", "expected an object with a 'form' array");
  FunsdResult result;
  std::vector<Entity> entities;
  std::vector<std::pair<long long, long long>> raw_links;
  double max_x = 1.0, max_y = 1.0;

  for (std::size_t e = 0; e < doc["form"].size(); ++e) {
    const json& ej = doc["form"][e];
    const std::string ep = "$.form[" + std::to_string(e) + "]";
    if (!ej.is_object()) malformed(ep, "expected an object");
    if (!ej.contains("id") || !ej["id"].is_number_integer()) malformed(ep + ".id", "missing integer id");
    if (!ej.contains("label") || !ej["label"].is_string()) malformed(ep + ".label", "missing label");
    Entity ent;
    ent.id = ej["id"].get<long long>();
    const std::string label = ej["label"].get<std::string>();
    const auto it = std::find(kFunsdCategories.begin(), kFunsdCategories.end(), label);
    if (it == kFunsdCategories.end()) malformed(ep + ".label", "unknown label '" + label + "'");
    ent.label = static_cast<int>(it - kFunsdCategories.begin());
    if (ej.contains("text") && ej["text"].is_string()) ent.text = ej["text"].get<std::string>();
    const json words = ej.value("words", json::array());
    if (!words.is_array()) malformed(ep + ".words", "expected an array");
    for (std::size_t w = 0; w < words.size(); ++w) {
      const std::string wp = ep + ".words[" + std::to_string(w) + "]";
      if (!words[w].is_object() || !words[w].contains("box")) malformed(wp, "word needs a box");
      TextBox tb;
      tb.bbox = read_box(words[w]["box"], wp + ".box");
      if (words[w].contains("text") && words[w]["text"].is_string()) tb.text = words[w]["text"].get<std::string>();
      if (!(tb.bbox.xmin < tb.bbox.xmax) || !(tb.bbox.ymin < tb.bbox.ymax)) {
        result.warnings.push_back(wp + ": degenerate word box skipped");
        continue;
      }
      max_x = std::max(max_x, tb.bbox.xmax);
      max_y = std::max(max_y, tb.bbox.ymax);
      ent.words.push_back(std::move(tb));
    }
    if (ej.contains("linking")) {
      if (!ej["linking"].is_array()) malformed(ep + ".linking", "expected an array of pairs");
      for (const auto& l : ej["linking"]) {
        if (!l.is_array() || l.size() != 2 || !l[0].is_number_integer() || !l[1].is_number_integer()) {
          malformed(ep + ".linking", "expected [from_id, to_id] pairs");
        }
        raw_links.emplace_back(l[0].get<long long>(), l[1].get<long long>());
      }
    }
    if (ent.words.empty()) {
      result.warnings.push_back(ep + ": entity " + std::to_string(ent.id) + " has no usable words, skipped");
      continue;
    }
    entities.push_back(std::move(ent));
  }

  Page& page = result.page;
  page.page_id = opts.page_id;
  page.width_px = opts.width > 0 ? opts.width : static_cast<int>(std::ceil(max_x));
  page.height_px = opts.height > 0 ? opts.height : static_cast<int>(std::ceil(max_y));
  page.category_names = kFunsdCategories;

  GoldLabels labels;
  std::map<long long, int> group_of_entity;
  for (const auto& ent : entities) {
    std::vector<NodeId> members;
    auto clamp_box = [&](PixelBox b) {
      return PixelBox{std::clamp(b.xmin, 0.0, double(page.width_px)), std::clamp(b.ymin, 0.0, double(page.height_px)),
                      std::clamp(b.xmax, 0.0, double(page.width_px)), std::clamp(b.ymax, 0.0, double(page.height_px))};
    };
    if (opts.level == FunsdLevel::Word) {
      for (const auto& w : ent.words) {
        TextBox tb = w;
        tb.bbox = clamp_box(tb.bbox);
        if (!(tb.bbox.xmin < tb.bbox.xmax) || !(tb.bbox.ymin < tb.bbox.ymax)) {
          result.warnings.push_back("word outside the page skipped in entity " + std::to_string(ent.id));
          continue;
        }
        tb.id = static_cast<NodeId>(page.boxes.size());
        members.push_back(tb.id);
        labels.node_category.push_back(ent.label);
        page.boxes.push_back(std::move(tb));
      }
    } else {
      PixelBox r = ent.words.front().bbox;
      for (const auto& w : ent.words) {
        r = PixelBox{std::min(r.xmin, w.bbox.xmin), std::min(r.ymin, w.bbox.ymin), std::max(r.xmax, w.bbox.xmax),
                     std::max(r.ymax, w.bbox.ymax)};
      }
      TextBox tb;
      tb.id = static_cast<NodeId>(page.boxes.size());
      tb.bbox = clamp_box(r);
      if (!ent.text.empty()) tb.text = ent.text;
      if (tb.bbox.xmin < tb.bbox.xmax && tb.bbox.ymin < tb.bbox.ymax) {
        members.push_back(tb.id);
        labels.node_category.push_back(ent.label);
        page.boxes.push_back(std::move(tb));
      } else {
        result.warnings.push_back("entity " + std::to_string(ent.id) + " lies outside the page, skipped");
      }
    }
    if (members.empty()) {
      group_of_entity.erase(ent.id);
      continue;
    }
    group_of_entity[ent.id] = static_cast<int>(labels.groups.size());
    labels.groups.push_back(std::move(members));
  }

  std::set<std::pair<int, int>> seen;
  for (const auto& [from, to] : raw_links) {
    const auto a = group_of_entity.find(from);
    const auto b = group_of_entity.find(to);
    if (a == group_of_entity.end() || b == group_of_entity.end()) {
      result.warnings.push_back("link " + std::to_string(from) + "->" + std::to_string(to) + " touches a skipped entity");
      continue;
    }
    if (a->second == b->second) continue;
    if (seen.insert({a->second, b->second}).second) labels.links.emplace_back(a->second, b->second);
  }
  page.labels = std::move(labels);
  validate_labels(*page.labels, page.boxes.size(), page.category_names.size());
  return result;
}

}  // namespace p2g
