#include "page_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "errors.hpp"
#include "funsd.hpp"

namespace p2g {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  fail(ErrorKind::SchemaError, path + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      schema_error(path + "." + key, "unknown field");
    }
  }
}

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.contains(key)) schema_error(path + "." + key, "missing required field");
  return obj.at(key);
}

long long require_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) schema_error(path, "expected an integer");
  return v.get<long long>();
}

double require_number(const json& v, const std::string& path) {
  if (!v.is_number()) schema_error(path, "expected a number");
  return v.get<double>();
}

}  // namespace

void validate_labels(const GoldLabels& labels, std::size_t n, std::size_t n_categories) {
  if (labels.node_category.size() != n) {
    schema_error("labels.node_category", "expected " + std::to_string(n) + " entries, got " +
                                             std::to_string(labels.node_category.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int c = labels.node_category[i];
    if (c < 0 || (n_categories > 0 && static_cast<std::size_t>(c) >= n_categories)) {
      schema_error("labels.node_category[" + std::to_string(i) + "]", "category " + std::to_string(c) + " out of range");
    }
  }
  std::vector<int> seen(n, 0);
  for (std::size_t g = 0; g < labels.groups.size(); ++g) {
    const std::string gp = "labels.groups[" + std::to_string(g) + "]";
    if (labels.groups[g].empty()) schema_error(gp, "group is empty");
    for (NodeId id : labels.groups[g]) {
      if (id < 0 || static_cast<std::size_t>(id) >= n) schema_error(gp, "node id " + std::to_string(id) + " out of range");
      if (seen[id]++) schema_error(gp, "node id " + std::to_string(id) + " appears in more than one group");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) schema_error("labels.groups", "node id " + std::to_string(i) + " is not in any group (groups must partition the boxes)");
  }
  for (std::size_t l = 0; l < labels.links.size(); ++l) {
    const auto [s, d] = labels.links[l];
    if (s < 0 || d < 0 || static_cast<std::size_t>(s) >= labels.groups.size() ||
        static_cast<std::size_t>(d) >= labels.groups.size()) {
      schema_error("labels.links[" + std::to_string(l) + "]", "group index out of range");
    }
  }
}

Page parse_page(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) schema_error("$", "page document must be an object");
  reject_unknown_keys(doc, "$", {"schema_version", "page_id", "width", "height", "image", "categories", "boxes", "labels"});
  const long long version = require_int(require(doc, "schema_version", "$"), "$.schema_version");
  if (version != kPageSchemaVersion) schema_error("$.schema_version", "unsupported version " + std::to_string(version));

  Page page;
  const json& id = require(doc, "page_id", "$");
  if (!id.is_string()) schema_error("$.page_id", "expected a string");
  page.page_id = id.get<std::string>();
  const long long w = require_int(require(doc, "width", "$"), "$.width");
  const long long h = require_int(require(doc, "height", "$"), "$.height");
  if (w <= 0 || h <= 0) schema_error("$.width", "page dimensions must be positive");
  page.width_px = static_cast<int>(w);
  page.height_px = static_cast<int>(h);

  if (doc.contains("image")) {
    if (!doc["image"].is_string()) schema_error("$.image", "expected a string");
    std::filesystem::path img = doc["image"].get<std::string>();
    if (img.is_relative() && !base_dir.empty()) img = base_dir / img;
    page.image_path = img.string();
  }
  if (doc.contains("categories")) {
    if (!doc["categories"].is_array()) schema_error("$.categories", "expected an array of names");
    for (std::size_t i = 0; i < doc["categories"].size(); ++i) {
      if (!doc["categories"][i].is_string()) schema_error("$.categories[" + std::to_string(i) + "]", "expected a string");
      page.category_names.push_back(doc["categories"][i].get<std::string>());
    }
  }

  const json& boxes = require(doc, "boxes", "$");
  if (!boxes.is_array()) schema_error("$.boxes", "expected an array");
  std::vector<TextBox> parsed;
  std::set<long long> ids;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const std::string bp = "$.boxes[" + std::to_string(i) + "]";
    const json& b = boxes[i];
    if (!b.is_object()) schema_error(bp, "expected an object");
    reject_unknown_keys(b, bp, {"id", "bbox", "text"});
    TextBox tb;
    const long long bid = require_int(require(b, "id", bp), bp + ".id");
    if (!ids.insert(bid).second) schema_error(bp + ".id", "duplicate box id " + std::to_string(bid));
    tb.id = static_cast<NodeId>(bid);
    const json& bb = require(b, "bbox", bp);
    if (!bb.is_array() || bb.size() != 4) schema_error(bp + ".bbox", "expected [xmin, ymin, xmax, ymax]");
    double v[4];
    for (int k = 0; k < 4; ++k) v[k] = require_number(bb[k], bp + ".bbox[" + std::to_string(k) + "]");
    tb.bbox = PixelBox{std::clamp(v[0], 0.0, static_cast<double>(w)), std::clamp(v[1], 0.0, static_cast<double>(h)),
                       std::clamp(v[2], 0.0, static_cast<double>(w)), std::clamp(v[3], 0.0, static_cast<double>(h))};
    if (!(tb.bbox.xmin < tb.bbox.xmax) || !(tb.bbox.ymin < tb.bbox.ymax)) {
      fail(ErrorKind::DegenerateBox, bp + ".bbox: box " + std::to_string(bid) + " has no area inside the page");
    }
    if (b.contains("text")) {
      if (!b["text"].is_string()) schema_error(bp + ".text", "expected a string");
      tb.text = b["text"].get<std::string>();
    }
    parsed.push_back(std::move(tb));
  }
  std::sort(parsed.begin(), parsed.end(), [](const TextBox& a, const TextBox& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    if (parsed[i].id != static_cast<NodeId>(i)) {
      schema_error("$.boxes", "box ids must be dense in [0, " + std::to_string(parsed.size()) + "), missing id " + std::to_string(i));
    }
  }
  page.boxes = std::move(parsed);

  if (doc.contains("labels")) {
    const json& lj = doc["labels"];
    if (!lj.is_object()) schema_error("$.labels", "expected an object");
    reject_unknown_keys(lj, "$.labels", {"node_category", "groups", "links"});
    GoldLabels labels;
    const json& nc = require(lj, "node_category", "$.labels");
    if (!nc.is_array()) schema_error("$.labels.node_category", "expected an array");
    for (std::size_t i = 0; i < nc.size(); ++i) {
      labels.node_category.push_back(static_cast<int>(require_int(nc[i], "$.labels.node_category[" + std::to_string(i) + "]")));
    }
    const json& gj = require(lj, "groups", "$.labels");
    if (!gj.is_array()) schema_error("$.labels.groups", "expected an array of id arrays");
    for (std::size_t g = 0; g < gj.size(); ++g) {
      const std::string gp = "$.labels.groups[" + std::to_string(g) + "]";
      if (!gj[g].is_array()) schema_error(gp, "expected an array");
      std::vector<NodeId> members;
      for (std::size_t k = 0; k < gj[g].size(); ++k) {
        members.push_back(static_cast<NodeId>(require_int(gj[g][k], gp + "[" + std::to_string(k) + "]")));
      }
      labels.groups.push_back(std::move(members));
    }
    if (lj.contains("links")) {
      const json& lk = lj["links"];
      if (!lk.is_array()) schema_error("$.labels.links", "expected an array of [src, dst] pairs");
      for (std::size_t l = 0; l < lk.size(); ++l) {
        const std::string lp = "$.labels.links[" + std::to_string(l) + "]";
        if (!lk[l].is_array() || lk[l].size() != 2) schema_error(lp, "expected [src_group, dst_group]");
        labels.links.emplace_back(static_cast<int>(require_int(lk[l][0], lp + "[0]")),
                                  static_cast<int>(require_int(lk[l][1], lp + "[1]")));
      }
    }
    validate_labels(labels, page.boxes.size(), page.category_names.size());
    page.labels = std::move(labels);
  }
  return page;
}

json page_to_json(const Page& page) {
  json doc;
  doc["schema_version"] = kPageSchemaVersion;
  doc["page_id"] = page.page_id;
  doc["width"] = page.width_px;
  doc["height"] = page.height_px;
  if (page.image_path) doc["image"] = *page.image_path;
  if (!page.category_names.empty()) doc["categories"] = page.category_names;
  json boxes = json::array();
  for (const auto& b : page.boxes) {
    json jb;
    jb["id"] = b.id;
    jb["bbox"] = {b.bbox.xmin, b.bbox.ymin, b.bbox.xmax, b.bbox.ymax};
    if (b.text) jb["text"] = *b.text;
    boxes.push_back(std::move(jb));
  }
  doc["boxes"] = std::move(boxes);
  if (page.labels) {
    json lj;
    lj["node_category"] = page.labels->node_category;
    lj["groups"] = page.labels->groups;
    json links = json::array();
    for (const auto& [s, d] : page.labels->links) links.push_back({s, d});
    lj["links"] = std::move(links);
    doc["labels"] = std::move(lj);
  }
  return doc;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::SchemaError, path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::IoError, "write failed for " + path.string());
}

Page load_page_file(const std::filesystem::path& path) {
  try {
    return parse_page(read_json_file(path), path.parent_path());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

void save_page_file(const Page& page, const std::filesystem::path& path) {
  write_text_file(path, page_to_json(page).dump(1) + "\n");
}

std::vector<Page> load_dataset(const std::filesystem::path& dir, DataFormat format, FunsdLevel level) {
  if (!std::filesystem::is_directory(dir)) fail(ErrorKind::IoError, "data directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Page> pages;
  for (const auto& f : files) {
    if (format == DataFormat::Page) {
      pages.push_back(load_page_file(f));
    } else {
      FunsdOptions opts;
      opts.level = level;
      opts.page_id = f.stem().string();
      pages.push_back(funsd_adapter(read_json_file(f), opts).page);
    }
  }
  return pages;
}

int dataset_category_count(const std::vector<Page>& pages) {
  int names = 0, max_label = -1;
  for (const auto& p : pages) {
    names = std::max(names, static_cast<int>(p.category_names.size()));
    if (p.labels) {
      for (int c : p.labels->node_category) max_label = std::max(max_label, c);
    }
  }
  return names > 0 ? names : max_label + 1;
}

}  // namespace p2g
