#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "checkpoint.hpp"
#include "coco.hpp"
#include "errors.hpp"
#include "funsd.hpp"
#include "model.hpp"
#include "page_io.hpp"
#include "run_config.hpp"
#include "sampling.hpp"
#include "synth.hpp"

using namespace p2g;
using nlohmann::json;
using doctest::Approx;

namespace {

json minimal_page() {
  return json::parse(R"({
    "schema_version": 1, "page_id": "p0", "width": 100, "height": 200,
    "categories": ["a", "b"],
    "boxes": [{"id": 1, "bbox": [10, 10, 40, 20], "text": "world"},
              {"id": 0, "bbox": [0, 0, 50, 8], "text": "hello"}],
    "labels": {"node_category": [0, 1], "groups": [[0], [1]], "links": [[0, 1]]}
  })");
}

Error error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  FAIL("no error raised");
  return Error(ErrorKind::IoError, "");
}

json funsd_doc() {
  return json::parse(R"({"form": [
    {"id": 0, "label": "question", "box": [10, 10, 90, 20],
     "words": [{"box": [10, 10, 30, 20], "text": "Name"}, {"box": [32, 10, 60, 20], "text": "of"},
               {"box": [62, 10, 90, 20], "text": "sender:"}],
     "linking": [[0, 1]]},
    {"id": 1, "label": "answer", "box": [100, 10, 160, 20],
     "words": [{"box": [100, 10, 160, 20], "text": "Alice"}], "linking": [[0, 1]]},
    {"id": 2, "label": "other", "box": [0, 0, 0, 0], "words": []}
  ]})");
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("p2g_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

Checkpoint small_checkpoint(std::uint64_t seed) {
  Checkpoint c;
  c.model.hidden_dim = 8;
  c.model.num_classes = 3;
  c.seed = seed;
  c.category_names = {"x", "y", "z"};
  c.params = init_model(c.model, seed);
  return c;
}

}  // namespace

TEST_CASE("page documents: parse and round trip") {
  const Page p = parse_page(minimal_page());
  CHECK(p.page_id == "p0");
  REQUIRE(p.size() == 2);
  CHECK(p.boxes[0].id == 0);
  CHECK(p.boxes[0].text == "hello");
  CHECK(p.labels->links == std::vector<std::pair<int, int>>{{0, 1}});
  CHECK(parse_page(page_to_json(p)) == p);

  const auto dir = temp_dir("page");
  save_page_file(p, dir / "p.json");
  CHECK(load_page_file(dir / "p.json") == p);
  CHECK(error_of([&] { load_page_file(dir / "missing.json"); }).kind() == ErrorKind::IoError);
}

TEST_CASE("page documents: schema errors carry a path") {
  auto dup = minimal_page();
  dup["boxes"][1]["id"] = 1;
  const auto e1 = error_of([&] { parse_page(dup); });
  CHECK(e1.kind() == ErrorKind::SchemaError);
  CHECK(e1.detail().find("$.boxes[1].id") != std::string::npos);

  auto unknown = minimal_page();
  unknown["boxes"][0]["colour"] = "red";
  CHECK(error_of([&] { parse_page(unknown); }).detail().find("$.boxes[0].colour") != std::string::npos);

  auto version = minimal_page();
  version["schema_version"] = 2;
  CHECK(error_of([&] { parse_page(version); }).kind() == ErrorKind::SchemaError);

  auto overlap = minimal_page();
  overlap["labels"]["groups"] = json::parse("[[0, 1], [1]]");
  CHECK(error_of([&] { parse_page(overlap); }).kind() == ErrorKind::SchemaError);

  auto uncovered = minimal_page();
  uncovered["labels"]["groups"] = json::parse("[[0]]");
  CHECK(error_of([&] { parse_page(uncovered); }).kind() == ErrorKind::SchemaError);

  auto bad_cat = minimal_page();
  bad_cat["labels"]["node_category"] = json::parse("[0, 2]");
  CHECK(error_of([&] { parse_page(bad_cat); }).kind() == ErrorKind::SchemaError);

  auto flat = minimal_page();
  flat["boxes"][0]["bbox"] = json::parse("[10, 10, 40, 10]");
  CHECK(error_of([&] { parse_page(flat); }).kind() == ErrorKind::DegenerateBox);

  auto gap = minimal_page();
  gap["boxes"][0]["id"] = 5;
  CHECK(error_of([&] { parse_page(gap); }).kind() == ErrorKind::SchemaError);
}

TEST_CASE("funsd: word and entity levels") {
  const auto word = funsd_adapter(funsd_doc());
  REQUIRE(word.page.size() == 4);
  const auto& wl = *word.page.labels;
  CHECK(wl.groups.size() == 2);
  CHECK(wl.groups[0].size() == 3);
  CHECK(wl.node_category == std::vector<int>{1, 1, 1, 2});
  CHECK(wl.links == std::vector<std::pair<int, int>>{{0, 1}});
  REQUIRE(word.warnings.size() == 1);
  CHECK(word.warnings[0].find("no usable words") != std::string::npos);
  CHECK(word.page.width_px == 160);

  const auto entity = funsd_adapter(funsd_doc(), FunsdOptions{FunsdLevel::Entity, "e", 200, 100});
  REQUIRE(entity.page.size() == 2);
  CHECK(entity.page.boxes[0].bbox == PixelBox{10, 10, 90, 20});
  CHECK(entity.page.labels->links == std::vector<std::pair<int, int>>{{0, 1}});
  CHECK(entity.page.width_px == 200);
}

TEST_CASE("funsd: malformed annotations and dangling links") {
  CHECK(error_of([] { funsd_adapter(json::object()); }).kind() == ErrorKind::MalformedAnnotation);
  auto bad_label = funsd_doc();
  bad_label["form"][0]["label"] = "footnote";
  CHECK(error_of([&] { funsd_adapter(bad_label); }).kind() == ErrorKind::MalformedAnnotation);

  auto dangling = funsd_doc();
  dangling["form"][1]["linking"] = json::parse("[[1, 2]]");
  const auto r = funsd_adapter(dangling);
  bool warned = false;
  for (const auto& w : r.warnings) warned = warned || w.find("touches a skipped entity") != std::string::npos;
  CHECK(warned);
}

TEST_CASE("funsd: perturbed annotations either load valid pages or fail cleanly") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> coord(-20.0, 220.0);
  for (int t = 0; t < 200; ++t) {
    json doc = funsd_doc();
    for (auto& ent : doc["form"]) {
      for (auto& w : ent["words"]) {
        if (gen() % 3 == 0) w["box"][gen() % 4] = coord(gen);
      }
    }
    if (gen() % 5 == 0) doc["form"][0]["linking"] = json::parse("[[0, 9]]");
    if (gen() % 7 == 0) doc["form"][1]["words"][0]["box"] = "oops";
    try {
      const auto r = funsd_adapter(doc, FunsdOptions{gen() % 2 ? FunsdLevel::Word : FunsdLevel::Entity, "f", 0, 0});
      CHECK_NOTHROW(validate_labels(*r.page.labels, r.page.size(), r.page.category_names.size()));
      CHECK_NOTHROW(normalized_boxes(r.page));
    } catch (const Error& e) {
      CHECK(category_of(e.kind()) == ErrorCategory::Data);
    }
  }
}

TEST_CASE("synth: deterministic, valid, sampler-connected") {
  SynthConfig cfg;
  cfg.pages = 12;
  const auto a = synth_generate(cfg);
  CHECK(a == synth_generate(cfg));
  REQUIRE(a.size() == 12);
  cfg.seed = 8;
  CHECK(synth_generate(cfg) != a);
  for (const auto& page : a) {
    const Page again = parse_page(page_to_json(page));
    CHECK(again == page);
    const auto g = sample_directional(normalized_boxes(page));
    CHECK(sampler_recall(g, page.labels).group_connectivity == 1.0);
    CHECK(page.category_names == kSynthCategories);
  }
  cfg.pages = 0;
  CHECK(synth_generate(cfg).empty());
  cfg.pages = 1;
  cfg.columns = 0;
  CHECK(error_of([&] { synth_generate(cfg); }).kind() == ErrorKind::InvalidConfig);
}

TEST_CASE("synth: rendered image is dark where boxes are") {
  SynthConfig cfg;
  cfg.pages = 1;
  const Page page = synth_generate(cfg)[0];
  const FeatureMap img = render_page_image(page, 0.25);
  CHECK(img.channels == 1);
  CHECK(img.width == 250);
  const auto& b = page.boxes[0].bbox;
  const int cx = static_cast<int>((b.xmin + b.xmax) / 2 * 0.25), cy = static_cast<int>((b.ymin + b.ymax) / 2 * 0.25);
  CHECK(img.data[static_cast<std::size_t>(cy * img.width + cx)] < 0.5);
  CHECK(img.data[0] == 1.0);
}

TEST_CASE("checkpoint: save, load, save is byte identical") {
  const Checkpoint c = small_checkpoint(3);
  const std::string bytes = checkpoint_bytes(c);
  CHECK(bytes.substr(0, 4) == "P2G1");
  const Checkpoint back = parse_checkpoint(bytes);
  CHECK(checkpoint_bytes(back) == bytes);
  CHECK(back.params.values_equal(parse_checkpoint(checkpoint_bytes(back)).params));
  // Values are stored as float32.
  for (const auto& [name, p] : c.params) {
    const auto& got = back.params.at(name).value.data;
    REQUIRE(got.size() == p.value.data.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == static_cast<double>(static_cast<float>(p.value.data[i])));
  }
  CHECK(back.category_names == c.category_names);
  CHECK(back.seed == 3);

  const auto dir = temp_dir("ckpt");
  save_checkpoint(c, dir / "m.p2g");
  CHECK(checkpoint_bytes(load_checkpoint(dir / "m.p2g")) == bytes);

  CHECK(error_of([&] { parse_checkpoint(bytes.substr(0, bytes.size() - 7)); }).kind() == ErrorKind::CorruptCheckpoint);
  CHECK(error_of([&] { parse_checkpoint(std::string_view(bytes).substr(0, 10)); }).kind() == ErrorKind::CorruptCheckpoint);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(error_of([&] { parse_checkpoint(bad_magic); }).kind() == ErrorKind::CorruptCheckpoint);
}

TEST_CASE("checkpoint: config mismatch names every differing field") {
  ModelConfig a, b;
  b.hidden_dim = 32;
  b.gnn_layers = 3;
  CHECK_NOTHROW(require_same_config(a, a));
  const auto e = error_of([&] { require_same_config(a, b); });
  CHECK(e.kind() == ErrorKind::ConfigMismatch);
  CHECK(e.detail().find("hidden_dim") != std::string::npos);
  CHECK(e.detail().find("gnn_layers") != std::string::npos);
  CHECK(model_config_diff(a, b).size() == 2);
}

TEST_CASE("coco export: pixel conversion, empty export, round trip") {
  const auto xywh = to_pixel_xywh({0.1, 0.2, 0.3, 0.5}, 1000, 1300);
  CHECK(xywh[0] == Approx(100.0));
  CHECK(xywh[1] == Approx(260.0));
  CHECK(xywh[2] == Approx(200.0));
  CHECK(xywh[3] == Approx(390.0));

  const json empty = export_coco({}, {"a"});
  CHECK(empty["version"] == kCocoExportVersion);
  CHECK(empty["detections"].empty());
  CHECK(empty["images"].empty());

  PageInstances p{"pg", 1000, 1300, {{{0, 1}, {0.1, 0.2, 0.3, 0.5}, 1, 0.75}, {{2}, {0.5, 0.5, 0.6, 0.6}, 0, 0.5}}};
  const json doc = export_coco({p}, {"a", "b"});
  const CocoDocument back = read_coco(json::parse(doc.dump()));
  CHECK(back.categories == std::vector<std::string>{"a", "b"});
  REQUIRE(back.images.size() == 1);
  CHECK(back.images[0].page_id == "pg");
  REQUIRE(back.detections.size() == 2);
  CHECK(back.detections[0].category_id == 1);
  CHECK(back.detections[0].score == 0.75);
  CHECK(back.detections[0].bbox == xywh);
  CHECK(export_coco({p}, {"a", "b"}) == doc);
}

TEST_CASE("run config: defaults, unknown keys, echo") {
  const RunConfig d = run_config_from_json(json::object());
  CHECK(d.optimizer.lr == 1e-4);
  CHECK(d.train.epochs == 60);
  const json echoed = to_json(d);
  CHECK(echoed.contains("model"));
  CHECK(to_json(run_config_from_json(echoed)) == echoed);

  CHECK(error_of([] { run_config_from_json(json::parse(R"({"modle": {}})")); }).kind() == ErrorKind::InvalidConfig);
  CHECK(error_of([] { run_config_from_json(json::parse(R"({"model": {"hidden": 3}})")); }).kind() ==
        ErrorKind::InvalidConfig);
  const RunConfig c = run_config_from_json(json::parse(R"({"sampler": {"strategy": "knn", "knn_k": 4}, "seed": 11})"));
  CHECK(c.sampler.kind == SamplerKind::Knn);
  CHECK(c.seed == 11);
  CHECK(error_of([] { parse_sampler_kind("delaunay"); }).kind() == ErrorKind::InvalidConfig);
}

TEST_CASE("dataset loading reads every page file in name order") {
  const auto dir = temp_dir("dataset");
  SynthConfig cfg;
  cfg.pages = 3;
  const auto pages = synth_generate(cfg);
  for (std::size_t i = 0; i < pages.size(); ++i) save_page_file(pages[i], dir / ("p" + std::to_string(i) + ".json"));
  std::ofstream(dir / "notes.txt") << "ignored";
  const auto loaded = load_dataset(dir, DataFormat::Page, FunsdLevel::Word);
  CHECK(loaded == pages);
  CHECK(dataset_category_count(loaded) == 5);
  CHECK(error_of([&] { load_dataset(dir / "nope", DataFormat::Page, FunsdLevel::Word); }).kind() == ErrorKind::IoError);
}

TEST_CASE("shipped run configs load") {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(P2G_CONFIG_DIR)) {
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_run_config(entry.path()));
    ++n;
  }
  CHECK(n >= 5);
}
