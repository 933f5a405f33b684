#include <doctest.h>

#include <random>

#include "decode.hpp"
#include "errors.hpp"
#include "metrics.hpp"
#include "oracles.hpp"

using namespace p2g;
using nn::Matrix;
using doctest::Approx;

namespace {

std::vector<std::vector<int>> as_int(const std::vector<std::vector<NodeId>>& comps) {
  std::vector<std::vector<int>> out;
  for (const auto& c : comps) out.emplace_back(c.begin(), c.end());
  return out;
}

Matrix one_hot_logits(const std::vector<int>& cls, int c, double margin = 5.0) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(cls.size()), c);
  for (std::size_t i = 0; i < cls.size(); ++i) m(static_cast<Eigen::Index>(i), cls[i]) = margin;
  return m;
}

}  // namespace

TEST_CASE("connected components: small graphs") {
  const std::vector<Edge> path{{0, 1}, {1, 2}};
  CHECK(as_int(connected_components(4, path)) == std::vector<std::vector<int>>{{0, 1, 2}, {3}});
  CHECK(connected_components(3, std::vector<Edge>{}).size() == 3);
  std::vector<Edge> all;
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) all.push_back({i, j});
  CHECK(connected_components(6, all).size() == 1);
}

TEST_CASE("connected components equal the transitive closure") {
  std::mt19937_64 gen(77);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(gen() % 50);
    const int m = static_cast<int>(gen() % (2 * n + 1));
    std::vector<Edge> edges;
    std::vector<oracle::Pair> pairs;
    for (int k = 0; k < m && n > 1; ++k) {
      const int a = static_cast<int>(gen() % n), b = static_cast<int>(gen() % n);
      if (a == b) continue;
      edges.push_back({a, b});
      pairs.emplace_back(a, b);
    }
    CHECK(as_int(connected_components(static_cast<std::size_t>(n), edges)) == oracle::components_by_closure(n, pairs));
  }
}

TEST_CASE("decode instances: mode category, tie rule, score, box") {
  const std::vector<NormBox> boxes{{0.1, 0.1, 0.2, 0.2}, {0.3, 0.1, 0.4, 0.25}, {0.1, 0.3, 0.2, 0.4}, {0.7, 0.7, 0.8, 0.8}};
  const Matrix logits = one_hot_logits({0, 0, 1, 2}, 3);
  const auto inst = decode_instances({{0, 1, 2}, {3}}, logits, boxes);
  REQUIRE(inst.size() == 2);
  CHECK(inst[0].category == 0);
  CHECK(inst[0].bbox == NormBox{0.1, 0.1, 0.4, 0.4});
  const Matrix p = softmax_rows(logits);
  CHECK(inst[0].score == Approx((p(0, 0) + p(1, 0) + p(2, 0)) / 3));
  CHECK(inst[1].category == 2);
  CHECK(inst[1].bbox == boxes[3]);
  CHECK(inst[1].members == std::vector<NodeId>{3});

  const auto tie = decode_instances({{0, 1}}, one_hot_logits({2, 1}, 3), boxes);
  CHECK(tie[0].category == 1);
}

TEST_CASE("decode output unchanged by an edge inside a component") {
  std::mt19937_64 gen(12);
  const auto boxes = oracle::random_boxes(gen, 8);
  const Matrix logits = Matrix::Random(8, 4);
  const std::vector<Edge> base{{0, 1}, {1, 2}, {4, 5}};
  auto extra = base;
  extra.push_back({0, 2});
  const auto a = decode_instances(connected_components(8, base), logits, boxes);
  const auto b = decode_instances(connected_components(8, extra), logits, boxes);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].members == b[i].members);
    CHECK(a[i].bbox == b[i].bbox);
    CHECK(a[i].category == b[i].category);
    CHECK(a[i].score == b[i].score);
  }
}

TEST_CASE("positive edges threshold") {
  const std::vector<Edge> e{{0, 1}, {1, 2}, {2, 3}};
  Matrix l(3, 2);
  l << 0, 1, 1, 0, 0, 0;
  CHECK(positive_edges(e, l) == std::vector<Edge>{{0, 1}});
  CHECK(positive_edges(e, l, 0.2).size() == 3);
  CHECK(positive_edges(e, l, 0.8).empty());
  CHECK(argmax_rows(l) == std::vector<int>{1, 0, 0});
}

TEST_CASE("F1: hand cases and conventions") {
  const auto s = score_from_counts(2, 1, 1);
  CHECK(s.precision == 2.0 / 3.0);
  CHECK(s.recall == 2.0 / 3.0);
  CHECK(s.f1 == 2.0 / 3.0);

  const std::vector<int> gold{1, 0, 1, 1, 0};
  const auto perfect = f1_scores(gold, gold, F1Mode::EdgeBinary, 2);
  CHECK(perfect.micro.f1 == 1.0);
  CHECK(perfect.micro.precision == 1.0);

  const std::vector<int> none(5, 0);
  const auto zero = f1_scores(none, gold, F1Mode::EdgeBinary, 2);
  CHECK(zero.micro.recall == 0.0);
  CHECK(zero.micro.precision == 0.0);
  CHECK(zero.micro.f1 == 0.0);

  // tp=2, fp=1, fn=1 as binary edge decisions.
  const std::vector<int> pred{1, 1, 0, 1, 0}, g2{1, 0, 1, 1, 0};
  CHECK(f1_scores(pred, g2, F1Mode::EdgeBinary, 2).micro.f1 == 2.0 / 3.0);

  CHECK_THROWS_AS(f1_scores(pred, std::vector<int>{1}, F1Mode::EdgeBinary, 2), Error);
}

TEST_CASE("F1: multiclass micro equals binary F1 with two classes, recalls in range") {
  std::mt19937_64 gen(3);
  std::vector<int> pred(300), gold(300);
  for (auto& v : pred) v = static_cast<int>(gen() % 2);
  for (auto& v : gold) v = static_cast<int>(gen() % 2);
  const auto multi = f1_scores(pred, gold, F1Mode::NodeMulticlass, 2, 0);
  const auto bin = f1_scores(pred, gold, F1Mode::EdgeBinary, 2);
  CHECK(multi.micro.f1 == Approx(bin.micro.f1).epsilon(1e-15));

  std::vector<int> p5(300), g5(300);
  for (auto& v : p5) v = static_cast<int>(gen() % 5);
  for (auto& v : g5) v = static_cast<int>(gen() % 5);
  const auto r = f1_scores(p5, g5, F1Mode::NodeMulticlass, 5);
  long correct = 0;
  for (std::size_t i = 0; i < p5.size(); ++i) correct += p5[i] == g5[i];
  CHECK(r.micro.f1 == Approx(static_cast<double>(correct) / 300.0));
  for (const auto& c : r.per_class) {
    CHECK(c.recall >= 0.0);
    CHECK(c.recall <= 1.0);
  }
}

TEST_CASE("iou") {
  const NormBox a{0, 0, 1, 1};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, {2, 2, 3, 3}) == 0.0);
  CHECK(iou(a, {0.5, 0, 1.5, 1}) == Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("coco mAP: IoU 0.6 single detection gives AP 0.3") {
  // Same height, horizontal shift s: IoU = (1 - s) / (1 + s) = 0.6 at s = 0.25.
  const ScoredInstance gold{0, {0.0, 0.0, 0.4, 0.2}, 1, 1.0};
  const ScoredInstance det{0, {0.1, 0.0, 0.5, 0.2}, 1, 0.9};
  CHECK(iou(gold.box, det.box) == Approx(0.6).epsilon(1e-12));
  const auto r = coco_map(std::vector<ScoredInstance>{det}, std::vector<ScoredInstance>{gold});
  CHECK(r.map == Approx(0.3).epsilon(1e-12));
  CHECK(r.thresholds.size() == 10);
  CHECK(r.ap[0][2] == 1.0);
  CHECK(r.ap[0][3] == 0.0);
}

TEST_CASE("coco mAP: perfect, empty, and skipped classes") {
  std::mt19937_64 gen(9);
  const auto boxes = oracle::random_boxes(gen, 12);
  std::vector<ScoredInstance> golds;
  for (std::size_t i = 0; i < boxes.size(); ++i) golds.push_back({i % 3, boxes[i], static_cast<int>(i % 4), 1.0});
  CHECK(coco_map(golds, golds).map == Approx(1.0));
  CHECK(coco_map(std::vector<ScoredInstance>{}, golds).map == 0.0);
  const auto r = coco_map(golds, golds);
  CHECK(r.classes.size() == 4);
  // A detection of a class without gold is ignored.
  auto extra = golds;
  extra.push_back({0, {0.1, 0.1, 0.2, 0.2}, 7, 0.5});
  CHECK(coco_map(extra, golds).classes.size() == 4);
}

TEST_CASE("coco mAP: replacing a false positive with a true positive never hurts") {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const auto gboxes = oracle::random_boxes(gen, 6);
    std::vector<ScoredInstance> golds, dets;
    for (std::size_t i = 0; i < gboxes.size(); ++i) golds.push_back({0, gboxes[i], static_cast<int>(i % 2), 1.0});
    const auto noise = oracle::random_boxes(gen, 5);
    for (std::size_t i = 0; i < noise.size(); ++i) dets.push_back({0, noise[i], static_cast<int>(i % 2), u(gen)});
    dets.push_back({0, gboxes[0], golds[0].category, u(gen)});
    const double before = coco_map(dets, golds).map;
    const std::size_t k = gen() % noise.size();
    const std::size_t target = 1 + k % 5;
    // Only when detection k is a clear false positive and the target gold is unmatched.
    bool clean = true;
    for (const auto& gb : gboxes) clean = clean && iou(noise[k], gb) < 0.5;
    for (const auto& nb : noise) clean = clean && iou(nb, gboxes[target]) < 0.5;
    if (!clean) continue;
    dets[k] = {0, gboxes[target], golds[target].category, dets[k].score};
    CHECK(coco_map(dets, golds).map >= before - 1e-12);
  }
}
