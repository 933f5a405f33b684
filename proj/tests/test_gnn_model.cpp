#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "commands.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "oracles.hpp"
#include "synth.hpp"
#include "train.hpp"

using namespace p2g;
using nn::Matrix;
using nn::Var;
using doctest::Approx;

namespace {

// Pixel page on a 1000 x 1000 canvas from normalized boxes.
Page page_from(const std::vector<NormBox>& boxes) {
  Page p;
  p.page_id = "t";
  p.width_px = p.height_px = 1000;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    p.boxes.push_back({static_cast<NodeId>(i), {b.xmin * 1000, b.ymin * 1000, b.xmax * 1000, b.ymax * 1000}, {}});
  }
  return p;
}

ModelConfig small_config(int hidden = 8) {
  ModelConfig cfg;
  cfg.hidden_dim = hidden;
  cfg.edge_features.rope_dim = 8;
  return cfg;
}

std::vector<Page> small_corpus(int pages, std::uint64_t seed) {
  SynthConfig sc;
  sc.seed = seed;
  sc.pages = pages;
  sc.columns = 1;
  sc.paragraphs_min = 1;
  sc.paragraphs_max = 2;
  sc.lines_max = 2;
  sc.words_per_line_max = 4;
  return synth_generate(sc);
}

std::vector<PreparedPage> prepare_all(const std::vector<Page>& pages, const ModelConfig& cfg) {
  std::vector<PreparedPage> out;
  for (const auto& p : pages) out.push_back(prepare_page(p, cfg, SamplerConfig{}));
  return out;
}

std::size_t linear_params(std::size_t in, std::size_t out) { return in * out + out; }

Matrix mlp_row(const Matrix& z, const Matrix& w1, const Matrix& b1, const Matrix& w2, const Matrix& b2) {
  Matrix hidden = (z * w1 + b1).cwiseMax(0.0);
  return hidden * w2 + b2;
}

}  // namespace

TEST_CASE("parameter count of the default configuration") {
  const ModelConfig cfg;
  const std::size_t h = 64, c = 5, in = 8, layers = 2;
  const std::size_t edge_in = 2 * h + 32 + 18;
  const std::size_t expected = linear_params(in, h) + linear_params(h, h) +
                               layers * (linear_params(2 * h, h) + linear_params(h, h)) + linear_params(h, h) +
                               linear_params(h, c) + linear_params(edge_in, h) + linear_params(h, 2);
  CHECK(expected == 45639);
  CHECK(init_model(cfg, 1).trainable_scalars() == expected);
  CHECK(cfg.edge_input_width() == edge_in);
}

TEST_CASE("init_model is deterministic in the seed") {
  const ModelConfig cfg = small_config();
  CHECK(init_model(cfg, 3).values_equal(init_model(cfg, 3)));
  CHECK_FALSE(init_model(cfg, 3).values_equal(init_model(cfg, 4)));
  const auto ps = init_model(cfg, 3);
  CHECK(ps.contains("fusion.fc1.weight"));
  CHECK(ps.contains("gnn.1.fc2.bias"));
  CHECK(ps.contains("edge_head.out.weight"));
  CHECK_FALSE(ps.at("norm.node_mean").trainable);
}

TEST_CASE("invalid model configurations") {
  ModelConfig cfg;
  cfg.gnn = "gravnet";
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = ModelConfig{};
  cfg.num_classes = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = ModelConfig{};
  cfg.hidden_dim = 0;
  CHECK_THROWS_AS(init_model(cfg, 1), Error);
}

TEST_CASE("smallest legal model runs forward on two nodes") {
  ModelConfig cfg;
  cfg.hidden_dim = 1;
  cfg.num_classes = 2;
  cfg.edge_features.rope_dim = 2;
  cfg.dynamic_k = 1;
  const Page page = page_from({{0.1, 0.1, 0.2, 0.15}, {0.3, 0.1, 0.4, 0.15}});
  const auto pp = prepare_page(page, cfg, SamplerConfig{});
  auto params = init_model(cfg, 1);
  nn::Graph g;
  const auto out = forward(g, pp, cfg, params);
  CHECK(g.value(out.node_logits).rows() == 2);
  CHECK(g.value(out.node_logits).cols() == 2);
  CHECK(g.value(out.edge_logits).rows() == 1);
}

TEST_CASE("one-node page: node logits only") {
  const ModelConfig cfg = small_config();
  const auto pp = prepare_page(page_from({{0.1, 0.1, 0.2, 0.15}}), cfg, SamplerConfig{});
  auto params = init_model(cfg, 1);
  nn::Graph g;
  const auto out = forward(g, pp, cfg, params);
  CHECK(g.value(out.node_logits).rows() == 1);
  CHECK(g.value(out.node_logits).cols() == cfg.num_classes);
  CHECK_FALSE(out.edge_logits.valid());
  CHECK(out.out_edges.empty());
}

TEST_CASE("edgeconv layer against per-node enumeration") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int h = 3;
  auto rnd = [&](int r, int c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(gen);
    return m;
  };
  const Matrix x = rnd(4, h), w1 = rnd(2 * h, h), b1 = rnd(1, h), w2 = rnd(h, h), b2 = rnd(1, h);
  const SampledGraph path{4, {{0, 1}, {1, 2}}};  // node 3 isolated

  nn::Graph g;
  const EdgeConvWeights w{g.constant(w1), g.constant(b1), g.constant(w2), g.constant(b2)};
  const Matrix out = g.value(edgeconv_layer(g, g.constant(x), path, w));

  const std::vector<std::vector<int>> nbrs{{0, 1}, {1, 0, 2}, {2, 1}, {3}};
  for (int i = 0; i < 4; ++i) {
    Matrix best = Matrix::Constant(1, h, -1e300);
    for (int j : nbrs[i]) {
      Matrix z(1, 2 * h);
      z << x.row(i), x.row(j) - x.row(i);
      best = best.cwiseMax(mlp_row(z, w1, b1, w2, b2));
    }
    for (int c = 0; c < h; ++c) CHECK(out(i, c) == Approx(best(0, c)).epsilon(1e-14));
  }
  Matrix z3(1, 2 * h);
  z3 << x.row(3), Matrix::Zero(1, h);
  CHECK(out.row(3).isApprox(mlp_row(z3, w1, b1, w2, b2)));

  const SampledGraph doubled{4, {{0, 1}, {0, 1}, {1, 2}}};
  CHECK(g.value(edgeconv_layer(g, g.constant(x), doubled, w)) == out);

  Matrix same(2, h);
  same.row(0) = x.row(0);
  same.row(1) = x.row(0);
  const Matrix twin = g.value(edgeconv_layer(g, g.constant(same), SampledGraph{2, {{0, 1}}}, w));
  CHECK(twin.row(0) == twin.row(1));
  CHECK_THROWS_AS(edgeconv_layer(g, g.constant(x), SampledGraph{3, {}}, w), Error);
}

TEST_CASE("residual max") {
  nn::Graph g;
  Matrix x(1, 4), y(1, 4);
  x << 1, -2, 3, 0;
  y << 0, -1, 5, -3;
  const Matrix r = g.value(residual_max(g, g.constant(x), g.constant(y)));
  for (int c = 0; c < 4; ++c) CHECK(r(0, c) == std::max(x(0, c), y(0, c)));
  CHECK(g.value(residual_max(g, g.constant(x), g.constant(x - Matrix::Ones(1, 4)))) == x);
  CHECK(g.value(residual_max(g, g.constant(x), g.constant(x))) == x);
  CHECK(g.value(residual_max(g, g.constant(x), g.constant(y), false)) == y);
}

TEST_CASE("stacked residual layers never decrease an embedding coordinate") {
  const ModelConfig cfg = small_config();
  const auto pages = small_corpus(1, 5);
  const auto pp = prepare_page(pages[0], cfg, SamplerConfig{});
  auto params = init_model(cfg, 9);
  nn::Graph g;
  Var h = g.constant(Matrix::Random(static_cast<Eigen::Index>(pp.size()), cfg.hidden_dim));
  for (int l = 0; l < 3; ++l) {
    const std::string pre = "gnn." + std::to_string(l % 2);
    const EdgeConvWeights w{g.param(params.at(pre + ".fc1.weight")), g.param(params.at(pre + ".fc1.bias")),
                            g.param(params.at(pre + ".fc2.weight")), g.param(params.at(pre + ".fc2.bias"))};
    const Var next = residual_max(g, h, edgeconv_layer(g, h, pp.candidates, w));
    CHECK((g.value(next).array() >= g.value(h).array()).all());
    h = next;
  }
}

TEST_CASE("refresh_graph") {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix emb(20, 5), layout(20, 8);
  for (Eigen::Index i = 0; i < emb.size(); ++i) emb.data()[i] = u(gen);
  for (Eigen::Index i = 0; i < layout.size(); ++i) layout.data()[i] = u(gen);
  const SampledGraph geo{20, {{0, 19}, {3, 4}}};

  CHECK(refresh_graph(emb, layout, geo, GraphRefresh::Static, 4) == geo);

  // Brute force over concatenated rows.
  oracle::PairSet want;
  for (int i = 0; i < 20; ++i) {
    std::vector<std::pair<double, int>> d;
    for (int j = 0; j < 20; ++j) {
      if (j == i) continue;
      const double dist = (emb.row(i) - emb.row(j)).squaredNorm() + (layout.row(i) - layout.row(j)).squaredNorm();
      d.emplace_back(dist, j);
    }
    std::sort(d.begin(), d.end());
    for (int r = 0; r < 4; ++r) want.insert(oracle::ordered(i, d[r].second));
  }
  const auto dyn = refresh_graph(emb, layout, geo, GraphRefresh::DynamicKnn, 4);
  oracle::PairSet got;
  for (const auto& e : dyn.edges) got.insert({e.a, e.b});
  CHECK(got == want);

  const auto uni = refresh_graph(emb, layout, geo, GraphRefresh::Union, 4);
  want.insert({0, 19});
  want.insert({3, 4});
  oracle::PairSet got_u;
  for (const auto& e : uni.edges) got_u.insert({e.a, e.b});
  CHECK(got_u == want);

  const Matrix flat = Matrix::Zero(5, 3), lay0 = Matrix::Zero(5, 2);
  const auto tied = refresh_graph(flat, lay0, SampledGraph{5, {}}, GraphRefresh::DynamicKnn, 1);
  CHECK(tied.edges == std::vector<Edge>{{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  CHECK(refresh_graph(flat, lay0, SampledGraph{5, {}}, GraphRefresh::DynamicKnn, 1) == tied);
}

TEST_CASE("forward is deterministic and permutation-equivariant") {
  std::mt19937_64 gen(21);
  const auto boxes = oracle::random_boxes(gen, 15);
  std::vector<int> perm(boxes.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), gen);
  std::vector<NormBox> moved(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) moved[perm[i]] = boxes[i];

  ModelConfig cfg = small_config();
  auto params = init_model(cfg, 2);
  const auto a = prepare_page(page_from(boxes), cfg, SamplerConfig{});
  const auto b = prepare_page(page_from(moved), cfg, SamplerConfig{});

  nn::Graph g1, g2, g3;
  const auto oa = forward(g1, a, cfg, params);
  const auto oa2 = forward(g2, a, cfg, params);
  const auto ob = forward(g3, b, cfg, params);
  CHECK(g1.value(oa.node_logits) == g2.value(oa2.node_logits));
  CHECK(g1.value(oa.edge_logits) == g2.value(oa2.edge_logits));

  const Matrix& na = g1.value(oa.node_logits);
  const Matrix& nb = g3.value(ob.node_logits);
  for (std::size_t i = 0; i < boxes.size(); ++i) CHECK(nb.row(perm[i]).isApprox(na.row(i), 1e-10));

  REQUIRE(oa.out_edges.size() == ob.out_edges.size());
  const Matrix& ea = g1.value(oa.edge_logits);
  const Matrix& eb = g3.value(ob.edge_logits);
  for (std::size_t k = 0; k < oa.out_edges.size(); ++k) {
    const Edge e = oa.out_edges[k];
    const auto [pa, pb] = oracle::ordered(perm[e.a], perm[e.b]);
    const auto it = std::find(ob.out_edges.begin(), ob.out_edges.end(), Edge{pa, pb});
    REQUIRE(it != ob.out_edges.end());
    CHECK(eb.row(it - ob.out_edges.begin()).isApprox(ea.row(static_cast<Eigen::Index>(k)), 1e-10));
  }
}

TEST_CASE("edge gold labels for grouping and linking") {
  const GoldLabels gold{{0, 0, 1, 1}, {{0, 1}, {2}, {3}}, {{0, 1}}};
  const std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 1}, {2, 3}};
  CHECK(edge_gold(gold, 4, edges, EdgeHeadMode::Symmetric) == std::vector<std::int32_t>{1, 0, 0, 0});
  CHECK(edge_gold(gold, 4, edges, EdgeHeadMode::Directed) == std::vector<std::int32_t>{0, 1, 0, 0});
}

TEST_CASE("loss: uniform and confident logits") {
  PreparedPage page;
  page.has_labels = true;
  page.node_targets = {0, 1, 2, 3};
  page.edge_targets = {0, 1};
  nn::Graph g;
  ForwardOutput out;
  out.node_logits = g.constant(Matrix::Zero(4, 4));
  out.edge_logits = g.constant(Matrix::Zero(2, 2));
  CHECK(g.value(loss(g, out, page))(0, 0) == Approx(std::log(4.0) + std::log(2.0)).epsilon(1e-14));
  CHECK(g.value(loss(g, out, page, {0.5, 1.0}))(0, 0) == Approx(std::log(4.0) + 0.5 * std::log(2.0)).epsilon(1e-14));

  Matrix sure = Matrix::Constant(4, 4, -40.0);
  for (int i = 0; i < 4; ++i) sure(i, i) = 40.0;
  Matrix esure(2, 2);
  esure << 40, -40, -40, 40;
  out.node_logits = g.constant(sure);
  out.edge_logits = g.constant(esure);
  CHECK(g.value(loss(g, out, page))(0, 0) < 1e-30);

  page.has_labels = false;
  CHECK_THROWS_AS(loss(g, out, page), Error);
}

TEST_CASE("full model gradient on a small page") {
  ModelConfig cfg = small_config(6);
  const Page page = gradcheck_page(7, 6, 1e-3);
  const auto pp = prepare_page(page, cfg, SamplerConfig{});
  REQUIRE(pp.size() == 6);
  std::vector<PreparedPage> one{pp};
  auto params = initialize_for_training(cfg, 11, one);
  const nn::Objective f = [&](nn::ParamStore& ps, bool backward) {
    nn::Graph g;
    const auto out = forward(g, pp, cfg, ps);
    const Var l = loss(g, out, pp);
    if (backward) g.backward(l);
    return g.value(l)(0, 0);
  };
  const auto rep = nn::grad_check(params, f);
  CHECK(rep.coords_checked == params.trainable_scalars());
  CHECK(rep.max_rel_error < 1e-4);
}

TEST_CASE("training: lr = 0 leaves parameters unchanged") {
  const ModelConfig cfg = small_config();
  const auto prepared = prepare_all(small_corpus(3, 2), cfg);
  TrainOptions opts;
  opts.epochs = 3;
  opts.adam.lr = 0.0;
  opts.seed = 4;
  const auto res = train(prepared, cfg, opts);
  CHECK(res.params.values_equal(initialize_for_training(cfg, 4, prepared)));
  CHECK(res.log.size() == 3);
}

TEST_CASE("training: full-batch descent on a single page") {
  const ModelConfig cfg = small_config();
  const auto prepared = prepare_all(small_corpus(1, 3), cfg);
  TrainOptions opts;
  opts.epochs = 40;
  opts.batch_size = 1;
  opts.warmup_epochs = 0;
  opts.adam.lr = 1e-4;
  opts.shuffle = false;
  const auto res = train(prepared, cfg, opts);
  for (std::size_t e = 1; e < res.log.size(); ++e) CHECK(res.log[e].loss <= res.log[e - 1].loss + 1e-6);
  CHECK(res.log.back().loss < res.log.front().loss);
}

TEST_CASE("training: identical runs, linear warm-up, errors") {
  const ModelConfig cfg = small_config();
  const auto prepared = prepare_all(small_corpus(5, 6), cfg);
  TrainOptions opts;
  opts.epochs = 4;
  opts.batch_size = 2;
  opts.warmup_epochs = 2;
  opts.adam.lr = 1e-3;
  opts.seed = 8;
  const auto a = train(prepared, cfg, opts);
  const auto b = train(prepared, cfg, opts);
  CHECK(a.params.values_equal(b.params));
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t e = 0; e < a.log.size(); ++e) CHECK(to_json(a.log[e]).dump() == to_json(b.log[e]).dump());
  // Three steps per epoch, six warm-up steps.
  CHECK(a.log[0].lr == Approx(1e-3 * 3.0 / 6.0));
  CHECK(a.log[1].lr == Approx(1e-3));
  CHECK(a.state.step == 12);

  CHECK_THROWS_AS(train(std::vector<PreparedPage>{}, cfg, opts), Error);
  auto unlabeled = prepared;
  unlabeled[0].has_labels = false;
  CHECK_THROWS_AS(train(unlabeled, cfg, opts), Error);
}

TEST_CASE("page preparation rejects categories beyond the model") {
  ModelConfig cfg = small_config();
  cfg.num_classes = 2;
  const auto pages = small_corpus(3, 1);
  bool raised = false;
  for (const auto& p : pages) {
    try {
      prepare_page(p, cfg, SamplerConfig{});
    } catch (const Error& e) {
      raised = e.kind() == ErrorKind::ConfigMismatch;
    }
  }
  CHECK(raised);
}

TEST_CASE("optional log compression of relationship inputs") {
  ModelConfig on = small_config(), off = small_config();
  CHECK_FALSE(off.compress_rel_inputs);
  on.compress_rel_inputs = true;
  const auto pages = small_corpus(1, 12);
  const auto a = prepare_page(pages[0], on, SamplerConfig{});
  const auto b = prepare_page(pages[0], off, SamplerConfig{});
  REQUIRE(a.edge_static.rows() == b.edge_static.rows());
  const Eigen::Index first = on.edge_features.rope_dim;
  for (Eigen::Index r = 0; r < a.edge_static.rows(); ++r) {
    for (Eigen::Index c = 0; c < first; ++c) CHECK(a.edge_static(r, c) == b.edge_static(r, c));
    for (Eigen::Index c = first; c < first + 18; ++c) {
      const double raw = b.edge_static(r, c);
      CHECK(a.edge_static(r, c) == Approx(std::copysign(std::log1p(std::abs(raw)), raw)).epsilon(1e-15));
    }
  }
}
