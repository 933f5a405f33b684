#include "run_config.hpp"

#include <algorithm>
#include <set>
#include <type_traits>

#include "errors.hpp"

namespace p2g {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  fail(ErrorKind::InvalidConfig, path + ": " + what);
}

template <class E>
using NameTable = std::vector<std::pair<const char*, E>>;

template <class E>
E enum_from(const std::string& path, const std::string& s, const NameTable<E>& table) {
  for (const auto& [name, v] : table) {
    if (s == name) return v;
  }
  std::string options;
  for (const auto& [name, v] : table) options += (options.empty() ? "" : "|") + std::string(name);
  bad(path, "unknown value '" + s + "' (expected " + options + ")");
}

template <class E>
std::string enum_name(E v, const NameTable<E>& table) {
  for (const auto& [name, x] : table) {
    if (x == v) return name;
  }
  return "?";
}

const NameTable<BoxInfoMode> kBoxInfo{{"four", BoxInfoMode::Four}, {"eight", BoxInfoMode::Eight}};
const NameTable<ImageProviderKind> kProviders{{"none", ImageProviderKind::None},
                                              {"raw_pixel", ImageProviderKind::RawPixel}};
const NameTable<GraphRefresh> kRefresh{
    {"static", GraphRefresh::Static}, {"dynamic_knn", GraphRefresh::DynamicKnn}, {"union", GraphRefresh::Union}};
const NameTable<EdgeHeadMode> kEdgeHead{{"symmetric", EdgeHeadMode::Symmetric}, {"directed", EdgeHeadMode::Directed}};
const NameTable<SamplerKind> kSamplers{
    {"directional", SamplerKind::Directional}, {"knn", SamplerKind::Knn}, {"beta", SamplerKind::BetaSkeleton}};
const NameTable<DataSource> kSources{{"synth", DataSource::Synth}, {"files", DataSource::Files}};
const NameTable<DataFormat> kFormats{{"page", DataFormat::Page}, {"funsd", DataFormat::Funsd}};
const NameTable<FunsdLevel> kLevels{{"word", FunsdLevel::Word}, {"entity", FunsdLevel::Entity}};

// Strict reader over one JSON object: every key must be consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad(path_, "expected an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    const json* v = take(key);
    if (!v) return;
    const std::string p = path_ + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v->is_boolean()) bad(p, "expected true or false");
      out = v->get<bool>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v->is_number_integer() || v->get<long long>() < 0) bad(p, "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v->is_number_integer()) bad(p, "expected an integer");
      out = v->get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v->is_number()) bad(p, "expected a number");
      out = v->get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v->is_string()) bad(p, "expected a string");
      out = v->get<std::string>();
    } else {
      static_assert(sizeof(T) == 0, "unsupported type");
    }
  }

  template <class E>
  void read_enum(const char* key, E& out, const NameTable<E>& table) {
    std::string s;
    read(key, s);
    if (!s.empty()) out = enum_from(path_ + "." + key, s, table);
  }

  const json* take(const char* key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string child(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.contains(k)) bad(path_ + "." + k, "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

ModelConfig model_from(const json& j, const std::string& path) {
  ModelConfig m;
  Section s(j, path);
  s.read_enum("box_info", m.box_info, kBoxInfo);
  s.read_enum("image_provider", m.image_provider, kProviders);
  s.read("image_size", m.image_size);
  s.read("image_channels", m.image_channels);
  s.read("roi_output", m.roi_output);
  s.read("roi_sampling_ratio", m.roi_sampling_ratio);
  s.read("hidden_dim", m.hidden_dim);
  s.read("gnn_layers", m.gnn_layers);
  if (const json* r = s.take("graph_refresh")) {
    if (!r->is_array()) bad(s.child("graph_refresh"), "expected an array of modes");
    m.graph_refresh.clear();
    for (std::size_t i = 0; i < r->size(); ++i) {
      const std::string p = s.child("graph_refresh") + "[" + std::to_string(i) + "]";
      if (!(*r)[i].is_string()) bad(p, "expected a string");
      m.graph_refresh.push_back(enum_from(p, (*r)[i].get<std::string>(), kRefresh));
    }
  } else if (static_cast<int>(m.graph_refresh.size()) != m.gnn_layers) {
    // Default schedule: first layer static, later layers union.
    m.graph_refresh.assign(std::max(1, m.gnn_layers), GraphRefresh::Union);
    m.graph_refresh[0] = GraphRefresh::Static;
  }
  s.read("dynamic_k", m.dynamic_k);
  s.read("gnn_residual", m.gnn_residual);
  s.read("gnn", m.gnn);
  if (const json* e = s.take("edge_features")) {
    Section es(*e, s.child("edge_features"));
    es.read("use_pair", m.edge_features.use_pair);
    es.read("use_rope", m.edge_features.use_rope);
    es.read("use_rel", m.edge_features.use_rel);
    es.read("use_polar", m.edge_features.use_polar);
    es.read("use_node_class", m.edge_features.use_node_class);
    es.read("rope_dim", m.edge_features.rope_dim);
    es.finish();
  }
  s.read("num_classes", m.num_classes);
  s.read_enum("edge_head", m.edge_head, kEdgeHead);
  s.read("normalize_inputs", m.normalize_inputs);
  s.read("compress_rel_inputs", m.compress_rel_inputs);
  s.finish();
  m.validate();
  return m;
}

SamplerConfig sampler_from(const json& j, const std::string& path) {
  SamplerConfig c;
  Section s(j, path);
  s.read_enum("strategy", c.kind, kSamplers);
  s.read("horizontal_k", c.directional.horizontal_k);
  s.read("vertical_k", c.directional.vertical_k);
  s.read("band_overlap_min", c.directional.band_overlap_min);
  s.read("knn_k", c.knn_k);
  s.read("beta", c.beta);
  s.finish();
  if (c.directional.horizontal_k < 1 || c.directional.vertical_k < 1) bad(path, "horizontal_k and vertical_k must be >= 1");
  if (!(c.directional.band_overlap_min >= 0.0 && c.directional.band_overlap_min <= 1.0)) {
    bad(path + ".band_overlap_min", "must lie in [0, 1]");
  }
  if (c.knn_k < 1) bad(path + ".knn_k", "must be >= 1");
  if (!(c.beta > 0.0 && c.beta <= 1.0)) bad(path + ".beta", "must lie in (0, 1]");
  return c;
}

nn::AdamHyper adam_from(const json& j, const std::string& path) {
  nn::AdamHyper h;
  Section s(j, path);
  s.read("lr", h.lr);
  s.read("beta1", h.beta1);
  s.read("beta2", h.beta2);
  s.read("eps", h.eps);
  s.read("weight_decay", h.weight_decay);
  s.finish();
  if (!(h.lr >= 0.0)) bad(path + ".lr", "must be >= 0");
  if (!(h.beta1 >= 0.0 && h.beta1 < 1.0) || !(h.beta2 >= 0.0 && h.beta2 < 1.0)) bad(path, "betas must lie in [0, 1)");
  if (!(h.eps > 0.0)) bad(path + ".eps", "must be positive");
  if (!(h.weight_decay >= 0.0)) bad(path + ".weight_decay", "must be >= 0");
  return h;
}

}  // namespace

SamplerKind parse_sampler_kind(const std::string& s) { return enum_from("strategy", s, kSamplers); }
std::string sampler_kind_name(SamplerKind k) { return enum_name(k, kSamplers); }
FunsdLevel parse_funsd_level(const std::string& s) { return enum_from("level", s, kLevels); }

json model_config_to_json(const ModelConfig& m) {
  json refresh = json::array();
  for (auto r : m.graph_refresh) refresh.push_back(enum_name(r, kRefresh));
  const auto& e = m.edge_features;
  return json{{"box_info", enum_name(m.box_info, kBoxInfo)},
              {"image_provider", enum_name(m.image_provider, kProviders)},
              {"image_size", m.image_size},
              {"image_channels", m.image_channels},
              {"roi_output", m.roi_output},
              {"roi_sampling_ratio", m.roi_sampling_ratio},
              {"hidden_dim", m.hidden_dim},
              {"gnn_layers", m.gnn_layers},
              {"graph_refresh", refresh},
              {"dynamic_k", m.dynamic_k},
              {"gnn_residual", m.gnn_residual},
              {"gnn", m.gnn},
              {"edge_features",
               {{"use_pair", e.use_pair},
                {"use_rope", e.use_rope},
                {"use_rel", e.use_rel},
                {"use_polar", e.use_polar},
                {"use_node_class", e.use_node_class},
                {"rope_dim", e.rope_dim}}},
              {"num_classes", m.num_classes},
              {"edge_head", enum_name(m.edge_head, kEdgeHead)},
              {"normalize_inputs", m.normalize_inputs},
              {"compress_rel_inputs", m.compress_rel_inputs}};
}

ModelConfig model_config_from_json(const json& doc) { return model_from(doc, "model"); }

json sampler_config_to_json(const SamplerConfig& c) {
  return json{{"strategy", sampler_kind_name(c.kind)},
              {"horizontal_k", c.directional.horizontal_k},
              {"vertical_k", c.directional.vertical_k},
              {"band_overlap_min", c.directional.band_overlap_min},
              {"knn_k", c.knn_k},
              {"beta", c.beta}};
}

SamplerConfig sampler_config_from_json(const json& doc) { return sampler_from(doc, "sampler"); }

json adam_to_json(const nn::AdamHyper& h) {
  return json{{"lr", h.lr}, {"beta1", h.beta1}, {"beta2", h.beta2}, {"eps", h.eps}, {"weight_decay", h.weight_decay}};
}

nn::AdamHyper adam_from_json(const json& doc) { return adam_from(doc, "optimizer"); }

std::vector<std::string> model_config_diff(const ModelConfig& a, const ModelConfig& b) {
  const json fa = model_config_to_json(a).flatten();
  const json fb = model_config_to_json(b).flatten();
  std::set<std::string> keys;
  for (const auto& [k, v] : fa.items()) keys.insert(k);
  for (const auto& [k, v] : fb.items()) keys.insert(k);
  std::vector<std::string> out;
  for (const auto& k : keys) {
    const json va = fa.value(k, json());
    const json vb = fb.value(k, json());
    if (va == vb) continue;
    std::string name = "model" + k;
    std::replace(name.begin(), name.end(), '/', '.');
    out.push_back(name + " (" + va.dump() + " vs " + vb.dump() + ")");
  }
  return out;
}

RunConfig run_config_from_json(const json& doc) {
  RunConfig c;
  Section root(doc, "$");
  root.read("seed", c.seed);
  root.read("output_dir", c.output_dir);

  if (const json* d = root.take("data")) {
    Section s(*d, "$.data");
    s.read_enum("source", c.data.source, kSources);
    s.read_enum("format", c.data.format, kFormats);
    s.read_enum("level", c.data.level, kLevels);
    s.read("train_dir", c.data.train_dir);
    s.read("eval_dir", c.data.eval_dir);
    s.finish();
    if (c.data.source == DataSource::Files && c.data.train_dir.empty()) {
      bad("$.data.train_dir", "required when source is 'files'");
    }
  }

  if (const json* sy = root.take("synth")) {
    Section s(*sy, "$.synth");
    SynthConfig& g = c.synth.generator;
    s.read("pages", g.pages);
    s.read("eval_pages", c.synth.eval_pages);
    s.read("page_width", g.page_width);
    s.read("page_height", g.page_height);
    s.read("columns", g.columns);
    s.read("paragraphs_min", g.paragraphs_min);
    s.read("paragraphs_max", g.paragraphs_max);
    s.read("lines_min", g.lines_min);
    s.read("lines_max", g.lines_max);
    s.read("words_per_line_min", g.words_per_line_min);
    s.read("words_per_line_max", g.words_per_line_max);
    s.read("right_aligned_fraction", g.right_aligned_fraction);
    s.read("list_fraction", g.list_fraction);
    s.read("header_fraction", g.header_fraction);
    s.read("jitter", g.jitter);
    s.read("render_scale", c.synth.render_scale);
    s.finish();
    if (c.synth.eval_pages < 0) bad("$.synth.eval_pages", "must be >= 0");
    if (c.synth.render_scale < 0.0) bad("$.synth.render_scale", "must be >= 0");
  }
  c.synth.generator.seed = c.seed;
  c.synth.generator.validate();

  if (const json* s = root.take("sampler")) c.sampler = sampler_from(*s, "$.sampler");
  if (const json* m = root.take("model")) c.model = model_from(*m, "$.model");
  if (const json* o = root.take("optimizer")) c.optimizer = adam_from(*o, "$.optimizer");

  if (const json* t = root.take("train")) {
    Section s(*t, "$.train");
    s.read("epochs", c.train.epochs);
    s.read("batch_size", c.train.batch_size);
    s.read("warmup_epochs", c.train.warmup_epochs);
    s.read("edge_loss_weight", c.train.edge_loss_weight);
    s.read("pos_weight", c.train.pos_weight);
    s.read("shuffle", c.train.shuffle);
    s.read("edge_threshold", c.train.edge_threshold);
    s.read("checkpoint_every", c.train.checkpoint_every);
    s.finish();
    if (c.train.epochs < 0) bad("$.train.epochs", "must be >= 0");
    if (c.train.batch_size < 1) bad("$.train.batch_size", "must be >= 1");
    if (c.train.warmup_epochs < 0) bad("$.train.warmup_epochs", "must be >= 0");
    if (!(c.train.edge_threshold > 0.0 && c.train.edge_threshold < 1.0)) {
      bad("$.train.edge_threshold", "must lie in (0, 1)");
    }
    if (!(c.train.pos_weight > 0.0) || !(c.train.edge_loss_weight >= 0.0)) bad("$.train", "loss weights out of range");
  }

  if (const json* gc = root.take("gradcheck")) {
    Section s(*gc, "$.gradcheck");
    s.read("nodes", c.gradcheck.nodes);
    s.read("step", c.gradcheck.step);
    s.read("max_coords_per_param", c.gradcheck.max_coords_per_param);
    s.read("jitter", c.gradcheck.jitter);
    s.finish();
    if (c.gradcheck.nodes < 2) bad("$.gradcheck.nodes", "must be >= 2");
    if (!(c.gradcheck.step > 0.0)) bad("$.gradcheck.step", "must be positive");
  }
  root.finish();
  c.model.validate();
  return c;
}

json to_json(const RunConfig& c) {
  const SynthConfig& g = c.synth.generator;
  return json{
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"data",
       {{"source", enum_name(c.data.source, kSources)},
        {"format", enum_name(c.data.format, kFormats)},
        {"level", enum_name(c.data.level, kLevels)},
        {"train_dir", c.data.train_dir},
        {"eval_dir", c.data.eval_dir}}},
      {"synth",
       {{"pages", g.pages},
        {"eval_pages", c.synth.eval_pages},
        {"page_width", g.page_width},
        {"page_height", g.page_height},
        {"columns", g.columns},
        {"paragraphs_min", g.paragraphs_min},
        {"paragraphs_max", g.paragraphs_max},
        {"lines_min", g.lines_min},
        {"lines_max", g.lines_max},
        {"words_per_line_min", g.words_per_line_min},
        {"words_per_line_max", g.words_per_line_max},
        {"right_aligned_fraction", g.right_aligned_fraction},
        {"list_fraction", g.list_fraction},
        {"header_fraction", g.header_fraction},
        {"jitter", g.jitter},
        {"render_scale", c.synth.render_scale}}},
      {"sampler", sampler_config_to_json(c.sampler)},
      {"model", model_config_to_json(c.model)},
      {"optimizer", adam_to_json(c.optimizer)},
      {"train",
       {{"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"warmup_epochs", c.train.warmup_epochs},
        {"edge_loss_weight", c.train.edge_loss_weight},
        {"pos_weight", c.train.pos_weight},
        {"shuffle", c.train.shuffle},
        {"edge_threshold", c.train.edge_threshold},
        {"checkpoint_every", c.train.checkpoint_every}}},
      {"gradcheck",
       {{"nodes", c.gradcheck.nodes},
        {"step", c.gradcheck.step},
        {"max_coords_per_param", c.gradcheck.max_coords_per_param},
        {"jitter", c.gradcheck.jitter}}},
  };
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  try {
    return run_config_from_json(doc);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.detail());
  }
}

}  // namespace p2g
