#include "features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "errors.hpp"

namespace p2g {

RelDelta rel_delta(const NormBox& s, const NormBox& o) {
  check_norm_box(s);
  check_norm_box(o);
  const double xs = s.xctr(), ys = s.yctr(), ws = s.width(), hs = s.height();
  const double xo = o.xctr(), yo = o.yctr(), wo = o.width(), ho = o.height();
  return RelDelta{(xs - xo) / ws, (ys - yo) / hs, std::log(ws / wo), std::log(hs / ho), (xo - xs) / wo, (yo - ys) / ho};
}

RelFeature rel_feature(const NormBox& s, const NormBox& o) {
  const NormBox r = min_bounding_rect(s, o);
  RelFeature out{};
  const RelDelta parts[3] = {rel_delta(s, o), rel_delta(s, r), rel_delta(o, r)};
  for (int p = 0; p < 3; ++p) std::copy(parts[p].begin(), parts[p].end(), out.begin() + 6 * p);
  return out;
}

std::vector<int> reading_order_codes(NodeId /*pivot*/, std::span<const NodeId> neighbors,
                                     std::span<const NormBox> boxes) {
  std::vector<std::size_t> order(neighbors.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const NormBox& ba = boxes[neighbors[a]];
    const NormBox& bb = boxes[neighbors[b]];
    return std::make_tuple(ba.yctr(), ba.xctr(), neighbors[a]) < std::make_tuple(bb.yctr(), bb.xctr(), neighbors[b]);
  });
  std::vector<int> codes(neighbors.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) codes[order[rank]] = static_cast<int>(rank);
  return codes;
}

std::vector<double> sinusoidal_encode(int index, int dim) {
  if (dim <= 0 || dim % 2 != 0) fail(ErrorKind::OddDim, "sinusoidal encoding needs a positive even dim, got " + std::to_string(dim));
  if (index < 0) fail(ErrorKind::InvalidConfig, "reading-order index must be non-negative");
  std::vector<double> out(static_cast<std::size_t>(dim));
  for (int t = 0; t < dim / 2; ++t) {
    const double freq = std::pow(10000.0, 2.0 * t / dim);
    out[2 * t] = std::sin(index / freq);
    out[2 * t + 1] = std::cos(index / freq);
  }
  return out;
}

namespace {

// Border-clamped bilinear sample at continuous feature-map coordinates.
double bilinear(const FeatureMap& map, int c, double y, double x) {
  y = std::clamp(y, 0.0, static_cast<double>(map.height - 1));
  x = std::clamp(x, 0.0, static_cast<double>(map.width - 1));
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  const int y1 = std::min(y0 + 1, map.height - 1);
  const int x1 = std::min(x0 + 1, map.width - 1);
  const double ly = y - y0, lx = x - x0;
  return map.at(c, y0, x0) * (1 - ly) * (1 - lx) + map.at(c, y0, x1) * (1 - ly) * lx +
         map.at(c, y1, x0) * ly * (1 - lx) + map.at(c, y1, x1) * ly * lx;
}

}  // namespace

std::vector<double> roi_align(const FeatureMap& map, const NormBox& box, int out_size, int sampling_ratio) {
  if (map.empty()) fail(ErrorKind::EmptyFeatureMap, "roi_align on an empty feature map");
  if (out_size < 1 || sampling_ratio < 1) fail(ErrorKind::InvalidConfig, "roi_align needs out_size >= 1 and sampling_ratio >= 1");
  // Half-pixel convention: pixel k covers [k, k+1) and its center is at k + 0.5.
  const double x0 = box.xmin * map.width - 0.5;
  const double y0 = box.ymin * map.height - 0.5;
  const double bin_w = box.width() * map.width / out_size;
  const double bin_h = box.height() * map.height / out_size;
  const double samples = static_cast<double>(sampling_ratio) * sampling_ratio;
  std::vector<double> out(static_cast<std::size_t>(out_size) * out_size * map.channels, 0.0);
  for (int py = 0; py < out_size; ++py) {
    for (int px = 0; px < out_size; ++px) {
      for (int c = 0; c < map.channels; ++c) {
        double acc = 0.0;
        for (int iy = 0; iy < sampling_ratio; ++iy) {
          const double y = y0 + py * bin_h + (iy + 0.5) * bin_h / sampling_ratio;
          for (int ix = 0; ix < sampling_ratio; ++ix) {
            const double x = x0 + px * bin_w + (ix + 0.5) * bin_w / sampling_ratio;
            acc += bilinear(map, c, y, x);
          }
        }
        out[(static_cast<std::size_t>(py) * out_size + px) * map.channels + c] = acc / samples;
      }
    }
  }
  return out;
}

RawPixelProvider::RawPixelProvider(int size, int channels) : size_(size), channels_(channels) {
  if (size_ < 1) fail(ErrorKind::InvalidConfig, "raw pixel provider size must be positive");
  if (channels_ != 1 && channels_ != 3) fail(ErrorKind::InvalidConfig, "raw pixel provider supports 1 or 3 channels");
}

FeatureMap RawPixelProvider::from_image(const FeatureMap& image) const {
  if (image.empty()) fail(ErrorKind::EmptyFeatureMap, "page image is empty");
  FeatureMap src = image;
  if (channels_ == 1) {
    src = to_grayscale(src);
  } else if (src.channels == 1) {
    FeatureMap rgb(3, src.height, src.width);
    for (int c = 0; c < 3; ++c) std::copy(src.data.begin(), src.data.end(), rgb.data.begin() + c * src.data.size());
    src = std::move(rgb);
  }
  return resize_bilinear(src, size_, size_);
}

FeatureMap RawPixelProvider::feature_map(const Page& page) const {
  if (!page.image_path) fail(ErrorKind::IoError, "page '" + page.page_id + "' has no image but the raw_pixel provider is configured");
  return from_image(read_pnm(*page.image_path));
}

std::vector<double> assemble_node_input(std::span<const double> layout_vec, std::span<const double> image_feat,
                                        const NodeInputShape& shape) {
  if (layout_vec.size() != shape.layout_width || image_feat.size() != shape.image_width) {
    fail(ErrorKind::ShapeMismatch, "node input expects image " + std::to_string(shape.image_width) + " + layout " +
                                       std::to_string(shape.layout_width) + ", got " + std::to_string(image_feat.size()) +
                                       " + " + std::to_string(layout_vec.size()));
  }
  std::vector<double> out(image_feat.begin(), image_feat.end());
  out.insert(out.end(), layout_vec.begin(), layout_vec.end());
  return out;
}

void EdgeFeatureConfig::validate() const {
  if (!use_pair && !use_rope && !use_rel && !use_polar && !use_node_class) {
    fail(ErrorKind::AllPartsDisabled, "at least one edge feature part must be enabled");
  }
  if (use_rope && (rope_dim <= 0 || rope_dim % 2 != 0)) {
    fail(ErrorKind::OddDim, "rope_dim must be a positive even number, got " + std::to_string(rope_dim));
  }
}

std::size_t edge_static_width(const EdgeFeatureConfig& cfg) {
  return (cfg.use_rope ? static_cast<std::size_t>(cfg.rope_dim) : 0) + (cfg.use_rel ? 18 : 0) + (cfg.use_polar ? 2 : 0);
}

std::size_t edge_input_width(const EdgeFeatureConfig& cfg, std::size_t hidden, std::size_t n_classes) {
  return (cfg.use_pair ? 2 * hidden : 0) + edge_static_width(cfg) + (cfg.use_node_class ? 2 * n_classes : 0);
}

std::array<double, 2> polar_feature(const NormBox& s, const NormBox& o) {
  const double dx = o.xctr() - s.xctr();
  const double dy = o.yctr() - s.yctr();
  return {std::hypot(dx, dy), std::atan2(dy, dx)};
}

std::vector<double> edge_static_features(const NormBox& s, const NormBox& o, int code, const EdgeFeatureConfig& cfg) {
  std::vector<double> out;
  out.reserve(edge_static_width(cfg));
  if (cfg.use_rope) {
    const auto enc = sinusoidal_encode(code, cfg.rope_dim);
    out.insert(out.end(), enc.begin(), enc.end());
  }
  if (cfg.use_rel) {
    const auto rel = rel_feature(s, o);
    out.insert(out.end(), rel.begin(), rel.end());
  }
  if (cfg.use_polar) {
    const auto p = polar_feature(s, o);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<double> assemble_edge_input(std::span<const double> emb_i, std::span<const double> emb_j, int code,
                                        std::span<const double> rel, const EdgeFeatureConfig& cfg) {
  cfg.validate();
  if (emb_i.size() != emb_j.size()) fail(ErrorKind::ShapeMismatch, "pair embeddings differ in length");
  if (cfg.use_rel && rel.size() != 18) fail(ErrorKind::ShapeMismatch, "relationship feature must have 18 entries");
  std::vector<double> out;
  if (cfg.use_pair) {
    out.insert(out.end(), emb_i.begin(), emb_i.end());
    out.insert(out.end(), emb_j.begin(), emb_j.end());
  }
  if (cfg.use_rope) {
    const auto enc = sinusoidal_encode(code, cfg.rope_dim);
    out.insert(out.end(), enc.begin(), enc.end());
  }
  if (cfg.use_rel) out.insert(out.end(), rel.begin(), rel.end());
  return out;
}

}  // namespace p2g
