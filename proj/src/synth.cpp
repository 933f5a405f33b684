#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "errors.hpp"
#include "tensor.hpp"

namespace p2g {

namespace {

constexpr double kMargin = 60.0;
constexpr double kColumnGap = 40.0;
constexpr double kFooterZone = 50.0;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * nn::unit_uniform(gen_()); }
  int integer(int lo, int hi) { return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  bool chance(double p) { return nn::unit_uniform(gen_()) < p; }

 private:
  std::mt19937_64 gen_;
};

class PageBuilder {
 public:
  PageBuilder(const SynthConfig& cfg, Rng& rng) : cfg_(cfg), rng_(rng) {}

  int open_group(int category) {
    labels_.groups.emplace_back();
    category_ = category;
    return static_cast<int>(labels_.groups.size()) - 1;
  }

  void word(double x0, double y0, double w, double h) {
    const double j = cfg_.jitter * h;
    const double dx = rng_.uniform(-j, j);
    const double dy = rng_.uniform(-j, j);
    TextBox tb;
    tb.id = static_cast<NodeId>(boxes_.size());
    tb.bbox = {x0 + dx, y0 + dy, x0 + dx + w, y0 + dy + h};
    labels_.groups.back().push_back(tb.id);
    labels_.node_category.push_back(category_);
    boxes_.push_back(std::move(tb));
  }

  /// Lays `n` words across [x_left, x_left + width] with word gaps of about a third of h.
  void line(double x_left, double width, int n, double y, double h) {
    const double gap = h * rng_.uniform(0.3, 0.4);
    const double min_word = 0.8 * h;
    n = std::max(1, std::min(n, static_cast<int>((width + gap) / (min_word + gap))));
    std::vector<double> weights(n);
    double total = 0.0;
    for (double& w : weights) total += (w = rng_.uniform(0.6, 1.4));
    const double ink = width - (n - 1) * gap;
    double x = x_left;
    for (int k = 0; k < n; ++k) {
      const double w = std::max(min_word, ink * weights[k] / total);
      word(x, y, w, h);
      x += w + gap;
    }
  }

  Page finish(std::string page_id) {
    Page page;
    page.page_id = std::move(page_id);
    page.width_px = cfg_.page_width;
    page.height_px = cfg_.page_height;
    page.category_names = kSynthCategories;
    for (auto& b : boxes_) {
      b.bbox.xmin = std::clamp(b.bbox.xmin, 0.0, double(cfg_.page_width));
      b.bbox.xmax = std::clamp(b.bbox.xmax, 0.0, double(cfg_.page_width));
      b.bbox.ymin = std::clamp(b.bbox.ymin, 0.0, double(cfg_.page_height));
      b.bbox.ymax = std::clamp(b.bbox.ymax, 0.0, double(cfg_.page_height));
    }
    page.boxes = std::move(boxes_);
    page.labels = std::move(labels_);
    return page;
  }

 private:
  const SynthConfig& cfg_;
  Rng& rng_;
  std::vector<TextBox> boxes_;
  GoldLabels labels_;
  int category_ = 0;
};

struct Column {
  double x = 0;
  double width = 0;
};

double words_for(Rng& rng, const SynthConfig& cfg) { return rng.integer(cfg.words_per_line_min, cfg.words_per_line_max); }

// Each block writer returns the y just below its last line.

double write_title(PageBuilder& pb, Rng& rng, const SynthConfig& cfg, double y) {
  const double h = 30.0;
  pb.open_group(kTitle);
  const int lines = rng.chance(0.3) ? 2 : 1;
  for (int l = 0; l < lines; ++l) {
    const double width = cfg.page_width * rng.uniform(0.35, 0.65);
    pb.line(0.5 * (cfg.page_width - width), width, rng.integer(2, 5), y, h);
    y += 1.5 * h;
  }
  return y - 0.5 * h;
}

double write_header(PageBuilder& pb, Rng& rng, const Column& col, double y) {
  const double h = 20.0;
  pb.open_group(kSectionHeader);
  pb.line(col.x, col.width * rng.uniform(0.25, 0.6), rng.integer(2, 4), y, h);
  return y + h;
}

double write_paragraph(PageBuilder& pb, Rng& rng, const SynthConfig& cfg, const Column& col, double y) {
  const double h = rng.chance(0.5) ? 14.0 : 15.0;
  const bool right_aligned = rng.chance(cfg.right_aligned_fraction);
  const int lines = rng.integer(cfg.lines_min, cfg.lines_max);
  pb.open_group(kText);
  for (int l = 0; l < lines; ++l) {
    const int n = static_cast<int>(words_for(rng, cfg));
    if (right_aligned) {
      const double width = col.width * rng.uniform(0.4, 0.9);
      pb.line(col.x + col.width - width, width, std::max(1, static_cast<int>(std::lround(n * width / col.width))), y, h);
    } else if (l + 1 < lines) {
      pb.line(col.x, col.width, n, y, h);
    } else {
      const double frac = rng.uniform(0.3, 0.9);
      pb.line(col.x, col.width * frac, std::max(1, static_cast<int>(std::lround(n * frac))), y, h);
    }
    y += 1.5 * h;
  }
  return y - 0.5 * h;
}

double write_list(PageBuilder& pb, Rng& rng, const SynthConfig& cfg, const Column& col, double y) {
  const double h = 12.0;
  const int items = rng.integer(2, 4);
  pb.open_group(kList);
  const double text_x = col.x + 30.0;
  const double text_w = col.width - 30.0;
  for (int it = 0; it < items; ++it) {
    pb.word(col.x + 10.0, y, 8.0, h);
    const int lines = rng.integer(1, 2);
    for (int l = 0; l < lines; ++l) {
      const int n = static_cast<int>(words_for(rng, cfg));
      const double frac = (l + 1 < lines) ? 1.0 : rng.uniform(0.4, 1.0);
      pb.line(text_x, text_w * frac, std::max(1, static_cast<int>(std::lround(n * frac))), y, h);
      y += 1.5 * h;
    }
  }
  return y - 0.5 * h;
}

void write_footer(PageBuilder& pb, Rng& rng, const SynthConfig& cfg) {
  const double h = 10.0;
  pb.open_group(kFooter);
  const double width = rng.uniform(120.0, 250.0);
  pb.line(0.5 * (cfg.page_width - width), width, rng.integer(2, 4), cfg.page_height - kMargin + 10.0, h);
}

Page generate_page(const SynthConfig& cfg, std::uint64_t page_seed, const std::string& page_id) {
  Rng rng(page_seed);
  PageBuilder pb(cfg, rng);

  double y = write_title(pb, rng, cfg, kMargin) + 35.0;

  const int ncols = rng.integer(1, cfg.columns);
  const double usable = cfg.page_width - 2 * kMargin - (ncols - 1) * kColumnGap;
  const double col_w = usable / ncols;
  const double bottom = cfg.page_height - kMargin - kFooterZone;
  for (int c = 0; c < ncols; ++c) {
    const Column col{kMargin + c * (col_w + kColumnGap), col_w};
    double yc = y;
    const int blocks = rng.integer(cfg.paragraphs_min, cfg.paragraphs_max);
    for (int b = 0; b < blocks; ++b) {
      // Worst-case block height keeps every block inside the text area.
      const double worst = std::max({3.0 * 4 * 12.0, 1.5 * 15.0 * cfg.lines_max, 20.0});
      if (yc + worst > bottom) break;
      const double r = rng.uniform(0.0, 1.0);
      if (r < cfg.header_fraction && b + 1 < blocks) {
        yc = write_header(pb, rng, col, yc) + rng.uniform(14.0, 18.0);
        yc = write_paragraph(pb, rng, cfg, col, yc);
      } else if (r < cfg.header_fraction + cfg.list_fraction) {
        yc = write_list(pb, rng, cfg, col, yc);
      } else {
        yc = write_paragraph(pb, rng, cfg, col, yc);
      }
      yc += rng.uniform(22.0, 30.0);
    }
  }
  write_footer(pb, rng, cfg);
  return pb.finish(page_id);
}

}  // namespace

void SynthConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::InvalidConfig, "synth: " + what); };
  if (pages < 0) bad("pages must be >= 0");
  if (page_width < 400 || page_height < 400) bad("page size must be at least 400x400");
  if (columns < 1 || columns > 2) bad("columns must be 1 or 2");
  if (paragraphs_min < 1 || paragraphs_max < paragraphs_min) bad("need 1 <= paragraphs_min <= paragraphs_max");
  if (lines_min < 1 || lines_max < lines_min) bad("need 1 <= lines_min <= lines_max");
  if (words_per_line_min < 1 || words_per_line_max < words_per_line_min) {
    bad("need 1 <= words_per_line_min <= words_per_line_max");
  }
  for (double f : {right_aligned_fraction, list_fraction, header_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) bad("fractions must lie in [0, 1]");
  }
  if (list_fraction + header_fraction > 1.0) bad("list_fraction + header_fraction must not exceed 1");
  if (!(jitter >= 0.0 && jitter <= 0.1)) bad("jitter must lie in [0, 0.1]");
}

std::vector<Page> synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<Page> pages;
  pages.reserve(cfg.pages);
  for (int i = 0; i < cfg.pages; ++i) {
    const std::uint64_t page_seed = nn::mix64(cfg.seed ^ nn::mix64(static_cast<std::uint64_t>(i)));
    pages.push_back(generate_page(cfg, page_seed, fmt::format("{}{:05d}", cfg.id_prefix, i)));
  }
  return pages;
}

FeatureMap render_page_image(const Page& page, double scale) {
  if (!(scale > 0.0)) fail(ErrorKind::InvalidConfig, "render scale must be positive");
  const int w = std::max(1, static_cast<int>(std::lround(page.width_px * scale)));
  const int h = std::max(1, static_cast<int>(std::lround(page.height_px * scale)));
  FeatureMap img(1, h, w, 1.0);
  for (const auto& b : page.boxes) {
    const int x0 = std::clamp(static_cast<int>(std::floor(b.bbox.xmin * scale)), 0, w - 1);
    const int x1 = std::clamp(static_cast<int>(std::ceil(b.bbox.xmax * scale)), x0 + 1, w);
    const int y0 = std::clamp(static_cast<int>(std::floor(b.bbox.ymin * scale)), 0, h - 1);
    const int y1 = std::clamp(static_cast<int>(std::ceil(b.bbox.ymax * scale)), y0 + 1, h);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) img.at(0, y, x) = 0.2;
    }
  }
  return img;
}

}  // namespace p2g
