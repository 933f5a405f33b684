#pragma once

// Synthetic document pages with full gold labels. Layouts are built from
// titles, section headers, justified and right-aligned paragraphs, bullet
// lists and page footers, in one or two columns.

#include <cstdint>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "image.hpp"

namespace p2g {

inline const std::vector<std::string> kSynthCategories{"title", "text", "list", "page-footer", "section-header"};

enum SynthCategory : int { kTitle = 0, kText = 1, kList = 2, kFooter = 3, kSectionHeader = 4 };

struct SynthConfig {
  std::uint64_t seed = 7;
  int pages = 20;
  int page_width = 1000;
  int page_height = 1300;
  int columns = 2;  // each page draws 1..columns
  int paragraphs_min = 2;
  int paragraphs_max = 4;  // blocks per column
  int lines_min = 2;
  int lines_max = 4;
  int words_per_line_min = 3;
  int words_per_line_max = 7;
  double right_aligned_fraction = 0.15;
  double list_fraction = 0.2;
  double header_fraction = 0.2;
  double jitter = 0.06;  // fraction of the line height
  std::string id_prefix = "page_";

  void validate() const;
  bool operator==(const SynthConfig&) const = default;
};

std::vector<Page> synth_generate(const SynthConfig& cfg);

/// Grayscale rendering of the boxes: dark ink on white, at `scale` of the page size.
FeatureMap render_page_image(const Page& page, double scale);

}  // namespace p2g
