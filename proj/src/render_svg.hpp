#pragma once

// Deterministic SVG overlays in page pixel coordinates.
//
// Category palette (index order): #2ca02c, #d62728, #ff7f0e, #1f77b4, #9467bd,
// #8c564b, #e377c2, #7f7f7f, #bcbd22, #17becf, then repeating. With the
// synthetic categories: title green, text red, list orange, page-footer blue,
// section-header purple.

#include <string>
#include <vector>

#include "geometry.hpp"
#include "sampling.hpp"

namespace p2g {

struct PagePrediction;

const std::string& category_color(int category);

/// Boxes and sampled edges. With gold labels, pairs needed to connect a
/// split gold group are drawn dashed red.
std::string render_sample_svg(const Page& page, const SampledGraph& graph);

/// Boxes filled by predicted category, instance outlines, positive edges
/// solid and rejected candidate edges dashed grey.
std::string render_infer_svg(const Page& page, const PagePrediction& pred, const std::vector<std::string>& categories);

}  // namespace p2g
