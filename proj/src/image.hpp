#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace p2g {

/// Channel-major float image / feature map: value(c, y, x) = data[(c*H + y)*W + x].
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  bool empty() const { return channels <= 0 || height <= 0 || width <= 0; }
  double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
};

/// Reads binary or ASCII netpbm (P2, P3, P5, P6), scaled to [0,1].
FeatureMap read_pnm(const std::string& path);
/// Writes 8-bit P5 (1 channel) or P6 (3 channels), values clamped to [0,1].
void write_pnm(const std::string& path, const FeatureMap& image);

/// Bilinear resize with half-pixel centers.
FeatureMap resize_bilinear(const FeatureMap& src, int out_h, int out_w);
FeatureMap to_grayscale(const FeatureMap& src);

}  // namespace p2g
