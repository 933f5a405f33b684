#pragma once

// Node and edge input features: layout + pooled image features per node,
// and pair / reading-order / relationship-proposal features per edge.

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "image.hpp"

namespace p2g {

/// (t_x^SO, t_y^SO, t_w^SO, t_h^SO, t_x^OS, t_y^OS)
using RelDelta = std::array<double, 6>;
using RelFeature = std::array<double, 18>;

RelDelta rel_delta(const NormBox& subject, const NormBox& object);
/// delta(S,O) ++ delta(S,R) ++ delta(O,R), R = min bounding rect of S and O.
RelFeature rel_feature(const NormBox& subject, const NormBox& object);

/// Rank of each neighbor of `pivot` when sorted by (yctr, xctr, id).
std::vector<int> reading_order_codes(NodeId pivot, std::span<const NodeId> neighbors, std::span<const NormBox> boxes);

std::vector<double> sinusoidal_encode(int index, int dim);

/// Output flattened as (bin_y, bin_x, channel).
std::vector<double> roi_align(const FeatureMap& map, const NormBox& box, int out_size, int sampling_ratio);

class ImageFeatureProvider {
 public:
  virtual ~ImageFeatureProvider() = default;
  virtual std::string name() const = 0;
  virtual int channels() const = 0;
  /// Feature map spanning the whole page in normalized coordinates.
  virtual FeatureMap feature_map(const Page& page) const = 0;
};

class NullProvider final : public ImageFeatureProvider {
 public:
  std::string name() const override { return "none"; }
  int channels() const override { return 0; }
  FeatureMap feature_map(const Page&) const override { return {}; }
};

/// Page image resized to size x size, grayscale or RGB.
class RawPixelProvider final : public ImageFeatureProvider {
 public:
  explicit RawPixelProvider(int size = 112, int channels = 1);
  std::string name() const override { return "raw_pixel"; }
  int channels() const override { return channels_; }
  FeatureMap feature_map(const Page& page) const override;
  FeatureMap from_image(const FeatureMap& image) const;

 private:
  int size_;
  int channels_;
};

struct NodeInputShape {
  std::size_t image_width = 0;  // P*P*C
  std::size_t layout_width = 8;
  std::size_t total() const { return image_width + layout_width; }
};

std::vector<double> assemble_node_input(std::span<const double> layout_vec, std::span<const double> image_feat,
                                        const NodeInputShape& shape);

struct EdgeFeatureConfig {
  bool use_pair = true;
  bool use_rope = true;
  bool use_rel = true;
  bool use_polar = false;
  bool use_node_class = false;
  int rope_dim = 32;

  void validate() const;
  bool operator==(const EdgeFeatureConfig&) const = default;
};

/// Width of the non-embedding part of an edge input (rope, rel, polar).
std::size_t edge_static_width(const EdgeFeatureConfig& cfg);
std::size_t edge_input_width(const EdgeFeatureConfig& cfg, std::size_t hidden, std::size_t n_classes);

/// Center offset of O from S as (distance, angle).
std::array<double, 2> polar_feature(const NormBox& subject, const NormBox& object);

/// rope ++ rel ++ polar for the oriented pair (S, O), in that order.
std::vector<double> edge_static_features(const NormBox& subject, const NormBox& object, int code,
                                         const EdgeFeatureConfig& cfg);

/// Full edge input for the non-learned parts: pair ++ rope ++ rel (++ polar).
std::vector<double> assemble_edge_input(std::span<const double> emb_i, std::span<const double> emb_j, int code,
                                        std::span<const double> rel, const EdgeFeatureConfig& cfg);

}  // namespace p2g
