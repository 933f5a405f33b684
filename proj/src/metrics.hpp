#pragma once

#include <optional>
#include <span>
#include <vector>

#include "decode.hpp"
#include "geometry.hpp"

namespace p2g {

struct ClassScore {
  long tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

/// Precision/recall/F1 from counts; 0/0 is defined as 0.
ClassScore score_from_counts(long tp, long fp, long fn);

enum class F1Mode { NodeMulticlass, EdgeBinary };

struct F1Report {
  std::vector<ClassScore> per_class;
  ClassScore micro;     // pooled over scored classes
  double macro_f1 = 0;  // mean over classes present in gold or predictions
};

/// NodeMulticlass scores every class; EdgeBinary scores class 1 only (class 0
/// is the negative). `ignore_class` drops a background class from the micro pool.
F1Report f1_scores(std::span<const int> pred, std::span<const int> gold, F1Mode mode, int n_classes,
                   std::optional<int> ignore_class = std::nullopt);

double iou(const NormBox& a, const NormBox& b);

struct ScoredInstance {
  std::size_t image = 0;
  NormBox box;
  int category = 0;
  double score = 1.0;
};

struct CocoResult {
  std::vector<double> thresholds;
  std::vector<int> classes;                    // classes with at least one gold instance
  std::vector<std::vector<double>> ap;         // [class][threshold]
  std::vector<double> class_ap;                // mean over thresholds
  double map = 0.0;                            // mean over classes
};

std::vector<double> coco_thresholds();

/// COCO-style AP with 101-point interpolation, greedy per-image matching
/// by descending score, each gold matched at most once per threshold.
CocoResult coco_map(std::span<const ScoredInstance> dets, std::span<const ScoredInstance> golds,
                    const std::vector<double>& thresholds = coco_thresholds());

}  // namespace p2g
