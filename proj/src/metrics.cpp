#include "metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "errors.hpp"

namespace p2g {

ClassScore score_from_counts(long tp, long fp, long fn) {
  ClassScore s;
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  s.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  s.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

F1Report f1_scores(std::span<const int> pred, std::span<const int> gold, F1Mode mode, int n_classes,
                   std::optional<int> ignore_class) {
  if (pred.size() != gold.size()) {
    fail(ErrorKind::LengthMismatch, std::to_string(pred.size()) + " predictions for " + std::to_string(gold.size()) + " gold labels");
  }
  if (mode == F1Mode::EdgeBinary) {
    n_classes = 2;
    ignore_class = 0;
  }
  std::vector<long> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
  std::vector<char> present(n_classes, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int p = pred[i], g = gold[i];
    if (p < 0 || p >= n_classes || g < 0 || g >= n_classes) fail(ErrorKind::InvalidTarget, "class index out of range");
    present[p] = present[g] = 1;
    if (p == g) {
      ++tp[p];
    } else {
      ++fp[p];
      ++fn[g];
    }
  }
  F1Report r;
  long mtp = 0, mfp = 0, mfn = 0;
  double macro = 0.0;
  int macro_n = 0;
  for (int c = 0; c < n_classes; ++c) {
    r.per_class.push_back(score_from_counts(tp[c], fp[c], fn[c]));
    if (ignore_class && *ignore_class == c) continue;
    mtp += tp[c];
    mfp += fp[c];
    mfn += fn[c];
    if (present[c]) {
      macro += r.per_class.back().f1;
      ++macro_n;
    }
  }
  r.micro = score_from_counts(mtp, mfp, mfn);
  r.macro_f1 = macro_n > 0 ? macro / macro_n : 0.0;
  return r;
}

double iou(const NormBox& a, const NormBox& b) {
  const double iw = interval_overlap_1d({a.xmin, a.xmax}, {b.xmin, b.xmax});
  const double ih = interval_overlap_1d({a.ymin, a.ymax}, {b.ymin, b.ymax});
  const double inter = iw * ih;
  const double uni = a.width() * a.height() + b.width() * b.height() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<double> coco_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

namespace {

// Threshold comparisons tolerate representation error in values like 0.6.
constexpr double kIouSlack = 1e-9;

double average_precision(std::span<const ScoredInstance> dets, std::span<const ScoredInstance> golds, double thr) {
  if (golds.empty()) return 0.0;
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<char> used(golds.size(), 0);
  std::vector<double> precision, recall;
  long tp = 0, fp = 0;
  for (std::size_t k : order) {
    const auto& d = dets[k];
    double best = -1.0;
    std::ptrdiff_t match = -1;
    for (std::size_t g = 0; g < golds.size(); ++g) {
      if (used[g] || golds[g].image != d.image) continue;
      const double o = iou(d.box, golds[g].box);
      if (o + kIouSlack >= thr && o > best) {
        best = o;
        match = static_cast<std::ptrdiff_t>(g);
      }
    }
    if (match >= 0) {
      used[match] = 1;
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(golds.size()));
  }
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double sum = 0.0;
  for (int r = 0; r <= 100; ++r) {
    const double level = r / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), level - 1e-12);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

}  // namespace

CocoResult coco_map(std::span<const ScoredInstance> dets, std::span<const ScoredInstance> golds,
                    const std::vector<double>& thresholds) {
  CocoResult r;
  r.thresholds = thresholds;
  std::set<int> classes;
  for (const auto& g : golds) classes.insert(g.category);
  r.classes.assign(classes.begin(), classes.end());
  for (int c : r.classes) {
    std::vector<ScoredInstance> cd, cg;
    for (const auto& d : dets) {
      if (d.category == c) cd.push_back(d);
    }
    for (const auto& g : golds) {
      if (g.category == c) cg.push_back(g);
    }
    std::vector<double> per_thr;
    for (double t : thresholds) per_thr.push_back(average_precision(cd, cg, t));
    r.class_ap.push_back(per_thr.empty() ? 0.0 : std::accumulate(per_thr.begin(), per_thr.end(), 0.0) / per_thr.size());
    r.ap.push_back(std::move(per_thr));
  }
  r.map = r.class_ap.empty() ? 0.0 : std::accumulate(r.class_ap.begin(), r.class_ap.end(), 0.0) / r.class_ap.size();
  return r;
}

}  // namespace p2g
