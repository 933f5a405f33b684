#pragma once

// Reference implementations used only by tests. Each one restates a rule
// directly and slowly, sharing no code with the library beyond plain types.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "geometry.hpp"

namespace p2g::oracle {

using Pair = std::pair<int, int>;
using PairSet = std::set<Pair>;

inline Pair ordered(int a, int b) { return a < b ? Pair{a, b} : Pair{b, a}; }

// Random boxes with strictly positive size, inside the unit square.
inline std::vector<NormBox> random_boxes(std::mt19937_64& gen, int n, double max_w = 0.2, double max_h = 0.05) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<NormBox> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double w = 0.005 + u(gen) * max_w;
    const double h = 0.005 + u(gen) * max_h;
    const double x = u(gen) * (1.0 - w);
    const double y = u(gen) * (1.0 - h);
    out.push_back({x, y, x + w, y + h});
  }
  return out;
}

// Boxes on a coarse grid so that equal gaps and shared edges occur often.
inline std::vector<NormBox> grid_boxes(std::mt19937_64& gen, int n) {
  std::uniform_int_distribution<int> cell(0, 19);
  std::uniform_int_distribution<int> span(1, 3);
  std::vector<NormBox> out;
  for (int i = 0; i < n; ++i) {
    const int x = cell(gen), y = cell(gen);
    const int w = span(gen), h = span(gen);
    out.push_back({x / 25.0, y / 25.0, (x + w) / 25.0, (y + h) / 25.0});
  }
  return out;
}

// Four-direction rule: for each box and side, all qualifying boxes are sorted
// by (gap, center distance, id) and the first k are kept.
inline PairSet directional(const std::vector<NormBox>& b, int hk, int vk, double band_min) {
  PairSet edges;
  const int n = static_cast<int>(b.size());
  auto overlap = [](double lo1, double hi1, double lo2, double hi2) { return std::max(0.0, std::min(hi1, hi2) - std::max(lo1, lo2)); };
  auto cdist = [&](int i, int j) { return std::hypot(b[i].xctr() - b[j].xctr(), b[i].yctr() - b[j].yctr()); };
  using Key = std::tuple<double, double, int>;
  for (int i = 0; i < n; ++i) {
    std::vector<Key> left, right, above, below;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double oy = overlap(b[i].ymin, b[i].ymax, b[j].ymin, b[j].ymax);
      if (oy > band_min * std::min(b[i].height(), b[j].height())) {
        if (b[j].xctr() < b[i].xctr()) left.emplace_back(std::max(0.0, b[i].xmin - b[j].xmax), cdist(i, j), j);
        if (b[j].xctr() > b[i].xctr()) right.emplace_back(std::max(0.0, b[j].xmin - b[i].xmax), cdist(i, j), j);
      }
      const double ox = overlap(b[i].xmin, b[i].xmax, b[j].xmin, b[j].xmax);
      if (ox > band_min * std::min(b[i].width(), b[j].width())) {
        if (b[j].yctr() < b[i].yctr()) above.emplace_back(std::max(0.0, b[i].ymin - b[j].ymax), cdist(i, j), j);
        if (b[j].yctr() > b[i].yctr()) below.emplace_back(std::max(0.0, b[j].ymin - b[i].ymax), cdist(i, j), j);
      }
    }
    auto take = [&](std::vector<Key>& keys, int k) {
      std::sort(keys.begin(), keys.end());
      for (int r = 0; r < std::min<int>(k, static_cast<int>(keys.size())); ++r) edges.insert(ordered(i, std::get<2>(keys[r])));
    };
    take(left, hk);
    take(right, hk);
    take(above, vk);
    take(below, vk);
  }
  return edges;
}

// Every point ranks all others by (squared distance, id) and keeps k.
inline PairSet knn(const std::vector<std::array<double, 2>>& p, int k) {
  PairSet edges;
  const int n = static_cast<int>(p.size());
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> all;
    for (int j = 0; j < n; ++j) {
      if (j != i) all.emplace_back(std::pow(p[i][0] - p[j][0], 2) + std::pow(p[i][1] - p[j][1], 2), j);
    }
    std::sort(all.begin(), all.end());
    for (int r = 0; r < std::min<int>(k, static_cast<int>(all.size())); ++r) edges.insert(ordered(i, all[r].second));
  }
  return edges;
}

// Lune-based beta skeleton for beta in (0, 1]: a third point blocks (i, j)
// when it sees the segment under an angle wider than pi - asin(beta).
// beta = 1 gives the Gabriel rule (obtuse angle, strictly).
inline PairSet beta_skeleton(const std::vector<std::array<double, 2>>& p, double beta) {
  PairSet edges;
  const int n = static_cast<int>(p.size());
  const double limit = std::numbers::pi - std::asin(beta);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      bool blocked = false;
      for (int k = 0; k < n && !blocked; ++k) {
        if (k == i || k == j) continue;
        const double ax = p[i][0] - p[k][0], ay = p[i][1] - p[k][1];
        const double bx = p[j][0] - p[k][0], by = p[j][1] - p[k][1];
        const double na = std::hypot(ax, ay), nb = std::hypot(bx, by);
        if (na == 0.0 || nb == 0.0) continue;
        const double angle = std::acos(std::clamp((ax * bx + ay * by) / (na * nb), -1.0, 1.0));
        blocked = angle > limit;
      }
      if (!blocked) edges.insert({i, j});
    }
  }
  return edges;
}

// Gabriel rule as a dot product: k blocks (i, j) iff (i - k).(j - k) < 0.
inline PairSet gabriel(const std::vector<std::array<double, 2>>& p) {
  PairSet edges;
  const int n = static_cast<int>(p.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      bool blocked = false;
      for (int k = 0; k < n && !blocked; ++k) {
        if (k == i || k == j) continue;
        blocked = (p[i][0] - p[k][0]) * (p[j][0] - p[k][0]) + (p[i][1] - p[k][1]) * (p[j][1] - p[k][1]) < 0.0;
      }
      if (!blocked) edges.insert({i, j});
    }
  }
  return edges;
}

// Edges of all triangles with an empty circumcircle (points in general position).
inline PairSet delaunay(const std::vector<std::array<double, 2>>& p) {
  PairSet edges;
  const int n = static_cast<int>(p.size());
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int c = b + 1; c < n; ++c) {
        const double ax = p[a][0], ay = p[a][1], bx = p[b][0], by = p[b][1], cx = p[c][0], cy = p[c][1];
        const double d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
        if (std::abs(d) < 1e-15) continue;
        const double ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) + (cx * cx + cy * cy) * (ay - by)) / d;
        const double uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) + (cx * cx + cy * cy) * (bx - ax)) / d;
        const double r2 = (ax - ux) * (ax - ux) + (ay - uy) * (ay - uy);
        bool empty = true;
        for (int k = 0; k < n && empty; ++k) {
          if (k == a || k == b || k == c) continue;
          empty = (p[k][0] - ux) * (p[k][0] - ux) + (p[k][1] - uy) * (p[k][1] - uy) >= r2 * (1.0 - 1e-12);
        }
        if (empty) {
          edges.insert({a, b});
          edges.insert({a, c});
          edges.insert({b, c});
        }
      }
    }
  }
  return edges;
}

// The six relationship deltas written out term by term.
inline std::array<double, 6> delta(const NormBox& s, const NormBox& o) {
  const double xs = (s.xmin + s.xmax) / 2, ys = (s.ymin + s.ymax) / 2, ws = s.xmax - s.xmin, hs = s.ymax - s.ymin;
  const double xo = (o.xmin + o.xmax) / 2, yo = (o.ymin + o.ymax) / 2, wo = o.xmax - o.xmin, ho = o.ymax - o.ymin;
  return {(xs - xo) / ws, (ys - yo) / hs, std::log(ws / wo), std::log(hs / ho), (xo - xs) / wo, (yo - ys) / ho};
}

inline std::array<double, 18> rel(const NormBox& s, const NormBox& o) {
  const NormBox r{std::min(s.xmin, o.xmin), std::min(s.ymin, o.ymin), std::max(s.xmax, o.xmax), std::max(s.ymax, o.ymax)};
  std::array<double, 18> out{};
  const auto a = delta(s, o), b = delta(s, r), c = delta(o, r);
  for (int i = 0; i < 6; ++i) {
    out[i] = a[i];
    out[6 + i] = b[i];
    out[12 + i] = c[i];
  }
  return out;
}

// reach[i][j] after Warshall's closure; components read off row by row.
inline std::vector<std::vector<int>> components_by_closure(int n, const std::vector<Pair>& edges) {
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (int i = 0; i < n; ++i) reach[i][i] = 1;
  for (auto [a, b] : edges) reach[a][b] = reach[b][a] = 1;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      if (reach[i][k])
        for (int j = 0; j < n; ++j)
          if (reach[k][j]) reach[i][j] = 1;
  std::vector<std::vector<int>> out;
  std::vector<char> seen(n, 0);
  for (int i = 0; i < n; ++i) {
    if (seen[i]) continue;
    std::vector<int> comp;
    for (int j = 0; j < n; ++j) {
      if (reach[i][j]) {
        comp.push_back(j);
        seen[j] = 1;
      }
    }
    out.push_back(comp);
  }
  return out;
}

inline double rel_error(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

}  // namespace p2g::oracle
