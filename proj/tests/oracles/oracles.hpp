// SPDX-License-Identifier: Apache-2.0
//
// Reference computations for tests. Nothing here calls into the matching
// code under test; the serial scan reuses odf::iou so that ties produced by
// floating-point rounding resolve the same way on both sides.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "odf/geometry.hpp"

namespace odf::oracle {

/// IOU by counting lattice points over the union's bounding rectangle.
inline double raster_iou(const Box& a, const Box& b, int samples_per_axis = 2000) {
  const double x0 = std::min(a.x - a.w / 2, b.x - b.w / 2);
  const double x1 = std::max(a.x + a.w / 2, b.x + b.w / 2);
  const double y0 = std::min(a.y - a.h / 2, b.y - b.h / 2);
  const double y1 = std::max(a.y + a.h / 2, b.y + b.h / 2);
  auto inside = [](const Box& r, double px, double py) {
    return std::abs(px - r.x) < r.w / 2 && std::abs(py - r.y) < r.h / 2;
  };
  long in_a = 0, in_b = 0, both = 0;
  for (int i = 0; i < samples_per_axis; ++i) {
    const double px = x0 + (x1 - x0) * (i + 0.5) / samples_per_axis;
    for (int j = 0; j < samples_per_axis; ++j) {
      const double py = y0 + (y1 - y0) * (j + 0.5) / samples_per_axis;
      const bool ia = inside(a, px, py);
      const bool ib = inside(b, px, py);
      in_a += ia;
      in_b += ib;
      both += ia && ib;
    }
  }
  const long uni = in_a + in_b - both;
  return uni == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(uni);
}

/// Closed-form IOU written independently of odf::iou (corner arithmetic).
inline double corner_iou(const Box& a, const Box& b) {
  const double ax0 = a.x - a.w / 2, ax1 = a.x + a.w / 2, ay0 = a.y - a.h / 2, ay1 = a.y + a.h / 2;
  const double bx0 = b.x - b.w / 2, bx1 = b.x + b.w / 2, by0 = b.y - b.h / 2, by1 = b.y + b.h / 2;
  const double iw = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
  const double ih = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
  const double inter = iw * ih;
  return inter / (a.w * a.h + b.w * b.h - inter);
}

using Matrix = std::vector<std::vector<double>>;

/// Every injective row->column map in lexicographic order; returns the first
/// one attaining the minimum total.
inline std::vector<std::size_t> brute_force_assignment(const Matrix& cost, double* total = nullptr) {
  const std::size_t n = cost.size();
  const std::size_t m = n == 0 ? 0 : cost[0].size();
  std::vector<std::size_t> cur(n), best;
  std::vector<char> used(m);
  double best_total = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, double)> rec = [&](std::size_t r, double acc) {
    if (r == n) {
      if (acc < best_total - 1e-12) {
        best_total = acc;
        best = cur;
      }
      return;
    }
    for (std::size_t c = 0; c < m; ++c) {
      if (used[c]) continue;
      used[c] = 1;
      cur[r] = c;
      rec(r + 1, acc + cost[r][c]);
      used[c] = 0;
    }
  };
  rec(0, 0.0);
  if (total) *total = n == 0 ? 0.0 : best_total;
  return best;
}

/// Same result as brute_force_assignment, visiting permutations in the same
/// order but skipping branches whose partial total plus the remaining row
/// minima cannot beat the best found so far. Usable for 64+ columns.
inline std::vector<std::size_t> pruned_permutation_assignment(const Matrix& cost, double* total = nullptr) {
  const std::size_t n = cost.size();
  const std::size_t m = n == 0 ? 0 : cost[0].size();
  std::vector<double> rest(n + 1, 0.0);  // sum of row minima of rows r..n-1
  for (std::size_t r = n; r-- > 0;) {
    rest[r] = rest[r + 1] + *std::min_element(cost[r].begin(), cost[r].end());
  }
  std::vector<std::size_t> cur(n), best;
  std::vector<char> used(m);
  double best_total = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, double)> rec = [&](std::size_t r, double acc) {
    if (r == n) {
      if (acc < best_total - 1e-12) {
        best_total = acc;
        best = cur;
      }
      return;
    }
    if (acc + rest[r] >= best_total - 1e-12) return;
    for (std::size_t c = 0; c < m; ++c) {
      if (used[c]) continue;
      used[c] = 1;
      cur[r] = c;
      rec(r + 1, acc + cost[r][c]);
      used[c] = 0;
    }
  };
  rec(0, 0.0);
  if (total) *total = n == 0 ? 0.0 : best_total;
  return best;
}

/// Minimum assignment total by dynamic programming over (column, set of
/// matched rows). Exact for any column count; rows must be small.
inline double subset_dp_optimum(const Matrix& cost) {
  const std::size_t n = cost.size();
  if (n == 0) return 0.0;
  const std::size_t m = cost[0].size();
  const std::size_t full = (std::size_t{1} << n) - 1;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dp(full + 1, inf);
  dp[0] = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    std::vector<double> next = dp;
    for (std::size_t mask = 0; mask <= full; ++mask) {
      if (dp[mask] == inf) continue;
      for (std::size_t r = 0; r < n; ++r) {
        if (mask & (std::size_t{1} << r)) continue;
        const std::size_t to = mask | (std::size_t{1} << r);
        next[to] = std::min(next[to], dp[mask] + cost[r][c]);
      }
    }
    dp = std::move(next);
  }
  return dp[full];
}

/// Serial anchor matching by linear scans (no sorting): per box, the unused
/// anchor with minimum (1 - IOU, index) among overlapping anchors, otherwise
/// minimum (euclidean distance, index). Boxes fully containing several
/// anchors of one template produce exact IOU ties, so index order matters.
inline std::vector<std::vector<std::size_t>> scan_serial_match(
    const std::vector<Box>& anchors, const std::vector<std::vector<Box>>& batch) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& boxes : batch) {
    std::vector<char> used(anchors.size());
    auto& row = out.emplace_back();
    for (const Box& b : boxes) {
      std::size_t best = anchors.size();
      double best_d = 0.0;
      for (std::size_t a = 0; a < anchors.size(); ++a) {
        const double d = matching_distance(b, anchors[a]);
        if (used[a] || !(d < 1.0)) continue;
        if (best == anchors.size() || d < best_d) {
          best = a;
          best_d = d;
        }
      }
      if (best == anchors.size()) {
        for (std::size_t a = 0; a < anchors.size(); ++a) {
          if (used[a]) continue;
          const double dx = b.x - anchors[a].x, dy = b.y - anchors[a].y;
          const double dw = b.w - anchors[a].w, dh = b.h - anchors[a].h;
          const double d = std::sqrt(dx * dx + dy * dy + dw * dw + dh * dh);
          if (best == anchors.size() || d < best_d) {
            best = a;
            best_d = d;
          }
        }
      }
      used[best] = 1;
      row.push_back(best);
    }
  }
  return out;
}

/// Random anchor-matching instance within the given limits.
struct Instance {
  GridSpec grid;
  std::vector<Box> anchors;
  std::vector<std::vector<Box>> batch;
};

inline Instance random_instance(std::mt19937_64& rng, std::size_t max_batch,
                                std::size_t max_boxes, std::size_t max_grid,
                                std::size_t max_k) {
  auto uniform_int = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  Instance inst;
  inst.grid.image_w = uniform(64.0, 640.0);
  inst.grid.image_h = uniform(64.0, 640.0);
  inst.grid.grid_w = uniform_int(1, max_grid);
  inst.grid.grid_h = uniform_int(1, max_grid);
  const std::size_t k = uniform_int(1, max_k);
  for (std::size_t t = 0; t < k; ++t) {
    inst.grid.templates.push_back({uniform(4.0, inst.grid.image_w / 2), uniform(4.0, inst.grid.image_h / 2)});
  }
  inst.anchors = build_anchor_grid(inst.grid);
  const std::size_t cap = std::min(max_boxes, inst.anchors.size());
  const std::size_t batch = uniform_int(1, max_batch);
  for (std::size_t b = 0; b < batch; ++b) {
    auto& boxes = inst.batch.emplace_back();
    const std::size_t n = uniform_int(0, cap);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = uniform(2.0, inst.grid.image_w / 2);
      const double h = uniform(2.0, inst.grid.image_h / 2);
      boxes.push_back({uniform(w / 2, inst.grid.image_w - w / 2), uniform(h / 2, inst.grid.image_h - h / 2), w, h});
    }
  }
  return inst;
}

}  // namespace odf::oracle
