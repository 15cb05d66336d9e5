// SPDX-License-Identifier: Apache-2.0
#include "odf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "odf/error.hpp"

namespace odf {

void validate(const Box& b) {
  if (!std::isfinite(b.x) || !std::isfinite(b.y) || !std::isfinite(b.w) ||
      !std::isfinite(b.h)) {
    throw Error(Errc::invalid_box, "box has non-finite coordinates");
  }
  if (!(b.w > 0.0) || !(b.h > 0.0)) {
    throw Error(Errc::invalid_box, "box has non-positive width or height");
  }
}

namespace {

double overlap(double lo_a, double hi_a, double lo_b, double hi_b) {
  return std::max(0.0, std::min(hi_a, hi_b) - std::max(lo_a, lo_b));
}

}  // namespace

double iou(const Box& a, const Box& b) {
  validate(a);
  validate(b);
  const double inter = overlap(a.left(), a.right(), b.left(), b.right()) *
                       overlap(a.top(), a.bottom(), b.top(), b.bottom());
  if (inter <= 0.0) return 0.0;
  // Areas from the same corner arithmetic, so identical boxes give exactly 1.
  const double area_a = (a.right() - a.left()) * (a.bottom() - a.top());
  const double area_b = (b.right() - b.left()) * (b.bottom() - b.top());
  const double uni = area_a + area_b - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double matching_distance(const Box& a, const Box& b) { return 1.0 - iou(a, b); }

double euclidean_distance(const Box& a, const Box& b) {
  validate(a);
  validate(b);
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dw = a.w - b.w;
  const double dh = a.h - b.h;
  return std::sqrt(dx * dx + dy * dy + dw * dw + dh * dh);
}

std::vector<Box> build_anchor_grid(const GridSpec& spec) {
  if (spec.templates.empty()) {
    throw Error(Errc::invalid_spec, "grid spec has no anchor templates");
  }
  if (!(spec.image_w > 0.0) || !(spec.image_h > 0.0) || !std::isfinite(spec.image_w) ||
      !std::isfinite(spec.image_h)) {
    throw Error(Errc::invalid_spec, "grid spec image dimensions must be positive");
  }
  if (spec.grid_w == 0 || spec.grid_h == 0) {
    throw Error(Errc::invalid_spec, "grid spec must have at least one cell");
  }
  for (const auto& t : spec.templates) {
    if (!(t.w > 0.0) || !(t.h > 0.0) || !std::isfinite(t.w) || !std::isfinite(t.h)) {
      throw Error(Errc::invalid_spec, "anchor template dimensions must be positive");
    }
  }

  std::vector<Box> anchors;
  anchors.reserve(spec.anchor_count());
  const double step_x = spec.image_w / static_cast<double>(spec.grid_w + 1);
  const double step_y = spec.image_h / static_cast<double>(spec.grid_h + 1);
  for (std::size_t j = 0; j < spec.grid_h; ++j) {
    const double cy = static_cast<double>(j + 1) * step_y;
    for (std::size_t i = 0; i < spec.grid_w; ++i) {
      const double cx = static_cast<double>(i + 1) * step_x;
      for (const auto& t : spec.templates) anchors.push_back({cx, cy, t.w, t.h});
    }
  }
  return anchors;
}

std::vector<std::size_t> nms(std::span<const ScoredBox> candidates, double thresh) {
  if (!(thresh >= 0.0 && thresh <= 1.0)) {
    throw Error(Errc::parameter, "nms threshold must lie in [0, 1]");
  }
  for (const auto& c : candidates) {
    validate(c.box);
    if (!(c.score >= 0.0 && c.score <= 1.0)) {
      throw Error(Errc::invalid_input, "candidate score must lie in [0, 1]");
    }
  }

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].score > candidates[b].score;
  });

  std::vector<std::size_t> kept;
  for (const std::size_t idx : order) {
    const auto& cand = candidates[idx];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return candidates[k].class_id == cand.class_id &&
             iou(candidates[k].box, cand.box) > thresh;
    });
    if (!suppressed) kept.push_back(idx);
  }
  return kept;
}

}  // namespace odf
