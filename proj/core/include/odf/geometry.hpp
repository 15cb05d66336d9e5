// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace odf {

/// Axis-aligned box in center form. All coordinates are pixels.
struct Box {
  double x = 0.0;  ///< center abscissa
  double y = 0.0;  ///< center ordinate
  double w = 0.0;
  double h = 0.0;

  double left() const noexcept { return x - 0.5 * w; }
  double right() const noexcept { return x + 0.5 * w; }
  double top() const noexcept { return y - 0.5 * h; }
  double bottom() const noexcept { return y + 0.5 * h; }
  double area() const noexcept { return w * h; }

  friend bool operator==(const Box&, const Box&) = default;
};

/// Throws Error{invalid_box} unless all fields are finite and w, h > 0.
void validate(const Box& b);

/// Anchor template shape.
struct Extent {
  double w = 0.0;
  double h = 0.0;

  friend bool operator==(const Extent&, const Extent&) = default;
};

/// Dense anchor layout: grid_w x grid_h cells, each holding every template.
struct GridSpec {
  double image_w = 0.0;
  double image_h = 0.0;
  std::size_t grid_w = 0;
  std::size_t grid_h = 0;
  std::vector<Extent> templates;

  std::size_t anchors_per_cell() const noexcept { return templates.size(); }
  std::size_t anchor_count() const noexcept {
    return grid_w * grid_h * templates.size();
  }
  /// Flattened position of anchor [i, j, k].
  std::size_t index_of(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return (j * grid_w + i) * templates.size() + k;
  }
};

struct ScoredBox {
  Box box;
  double score = 0.0;
  std::uint32_t class_id = 0;
};

double iou(const Box& a, const Box& b);

/// 1 - IOU; the anchor-matching distance.
double matching_distance(const Box& a, const Box& b);

/// L2 norm of (x, y, w, h) differences.
double euclidean_distance(const Box& a, const Box& b);

/// Anchor centers sit at (i+1)*W/(grid_w+1), (j+1)*H/(grid_h+1).
std::vector<Box> build_anchor_grid(const GridSpec& spec);

/// Per-class greedy non-maximum suppression.
///
/// Candidates are visited by descending score, ties by ascending index. A
/// candidate is dropped when its IOU with an already kept candidate of the
/// same class exceeds `thresh`. Returns kept indices in the order kept.
std::vector<std::size_t> nms(std::span<const ScoredBox> candidates, double thresh);

}  // namespace odf
