// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "odf/geometry.hpp"

namespace odf {

struct LabeledBox {
  Box box;
  std::uint16_t class_id = 0;

  friend bool operator==(const LabeledBox&, const LabeledBox&) = default;
};

/// Labels of one image as stored on disk.
struct LabelRecord {
  std::uint64_t image_id = 0;
  std::uint16_t image_w = 0;
  std::uint16_t image_h = 0;
  std::vector<LabeledBox> boxes;

  friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

/// True when every box is valid and lies inside [0, image_w] x [0, image_h].
bool boxes_in_bounds(const LabelRecord& r);

/// (batch_index, ordinal within image)
using RoiIndex = std::pair<std::uint32_t, std::uint32_t>;

/// COO-style sparse labels of a batch: one entry per ground-truth box.
struct SparseLabelBatch {
  std::vector<RoiIndex> rois_idx;
  std::vector<Box> rois_values;
  std::vector<std::uint16_t> classes;
  std::size_t batch_size = 0;

  std::size_t size() const noexcept { return rois_values.size(); }
  friend bool operator==(const SparseLabelBatch&, const SparseLabelBatch&) = default;
};

/// Throws Error{corrupt_batch} if list lengths differ, rois_idx is not
/// strictly increasing, ordinals are not dense per image, or a batch index is
/// out of range.
void validate(const SparseLabelBatch& b);

SparseLabelBatch encode_batch(std::span<const LabelRecord> records);

/// Per-image box lists in batch order; inverse of encode_batch on the boxes.
std::vector<std::vector<LabeledBox>> decode_batch(const SparseLabelBatch& b);

/// Same as decode_batch without classes; the input form of the matchers.
std::vector<std::vector<Box>> boxes_per_image(const SparseLabelBatch& b);
std::vector<std::vector<Box>> boxes_per_image(std::span<const LabelRecord> records);

/// Deterministic synthetic label records. Box corners are integral and
/// w, h >= 2, so every value survives the f32 record encoding exactly.
std::vector<LabelRecord> gen_synthetic(std::uint64_t seed, std::size_t n_images,
                                       std::size_t max_boxes, std::uint16_t image_w,
                                       std::uint16_t image_h, std::uint16_t class_count);

/// Translate all boxes by (dx, dy), clamped so every box stays in bounds.
LabelRecord apply_drift(const LabelRecord& r, long dx, long dy);

/// Mirror x about the image's vertical center line.
LabelRecord flip_horizontal(const LabelRecord& r);

/// Seeded integer drift in [-max_drift, max_drift]^2 followed, if allowed, by
/// a seeded coin-flip horizontal mirror.
LabelRecord augment_jitter(const LabelRecord& r, std::uint64_t seed, unsigned max_drift,
                           bool allow_flip);

}  // namespace odf
