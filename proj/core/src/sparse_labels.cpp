// SPDX-License-Identifier: Apache-2.0
#include "odf/sparse_labels.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "odf/error.hpp"

namespace odf {

bool boxes_in_bounds(const LabelRecord& r) {
  return std::all_of(r.boxes.begin(), r.boxes.end(), [&](const LabeledBox& lb) {
    const Box& b = lb.box;
    return std::isfinite(b.x) && std::isfinite(b.y) && b.w > 0.0 && b.h > 0.0 &&
           b.left() >= 0.0 && b.top() >= 0.0 && b.right() <= r.image_w &&
           b.bottom() <= r.image_h;
  });
}

void validate(const SparseLabelBatch& b) {
  const std::size_t n = b.rois_idx.size();
  if (b.rois_values.size() != n || b.classes.size() != n) {
    throw Error(Errc::corrupt_batch, "sparse batch lists differ in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto [image, ordinal] = b.rois_idx[i];
    if (image >= b.batch_size) {
      throw Error(Errc::corrupt_batch, "roi " + std::to_string(i) + " points at image " +
                                           std::to_string(image) + " beyond the batch");
    }
    const bool continues = i > 0 && b.rois_idx[i - 1].first == image;
    if (i > 0 && b.rois_idx[i - 1] >= b.rois_idx[i]) {
      throw Error(Errc::corrupt_batch, "rois_idx is not sorted at entry " + std::to_string(i));
    }
    const std::uint32_t expected = continues ? b.rois_idx[i - 1].second + 1 : 0;
    if (ordinal != expected) {
      throw Error(Errc::corrupt_batch, "rois_idx ordinals are not dense at entry " +
                                           std::to_string(i));
    }
  }
}

SparseLabelBatch encode_batch(std::span<const LabelRecord> records) {
  SparseLabelBatch out;
  out.batch_size = records.size();
  std::size_t total = 0;
  for (const auto& r : records) total += r.boxes.size();
  out.rois_idx.reserve(total);
  out.rois_values.reserve(total);
  out.classes.reserve(total);
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t k = 0; k < records[i].boxes.size(); ++k) {
      out.rois_idx.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(k));
      out.rois_values.push_back(records[i].boxes[k].box);
      out.classes.push_back(records[i].boxes[k].class_id);
    }
  }
  return out;
}

std::vector<std::vector<LabeledBox>> decode_batch(const SparseLabelBatch& b) {
  validate(b);
  std::vector<std::vector<LabeledBox>> out(b.batch_size);
  for (std::size_t i = 0; i < b.size(); ++i) {
    out[b.rois_idx[i].first].push_back({b.rois_values[i], b.classes[i]});
  }
  return out;
}

std::vector<std::vector<Box>> boxes_per_image(const SparseLabelBatch& b) {
  validate(b);
  std::vector<std::vector<Box>> out(b.batch_size);
  for (std::size_t i = 0; i < b.size(); ++i) out[b.rois_idx[i].first].push_back(b.rois_values[i]);
  return out;
}

std::vector<std::vector<Box>> boxes_per_image(std::span<const LabelRecord> records) {
  std::vector<std::vector<Box>> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    auto& boxes = out.emplace_back();
    boxes.reserve(r.boxes.size());
    for (const auto& lb : r.boxes) boxes.push_back(lb.box);
  }
  return out;
}

std::vector<LabelRecord> gen_synthetic(std::uint64_t seed, std::size_t n_images,
                                       std::size_t max_boxes, std::uint16_t image_w,
                                       std::uint16_t image_h, std::uint16_t class_count) {
  if (image_w < 2 || image_h < 2) {
    throw Error(Errc::invalid_spec, "synthetic images must be at least 2x2 pixels");
  }
  if (n_images == 0 || max_boxes == 0) {
    throw Error(Errc::parameter, "n_images and max_boxes must be at least 1");
  }
  if (max_boxes > 65535) throw Error(Errc::parameter, "max_boxes exceeds the record limit");
  if (class_count == 0) throw Error(Errc::invalid_spec, "class_count must be at least 1");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> count_dist(0, max_boxes);
  std::uniform_int_distribution<int> class_dist(0, class_count - 1);
  const int max_w = std::max(2, image_w / 3);
  const int max_h = std::max(2, image_h / 3);

  std::vector<LabelRecord> out(n_images);
  for (std::size_t i = 0; i < n_images; ++i) {
    auto& r = out[i];
    r.image_id = i;
    r.image_w = image_w;
    r.image_h = image_h;
    const std::size_t n = count_dist(rng);
    r.boxes.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      const int w = std::uniform_int_distribution<int>(2, max_w)(rng);
      const int h = std::uniform_int_distribution<int>(2, max_h)(rng);
      const int left = std::uniform_int_distribution<int>(0, image_w - w)(rng);
      const int top = std::uniform_int_distribution<int>(0, image_h - h)(rng);
      LabeledBox lb;
      lb.box = {left + 0.5 * w, top + 0.5 * h, static_cast<double>(w), static_cast<double>(h)};
      lb.class_id = static_cast<std::uint16_t>(class_dist(rng));
      r.boxes.push_back(lb);
    }
  }
  return out;
}

LabelRecord apply_drift(const LabelRecord& r, long dx, long dy) {
  if (r.boxes.empty()) return r;
  double min_left = r.image_w, min_top = r.image_h, max_right = 0.0, max_bottom = 0.0;
  for (const auto& lb : r.boxes) {
    min_left = std::min(min_left, lb.box.left());
    min_top = std::min(min_top, lb.box.top());
    max_right = std::max(max_right, lb.box.right());
    max_bottom = std::max(max_bottom, lb.box.bottom());
  }
  auto clamp_shift = [](long shift, double lo, double hi) -> long {
    const auto lo_i = static_cast<long>(std::ceil(lo));
    const auto hi_i = static_cast<long>(std::floor(hi));
    if (lo_i > hi_i) return 0;
    return std::clamp(shift, lo_i, hi_i);
  };
  dx = clamp_shift(dx, -min_left, r.image_w - max_right);
  dy = clamp_shift(dy, -min_top, r.image_h - max_bottom);

  LabelRecord out = r;
  for (auto& lb : out.boxes) {
    lb.box.x += static_cast<double>(dx);
    lb.box.y += static_cast<double>(dy);
  }
  return out;
}

LabelRecord flip_horizontal(const LabelRecord& r) {
  LabelRecord out = r;
  for (auto& lb : out.boxes) lb.box.x = static_cast<double>(r.image_w) - lb.box.x;
  return out;
}

LabelRecord augment_jitter(const LabelRecord& r, std::uint64_t seed, unsigned max_drift,
                           bool allow_flip) {
  std::mt19937_64 rng(seed);
  const long d = static_cast<long>(max_drift);
  std::uniform_int_distribution<long> drift(-d, d);
  const long dx = drift(rng);
  const long dy = drift(rng);
  const bool flip = std::bernoulli_distribution(0.5)(rng);
  LabelRecord out = apply_drift(r, dx, dy);
  return allow_flip && flip ? flip_horizontal(out) : out;
}

}  // namespace odf
