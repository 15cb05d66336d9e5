// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "odf/geometry.hpp"
#include "odf/sparse_labels.hpp"

namespace odf {

/// assignment[image][gt] = anchor index. Ground-truth boxes keep input order.
using MatchAssignment = std::vector<std::vector<std::size_t>>;

/// Dense row-major weights: rows are ground-truth boxes, columns anchors.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// (1 - IOU) of every box against every anchor.
CostMatrix iou_cost_matrix(std::span<const Box> anchors, std::span<const Box> boxes);
std::vector<CostMatrix> iou_cost_matrices(std::span<const Box> anchors,
                                          const std::vector<std::vector<Box>>& batch);

enum class DedupMode {
  strict,         ///< skip every anchor already taken in the image
  paper_literal,  ///< skip only the anchor taken by the previous box
};

struct MatchConfig {
  DedupMode dedup = DedupMode::strict;
  std::size_t threads = 0;  ///< 0 = default_thread_count()
};

/// Per-box anchor preference lists used by the data-parallel matcher.
///
/// `dist_ids[r]` has one entry per anchor: anchors with positive IOU sorted
/// by ascending 1 - IOU, then the first (ANCHORS - crossover[r]) anchors in
/// Euclidean order. The Euclidean part may repeat prefix anchors.
/// `euclid_ids[r]` is the complete Euclidean order, which lets strict
/// selection continue past the truncated suffix.
struct DistanceRanking {
  std::size_t anchor_count = 0;
  std::vector<std::vector<std::size_t>> dist_ids;
  std::vector<std::vector<std::size_t>> euclid_ids;
  std::vector<std::size_t> crossover;
};

/// Serial form: per image, boxes in input order each take the unused anchor
/// with the smallest 1 - IOU among overlapping anchors, else the unused
/// anchor nearest in (x, y, w, h). Ties go to the lower anchor index.
MatchAssignment match_serial(std::span<const Box> anchors,
                             const std::vector<std::vector<Box>>& batch);

DistanceRanking build_rankings(std::span<const Box> anchors, const SparseLabelBatch& rois,
                               std::size_t threads = 0);

/// Data-parallel form over precomputed rankings. Images are processed
/// concurrently; within an image boxes are resolved row by row. In strict
/// mode the result equals match_serial on the same inputs.
MatchAssignment match_parallel(const DistanceRanking& ranking, const SparseLabelBatch& rois,
                               const MatchConfig& cfg = {});

/// Serial traversal on explicit weights: rows visited in `row_order`, each
/// takes its cheapest unused column. Empty `row_order` means 0..rows-1.
std::vector<std::size_t> match_serial_costs(const CostMatrix& cost,
                                            std::span<const std::size_t> row_order = {});

/// Sort all edges by (weight, row, column) and take every edge whose
/// endpoints are both still free until each row is matched.
MatchAssignment match_greedy_bipartite(std::span<const CostMatrix> costs);
std::vector<std::size_t> match_greedy_bipartite(const CostMatrix& cost);

/// Minimum-total-weight assignment (Hungarian method). Among optimal
/// assignments the lexicographically smallest is returned.
MatchAssignment match_exact(std::span<const CostMatrix> costs);
std::vector<std::size_t> match_exact(const CostMatrix& cost);

double total_weight(const MatchAssignment& a, std::span<const CostMatrix> costs);
double total_weight(std::span<const std::size_t> a, const CostMatrix& cost);

struct DeltaTarget {
  double dx = 0.0;
  double dy = 0.0;
  double dw = 0.0;
  double dh = 0.0;

  friend bool operator==(const DeltaTarget&, const DeltaTarget&) = default;
};

/// Regression targets relative to the matched anchor:
/// dx = (x - ax) / aw, dy = (y - ay) / ah, dw = ln(w / aw), dh = ln(h / ah).
DeltaTarget encode_delta(const Box& gt, const Box& anchor);
Box decode_delta(const DeltaTarget& d, const Box& anchor);

/// deltas[image][gt], shaped like the assignment.
std::vector<std::vector<DeltaTarget>> compute_deltas(const MatchAssignment& a,
                                                     std::span<const Box> anchors,
                                                     const std::vector<std::vector<Box>>& batch,
                                                     std::size_t threads = 0);

}  // namespace odf
