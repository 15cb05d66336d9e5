// SPDX-License-Identifier: Apache-2.0
#include "odf/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

#include "odf/error.hpp"
#include "odf/parallel.hpp"

namespace odf {

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(Errc::invalid_input, "cost matrix data does not match its shape");
  }
}

CostMatrix iou_cost_matrix(std::span<const Box> anchors, std::span<const Box> boxes) {
  CostMatrix cost(boxes.size(), anchors.size());
  for (std::size_t r = 0; r < boxes.size(); ++r) {
    for (std::size_t c = 0; c < anchors.size(); ++c) {
      cost(r, c) = matching_distance(boxes[r], anchors[c]);
    }
  }
  return cost;
}

std::vector<CostMatrix> iou_cost_matrices(std::span<const Box> anchors,
                                          const std::vector<std::vector<Box>>& batch) {
  std::vector<CostMatrix> out;
  out.reserve(batch.size());
  for (const auto& boxes : batch) out.push_back(iou_cost_matrix(anchors, boxes));
  return out;
}

namespace {

void check_capacity(std::size_t image, std::size_t boxes, std::size_t anchors) {
  if (boxes > anchors) {
    throw Error(Errc::capacity, "image " + std::to_string(image) + " has " +
                                    std::to_string(boxes) + " boxes but only " +
                                    std::to_string(anchors) + " anchors");
  }
}

std::vector<std::size_t> stable_argsort(std::span<const double> keys) {
  std::vector<std::size_t> ids(keys.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::stable_sort(ids.begin(), ids.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return ids;
}

std::vector<double> iou_distances(const Box& box, std::span<const Box> anchors) {
  std::vector<double> d(anchors.size());
  for (std::size_t a = 0; a < anchors.size(); ++a) d[a] = matching_distance(box, anchors[a]);
  return d;
}

std::vector<double> euclid_distances(const Box& box, std::span<const Box> anchors) {
  std::vector<double> d(anchors.size());
  for (std::size_t a = 0; a < anchors.size(); ++a) d[a] = euclidean_distance(box, anchors[a]);
  return d;
}

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

}  // namespace

MatchAssignment match_serial(std::span<const Box> anchors,
                             const std::vector<std::vector<Box>>& batch) {
  if (anchors.empty()) throw Error(Errc::invalid_input, "anchor list is empty");
  MatchAssignment matched(batch.size());
  std::vector<char> used(anchors.size());
  for (std::size_t idx = 0; idx < batch.size(); ++idx) {
    check_capacity(idx, batch[idx].size(), anchors.size());
    std::fill(used.begin(), used.end(), 0);
    auto& out = matched[idx];
    out.reserve(batch[idx].size());
    for (const Box& bbox : batch[idx]) {
      const auto distances = iou_distances(bbox, anchors);
      std::size_t best = kNone;
      for (const std::size_t d : stable_argsort(distances)) {
        if (!(distances[d] < 1.0)) break;
        if (!used[d]) {
          best = d;
          break;
        }
      }
      if (best == kNone) {
        const auto edist = euclid_distances(bbox, anchors);
        for (const std::size_t d : stable_argsort(edist)) {
          if (!used[d]) {
            best = d;
            break;
          }
        }
      }
      used[best] = 1;
      out.push_back(best);
    }
  }
  return matched;
}

DistanceRanking build_rankings(std::span<const Box> anchors, const SparseLabelBatch& rois,
                               std::size_t threads) {
  if (anchors.empty()) throw Error(Errc::invalid_input, "anchor list is empty");
  validate(rois);

  const std::size_t num_rois = rois.size();
  const std::size_t n_anchors = anchors.size();
  DistanceRanking out;
  out.anchor_count = n_anchors;
  out.dist_ids.resize(num_rois);
  out.euclid_ids.resize(num_rois);
  out.crossover.resize(num_rois);

  // Each row only writes its own slot.
  parallel_for(num_rois, threads, [&](std::size_t i) {
    const Box& box = rois.rois_values[i];
    const auto distances = iou_distances(box, anchors);
    const auto sorted_dists = stable_argsort(distances);
    auto edist_ids = stable_argsort(euclid_distances(box, anchors));

    std::size_t crossover = 0;
    while (crossover < n_anchors && distances[sorted_dists[crossover]] < 1.0) ++crossover;

    std::vector<std::size_t> dist_ids(sorted_dists.begin(), sorted_dists.begin() + crossover);
    dist_ids.insert(dist_ids.end(), edist_ids.begin(),
                    edist_ids.begin() + static_cast<std::ptrdiff_t>(n_anchors - crossover));

    out.dist_ids[i] = std::move(dist_ids);
    out.euclid_ids[i] = std::move(edist_ids);
    out.crossover[i] = crossover;
  });
  return out;
}

namespace {

std::vector<std::size_t> best_aidx_strict(const DistanceRanking& ranking, std::size_t begin,
                                          std::size_t end) {
  std::vector<char> used(ranking.anchor_count);
  std::vector<std::size_t> els_used;
  els_used.reserve(end - begin);
  for (std::size_t r = begin; r < end; ++r) {
    std::size_t pick = kNone;
    for (const std::size_t a : ranking.dist_ids[r]) {
      if (!used[a]) {
        pick = a;
        break;
      }
    }
    if (pick == kNone) {
      for (const std::size_t a : ranking.euclid_ids[r]) {
        if (!used[a]) {
          pick = a;
          break;
        }
      }
    }
    used[pick] = 1;
    els_used.push_back(pick);
  }
  return els_used;
}

// Literal reading: row i only masks out the anchor chosen for row i - 1.
std::vector<std::size_t> best_aidx_paper_literal(const DistanceRanking& ranking,
                                                 std::size_t begin, std::size_t end) {
  std::vector<std::size_t> els_used;
  els_used.reserve(end - begin);
  for (std::size_t r = begin; r < end; ++r) {
    if (r == begin) {
      els_used.push_back(ranking.dist_ids[r][0]);
      continue;
    }
    const std::size_t prev = els_used.back();
    auto differs = [prev](std::size_t a) { return a != prev; };
    auto it = std::find_if(ranking.dist_ids[r].begin(), ranking.dist_ids[r].end(), differs);
    if (it == ranking.dist_ids[r].end()) {
      it = std::find_if(ranking.euclid_ids[r].begin(), ranking.euclid_ids[r].end(), differs);
    }
    els_used.push_back(*it);
  }
  return els_used;
}

}  // namespace

MatchAssignment match_parallel(const DistanceRanking& ranking, const SparseLabelBatch& rois,
                               const MatchConfig& cfg) {
  validate(rois);
  if (ranking.dist_ids.size() != rois.size() || ranking.euclid_ids.size() != rois.size()) {
    throw Error(Errc::inconsistency, "ranking was not built from these rois");
  }
  if (ranking.anchor_count == 0) throw Error(Errc::invalid_input, "ranking has no anchors");

  // im_aidx: contiguous row range of each image (rois_idx is sorted).
  std::vector<std::size_t> first(rois.batch_size + 1, rois.size());
  for (std::size_t i = rois.size(); i-- > 0;) first[rois.rois_idx[i].first] = i;
  for (std::size_t b = rois.batch_size; b-- > 0;) first[b] = std::min(first[b], first[b + 1]);
  for (std::size_t b = 0; b < rois.batch_size; ++b) {
    check_capacity(b, first[b + 1] - first[b], ranking.anchor_count);
  }

  MatchAssignment out(rois.batch_size);
  parallel_for(rois.batch_size, cfg.threads, [&](std::size_t b) {
    if (first[b] == first[b + 1]) return;
    out[b] = cfg.dedup == DedupMode::strict
                 ? best_aidx_strict(ranking, first[b], first[b + 1])
                 : best_aidx_paper_literal(ranking, first[b], first[b + 1]);
  });
  return out;
}

std::vector<std::size_t> match_serial_costs(const CostMatrix& cost,
                                            std::span<const std::size_t> row_order) {
  check_capacity(0, cost.rows(), cost.cols());
  std::vector<std::size_t> order(row_order.begin(), row_order.end());
  if (order.empty()) {
    order.resize(cost.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  std::vector<char> seen(cost.rows());
  for (const std::size_t r : order) {
    if (r >= cost.rows() || seen[r]) {
      throw Error(Errc::invalid_input, "row order is not a permutation of the rows");
    }
    seen[r] = 1;
  }
  if (order.size() != cost.rows()) {
    throw Error(Errc::invalid_input, "row order is not a permutation of the rows");
  }

  std::vector<std::size_t> out(cost.rows(), kNone);
  std::vector<char> used(cost.cols());
  for (const std::size_t r : order) {
    std::size_t best = kNone;
    for (std::size_t c = 0; c < cost.cols(); ++c) {
      if (!used[c] && (best == kNone || cost(r, c) < cost(r, best))) best = c;
    }
    used[best] = 1;
    out[r] = best;
  }
  return out;
}

std::vector<std::size_t> match_greedy_bipartite(const CostMatrix& cost) {
  check_capacity(0, cost.rows(), cost.cols());
  struct Edge {
    double w;
    std::size_t r;
    std::size_t c;
  };
  std::vector<Edge> edges;
  edges.reserve(cost.rows() * cost.cols());
  for (std::size_t r = 0; r < cost.rows(); ++r) {
    for (std::size_t c = 0; c < cost.cols(); ++c) edges.push_back({cost(r, c), r, c});
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.w, a.r, a.c) < std::tie(b.w, b.r, b.c);
  });

  std::vector<std::size_t> out(cost.rows(), kNone);
  std::vector<char> col_used(cost.cols());
  std::size_t matched = 0;
  for (const Edge& e : edges) {
    if (matched == cost.rows()) break;
    if (out[e.r] != kNone || col_used[e.c]) continue;
    out[e.r] = e.c;
    col_used[e.c] = 1;
    ++matched;
  }
  return out;
}

MatchAssignment match_greedy_bipartite(std::span<const CostMatrix> costs) {
  MatchAssignment out(costs.size());
  for (std::size_t b = 0; b < costs.size(); ++b) {
    check_capacity(b, costs[b].rows(), costs[b].cols());
    out[b] = match_greedy_bipartite(costs[b]);
  }
  return out;
}

namespace {

struct HungarianResult {
  double total = 0.0;
  std::vector<std::size_t> assignment;  // row -> column
};

// Shortest augmenting path with potentials; rows <= cols. O(rows^2 * cols).
HungarianResult hungarian(const CostMatrix& a) {
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1), v(m + 1);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> done(m + 1, 0);
    do {
      done[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (done[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (done[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  HungarianResult res;
  res.assignment.assign(n, kNone);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) res.assignment[p[j] - 1] = j - 1;
  }
  for (std::size_t i = 0; i < n; ++i) res.total += a(i, res.assignment[i]);
  return res;
}

double optimal_rest(const CostMatrix& cost, std::size_t from_row, const std::vector<char>& used) {
  if (from_row >= cost.rows()) return 0.0;
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < cost.cols(); ++c) {
    if (!used[c]) cols.push_back(c);
  }
  CostMatrix sub(cost.rows() - from_row, cols.size());
  for (std::size_t r = from_row; r < cost.rows(); ++r) {
    for (std::size_t k = 0; k < cols.size(); ++k) sub(r - from_row, k) = cost(r, cols[k]);
  }
  return hungarian(sub).total;
}

}  // namespace

std::vector<std::size_t> match_exact(const CostMatrix& cost) {
  check_capacity(0, cost.rows(), cost.cols());
  for (std::size_t r = 0; r < cost.rows(); ++r) {
    for (const double w : cost.row(r)) {
      if (!std::isfinite(w)) throw Error(Errc::invalid_input, "cost matrix has non-finite entries");
    }
  }
  if (cost.rows() == 0) return {};

  const double optimum = hungarian(cost).total;
  const double tol = 1e-9 * std::max(1.0, std::abs(optimum));

  // Fix rows one at a time to the smallest column that still admits an
  // optimal completion.
  std::vector<std::size_t> out(cost.rows(), kNone);
  std::vector<char> used(cost.cols());
  double fixed = 0.0;
  for (std::size_t r = 0; r < cost.rows(); ++r) {
    double lower_rest = 0.0;
    for (std::size_t q = r + 1; q < cost.rows(); ++q) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < cost.cols(); ++c) {
        if (!used[c]) best = std::min(best, cost(q, c));
      }
      lower_rest += best;
    }
    for (std::size_t c = 0; c < cost.cols(); ++c) {
      if (used[c]) continue;
      const double head = fixed + cost(r, c);
      if (head + lower_rest > optimum + tol) continue;
      used[c] = 1;
      if (head + optimal_rest(cost, r + 1, used) <= optimum + tol) {
        out[r] = c;
        fixed = head;
        break;
      }
      used[c] = 0;
    }
    if (out[r] == kNone) {
      throw Error(Errc::inconsistency, "exact matcher lost the optimal completion");
    }
  }
  return out;
}

MatchAssignment match_exact(std::span<const CostMatrix> costs) {
  MatchAssignment out(costs.size());
  for (std::size_t b = 0; b < costs.size(); ++b) {
    check_capacity(b, costs[b].rows(), costs[b].cols());
    out[b] = match_exact(costs[b]);
  }
  return out;
}

double total_weight(std::span<const std::size_t> a, const CostMatrix& cost) {
  if (a.size() != cost.rows()) {
    throw Error(Errc::inconsistency, "assignment size differs from cost matrix rows");
  }
  double sum = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a[r] >= cost.cols()) {
      throw Error(Errc::inconsistency, "assigned anchor index " + std::to_string(a[r]) +
                                           " is outside the cost matrix");
    }
    sum += cost(r, a[r]);
  }
  return sum;
}

double total_weight(const MatchAssignment& a, std::span<const CostMatrix> costs) {
  if (a.size() != costs.size()) {
    throw Error(Errc::inconsistency, "assignment and cost matrices cover different batches");
  }
  double sum = 0.0;
  for (std::size_t b = 0; b < a.size(); ++b) sum += total_weight(a[b], costs[b]);
  return sum;
}

DeltaTarget encode_delta(const Box& gt, const Box& anchor) {
  validate(gt);
  validate(anchor);
  return {(gt.x - anchor.x) / anchor.w, (gt.y - anchor.y) / anchor.h,
          std::log(gt.w / anchor.w), std::log(gt.h / anchor.h)};
}

Box decode_delta(const DeltaTarget& d, const Box& anchor) {
  return {anchor.x + d.dx * anchor.w, anchor.y + d.dy * anchor.h, anchor.w * std::exp(d.dw),
          anchor.h * std::exp(d.dh)};
}

std::vector<std::vector<DeltaTarget>> compute_deltas(const MatchAssignment& a,
                                                     std::span<const Box> anchors,
                                                     const std::vector<std::vector<Box>>& batch,
                                                     std::size_t threads) {
  if (a.size() != batch.size()) {
    throw Error(Errc::inconsistency, "assignment and batch cover different images");
  }
  for (std::size_t b = 0; b < a.size(); ++b) {
    if (a[b].size() != batch[b].size()) {
      throw Error(Errc::inconsistency, "assignment of image " + std::to_string(b) +
                                           " does not cover its boxes");
    }
    for (const std::size_t idx : a[b]) {
      if (idx >= anchors.size()) {
        throw Error(Errc::inconsistency, "assigned anchor index is out of range");
      }
    }
  }
  std::vector<std::vector<DeltaTarget>> out(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t b) {
    out[b].reserve(batch[b].size());
    for (std::size_t g = 0; g < batch[b].size(); ++g) {
      out[b].push_back(encode_delta(batch[b][g], anchors[a[b][g]]));
    }
  });
  return out;
}

}  // namespace odf
