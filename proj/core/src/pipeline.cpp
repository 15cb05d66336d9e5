// SPDX-License-Identifier: Apache-2.0
#include "odf/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "odf/bounded_queue.hpp"
#include "odf/error.hpp"
#include "odf/record_io.hpp"

namespace odf {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point from, Clock::time_point to) {
  return std::chrono::duration<double, std::milli>(to - from).count();
}

struct Batch {
  std::size_t index = 0;
  std::vector<std::vector<std::uint8_t>> raw;
  std::vector<LabelRecord> records;
  std::size_t box_count = 0;
  SparseLabelBatch sparse;
  std::vector<std::vector<Box>> boxes;
  MatchAssignment assignment;
  std::vector<std::vector<DeltaTarget>> deltas;
};

class StageRunner {
 public:
  StageRunner(const PipelineConfig& cfg, std::vector<Box> anchors)
      : cfg_(cfg), anchors_(std::move(anchors)) {
    for (std::size_t i = 0; i < cfg.stages.size(); ++i) cost_.push_back(stage_cost_ms(cfg, i));
  }

  /// Runs stage `s` on `batch`, returns busy milliseconds.
  double run(std::size_t s, Batch& batch) const {
    const auto start = Clock::now();
    work(cfg_.stages[s].kind, batch);
    if (cfg_.stages[s].simulate) {
      const double ms = cost_[s] + cfg_.stages[s].per_box_ms * static_cast<double>(batch.box_count);
      std::this_thread::sleep_until(start + std::chrono::duration_cast<Clock::duration>(
                                                std::chrono::duration<double, std::milli>(ms)));
    }
    return elapsed_ms(start, Clock::now());
  }

 private:
  void work(StageKind kind, Batch& b) const {
    switch (kind) {
      case StageKind::noop:
      case StageKind::update:
        return;
      case StageKind::parse:
        b.records.clear();
        b.records.reserve(b.raw.size());
        for (const auto& bytes : b.raw) {
          b.records.push_back(decode_record(bytes));
          if (!boxes_in_bounds(b.records.back())) {
            throw Error(Errc::invalid_input, "record " + std::to_string(b.records.back().image_id) +
                                                 " has boxes outside the image");
          }
        }
        return;
      case StageKind::augment:
        for (std::size_t i = 0; i < b.records.size(); ++i) {
          b.records[i] = augment_jitter(b.records[i], b.index * cfg_.batch_size + i,
                                        cfg_.augment_drift, cfg_.augment_flip);
        }
        return;
      case StageKind::encode:
        b.sparse = encode_batch(b.records);
        b.boxes = boxes_per_image(b.sparse);
        return;
      case StageKind::match:
        b.assignment = match(b);
        return;
      case StageKind::deltas:
        b.deltas = compute_deltas(b.assignment, anchors_, b.boxes, 1);
        return;
    }
  }

  MatchAssignment match(const Batch& b) const {
    switch (cfg_.matcher) {
      case MatcherKind::serial:
        return match_serial(anchors_, b.boxes);
      case MatcherKind::parallel: {
        const auto ranking = build_rankings(anchors_, b.sparse, 1);
        return match_parallel(ranking, b.sparse, {cfg_.dedup, 1});
      }
      case MatcherKind::greedy:
        return match_greedy_bipartite(iou_cost_matrices(anchors_, b.boxes));
      case MatcherKind::exact:
        return match_exact(iou_cost_matrices(anchors_, b.boxes));
    }
    return {};
  }

  const PipelineConfig& cfg_;
  std::vector<Box> anchors_;
  std::vector<double> cost_;  // fixed part incl. transfer
};

bool needs_anchors(const PipelineConfig& cfg) {
  return std::any_of(cfg.stages.begin(), cfg.stages.end(), [](const StageSpec& s) {
    return s.kind == StageKind::match || s.kind == StageKind::deltas;
  });
}

}  // namespace

void validate(const PipelineConfig& cfg) {
  if (cfg.stages.empty()) throw Error(Errc::invalid_spec, "pipeline has no stages");
  if (cfg.batch_size == 0) throw Error(Errc::invalid_spec, "batch_size must be positive");
  if (cfg.n_batches == 0) throw Error(Errc::invalid_spec, "n_batches must be positive");

  bool parsed = false, encoded = false, matched = false;
  for (const auto& s : cfg.stages) {
    for (const double v : {s.fixed_ms, s.per_box_ms, s.transfer_cost_ms}) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw Error(Errc::invalid_spec, "stage '" + s.name + "' has a negative or non-finite cost");
      }
    }
    auto require = [&](bool ok, const char* what) {
      if (!ok) throw Error(Errc::invalid_spec, "stage '" + s.name + "' needs an earlier " + what + " stage");
    };
    switch (s.kind) {
      case StageKind::parse: parsed = true; break;
      case StageKind::augment: require(parsed, "parse"); break;
      case StageKind::encode: require(parsed, "parse"); encoded = true; break;
      case StageKind::match: require(encoded, "encode"); matched = true; break;
      case StageKind::deltas: require(matched, "match"); break;
      case StageKind::noop:
      case StageKind::update: break;
    }
  }
}

double stage_cost_ms(const PipelineConfig& cfg, std::size_t i, double boxes_per_batch) {
  const StageSpec& s = cfg.stages.at(i);
  const Placement prev = i == 0 ? Placement::host : cfg.stages[i - 1].placement;
  return s.fixed_ms + s.per_box_ms * boxes_per_batch +
         (s.placement != prev ? s.transfer_cost_ms : 0.0);
}

double model_throughput(const PipelineConfig& cfg, double boxes_per_batch) {
  if (cfg.stages.empty()) return 0.0;
  double total = 0.0, slowest = 0.0;
  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    const double ms = stage_cost_ms(cfg, i, boxes_per_batch);
    total += ms;
    slowest = std::max(slowest, ms);
  }
  const double per_batch = cfg.prefetch_depth >= 1 ? slowest : total;
  return per_batch > 0.0 ? 1000.0 / per_batch : std::numeric_limits<double>::infinity();
}

PipelineRun run_pipeline(const PipelineConfig& cfg, std::span<const LabelRecord> data) {
  validate(cfg);
  const std::size_t needed = cfg.batch_size * cfg.n_batches;
  if (data.size() < needed) {
    throw Error(Errc::underrun, "pipeline needs " + std::to_string(needed) + " records, got " +
                                    std::to_string(data.size()));
  }

  const StageRunner runner(cfg, needs_anchors(cfg) ? build_anchor_grid(cfg.grid) : std::vector<Box>{});
  const std::size_t n_stages = cfg.stages.size();

  // Serialize up front so the parse stage does real decoding work.
  std::vector<std::vector<std::uint8_t>> raw;
  raw.reserve(needed);
  std::size_t total_boxes = 0;
  for (std::size_t i = 0; i < needed; ++i) {
    raw.push_back(encode_record(data[i]));
    total_boxes += data[i].boxes.size();
  }
  auto make_batch = [&](std::size_t index) {
    Batch b;
    b.index = index;
    for (std::size_t k = 0; k < cfg.batch_size; ++k) {
      const std::size_t r = index * cfg.batch_size + k;
      b.raw.push_back(raw[r]);
      b.box_count += data[r].boxes.size();
    }
    // Stages that skip parsing still see the records.
    b.records.assign(data.begin() + static_cast<std::ptrdiff_t>(index * cfg.batch_size),
                     data.begin() + static_cast<std::ptrdiff_t>((index + 1) * cfg.batch_size));
    return b;
  };

  PipelineRun run;
  auto& rep = run.report;
  rep.per_stage_busy_ms.assign(n_stages, 0.0);
  rep.per_stage_processed.assign(n_stages, 0);
  for (const auto& s : cfg.stages) rep.stage_names.push_back(s.name);
  const bool keeps_assignments = needs_anchors(cfg);
  auto sink = [&](Batch&& b) {
    run.exit_order.push_back(b.index);
    if (keeps_assignments) run.assignments.push_back(std::move(b.assignment));
  };

  const auto start = Clock::now();
  if (cfg.prefetch_depth == 0) {
    for (std::size_t n = 0; n < cfg.n_batches; ++n) {
      Batch b = make_batch(n);
      for (std::size_t s = 0; s < n_stages; ++s) {
        rep.per_stage_busy_ms[s] += runner.run(s, b);
        ++rep.per_stage_processed[s];
      }
      sink(std::move(b));
    }
  } else {
    std::vector<std::unique_ptr<BoundedQueue<Batch>>> queues;
    for (std::size_t q = 0; q <= n_stages; ++q) {
      queues.push_back(std::make_unique<BoundedQueue<Batch>>(cfg.prefetch_depth));
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;

    std::vector<std::jthread> workers;
    workers.emplace_back([&] {
      for (std::size_t n = 0; n < cfg.n_batches; ++n) queues[0]->push(make_batch(n));
      queues[0]->close();
    });
    for (std::size_t s = 0; s < n_stages; ++s) {
      workers.emplace_back([&, s] {
        bool failed = false;
        while (auto item = queues[s]->pop()) {
          if (failed) continue;  // drain so upstream never blocks
          try {
            rep.per_stage_busy_ms[s] += runner.run(s, *item);
            ++rep.per_stage_processed[s];
            queues[s + 1]->push(std::move(*item));
          } catch (...) {
            failed = true;
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
        queues[s + 1]->close();
      });
    }
    while (auto item = queues[n_stages]->pop()) sink(std::move(*item));
    workers.clear();
    if (failure) std::rethrow_exception(failure);
  }
  rep.wall_ms = elapsed_ms(start, Clock::now());

  rep.batch_size = cfg.batch_size;
  rep.n_batches = cfg.n_batches;
  rep.prefetch_depth = cfg.prefetch_depth;
  rep.batches_per_sec = rep.wall_ms > 0.0 ? 1000.0 * static_cast<double>(cfg.n_batches) / rep.wall_ms : 0.0;
  rep.images_per_sec = rep.batches_per_sec * static_cast<double>(cfg.batch_size);
  rep.predicted_batches_per_sec =
      model_throughput(cfg, static_cast<double>(total_boxes) / static_cast<double>(cfg.n_batches));
  return run;
}

SpeedupReport compare_pipelines(const PipelineConfig& a, const PipelineConfig& b,
                                std::span<const LabelRecord> data) {
  SpeedupReport out;
  out.a = run_pipeline(a, data).report;
  out.b = run_pipeline(b, data).report;
  out.measured_speedup = out.a.batches_per_sec > 0.0 ? out.b.batches_per_sec / out.a.batches_per_sec : 0.0;
  out.predicted_speedup = out.a.predicted_batches_per_sec > 0.0
                              ? out.b.predicted_batches_per_sec / out.a.predicted_batches_per_sec
                              : 0.0;
  return out;
}

}  // namespace odf
