// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "odf/geometry.hpp"
#include "odf/matching.hpp"
#include "odf/sparse_labels.hpp"

namespace odf {

enum class Placement { host, accelerator };

/// What a stage does to each batch besides spending its modeled time.
enum class StageKind { noop, parse, augment, encode, match, deltas, update };

struct StageSpec {
  std::string name;
  StageKind kind = StageKind::noop;
  double fixed_ms = 0.0;
  double per_box_ms = 0.0;
  Placement placement = Placement::host;
  /// Charged when this stage's placement differs from the previous stage's
  /// (the source counts as host).
  double transfer_cost_ms = 0.0;
  /// Pad every batch up to the modeled cost with a sleep. When false the
  /// stage runs at the speed of its real work.
  bool simulate = true;
};

enum class MatcherKind { serial, parallel, greedy, exact };

struct PipelineConfig {
  std::vector<StageSpec> stages;
  std::size_t batch_size = 1;
  /// Queue capacity between stages; 0 runs every stage of a batch
  /// back-to-back on one thread.
  std::size_t prefetch_depth = 1;
  std::size_t n_batches = 1;

  MatcherKind matcher = MatcherKind::serial;
  DedupMode dedup = DedupMode::strict;
  GridSpec grid{1248.0, 384.0, 78, 24, {{36, 37}, {366, 174}, {115, 59}, {162, 87}, {38, 90},
                                         {258, 173}, {224, 108}, {78, 170}, {72, 43}}};
  unsigned augment_drift = 0;
  bool augment_flip = false;
};

/// Throws Error{invalid_spec} for empty stage lists, negative costs, zero
/// batch sizes, or stages whose inputs are produced later in the list.
void validate(const PipelineConfig& cfg);

/// Modeled milliseconds of stage `i` including its transfer charge.
double stage_cost_ms(const PipelineConfig& cfg, std::size_t i, double boxes_per_batch = 0.0);

/// Bottleneck model: 1000 / max(stage ms) when prefetching, else
/// 1000 / sum(stage ms).
double model_throughput(const PipelineConfig& cfg, double boxes_per_batch = 0.0);

struct ThroughputReport {
  double batches_per_sec = 0.0;
  double images_per_sec = 0.0;
  double wall_ms = 0.0;
  std::vector<std::string> stage_names;
  std::vector<double> per_stage_busy_ms;
  std::vector<std::size_t> per_stage_processed;
  double predicted_batches_per_sec = 0.0;
  std::size_t batch_size = 0;
  std::size_t n_batches = 0;
  std::size_t prefetch_depth = 0;
};

struct PipelineRun {
  ThroughputReport report;
  /// Per batch, in exit order; empty when no match stage ran.
  std::vector<MatchAssignment> assignments;
  std::vector<std::size_t> exit_order;
};

/// Streams n_batches batches of batch_size records through the stages.
/// Throws Error{underrun} when `data` is too short.
PipelineRun run_pipeline(const PipelineConfig& cfg, std::span<const LabelRecord> data);

struct SpeedupReport {
  ThroughputReport a;
  ThroughputReport b;
  double measured_speedup = 0.0;   ///< b / a
  double predicted_speedup = 0.0;  ///< b / a
};

SpeedupReport compare_pipelines(const PipelineConfig& a, const PipelineConfig& b,
                                std::span<const LabelRecord> data);

// JSON surfaces.
PipelineConfig parse_pipeline_config(const std::string& json_text);
std::string report_to_json(const ThroughputReport& r);
std::string speedup_to_json(const SpeedupReport& r);
std::string report_table(const ThroughputReport& r);

}  // namespace odf
