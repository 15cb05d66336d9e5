// SPDX-License-Identifier: Apache-2.0
#include <json.hpp>

#include <cstdio>
#include <sstream>

#include "odf/error.hpp"
#include "odf/pipeline.hpp"

namespace odf {

using nlohmann::json;

namespace {

StageKind kind_from_string(const std::string& s) {
  if (s == "noop") return StageKind::noop;
  if (s == "parse") return StageKind::parse;
  if (s == "augment") return StageKind::augment;
  if (s == "encode" || s == "encode_sparse") return StageKind::encode;
  if (s == "match") return StageKind::match;
  if (s == "deltas") return StageKind::deltas;
  if (s == "update") return StageKind::update;
  throw Error(Errc::invalid_spec, "unknown stage kind '" + s + "'");
}

bool is_kind_name(const std::string& s) {
  try {
    kind_from_string(s);
    return true;
  } catch (const Error&) {
    return false;
  }
}

Placement placement_from_string(const std::string& s) {
  if (s == "host" || s == "cpu") return Placement::host;
  if (s == "accelerator" || s == "gpu") return Placement::accelerator;
  throw Error(Errc::invalid_spec, "unknown placement '" + s + "'");
}

MatcherKind matcher_from_string(const std::string& s) {
  if (s == "serial") return MatcherKind::serial;
  if (s == "parallel") return MatcherKind::parallel;
  if (s == "greedy") return MatcherKind::greedy;
  if (s == "exact") return MatcherKind::exact;
  throw Error(Errc::invalid_spec, "unknown matcher '" + s + "'");
}

DedupMode dedup_from_string(const std::string& s) {
  if (s == "strict") return DedupMode::strict;
  if (s == "paper-literal" || s == "paper_literal") return DedupMode::paper_literal;
  throw Error(Errc::invalid_spec, "unknown dedup mode '" + s + "'");
}

json report_json(const ThroughputReport& r) {
  json stages = json::array();
  for (std::size_t i = 0; i < r.stage_names.size(); ++i) {
    stages.push_back({{"name", r.stage_names[i]},
                      {"busy_ms", r.per_stage_busy_ms[i]},
                      {"processed", r.per_stage_processed[i]}});
  }
  return {{"batches_per_sec", r.batches_per_sec},
          {"images_per_sec", r.images_per_sec},
          {"wall_ms", r.wall_ms},
          {"predicted_batches_per_sec", r.predicted_batches_per_sec},
          {"per_stage_busy_ms", r.per_stage_busy_ms},
          {"batch_size", r.batch_size},
          {"n_batches", r.n_batches},
          {"prefetch_depth", r.prefetch_depth},
          {"stages", stages}};
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& json_text) {
  PipelineConfig cfg;
  try {
    const json j = json::parse(json_text);
    cfg.batch_size = j.value("batch_size", std::size_t{1});
    cfg.prefetch_depth = j.value("prefetch_depth", std::size_t{1});
    cfg.n_batches = j.value("n_batches", std::size_t{1});
    cfg.matcher = matcher_from_string(j.value("matcher", std::string("serial")));
    cfg.dedup = dedup_from_string(j.value("dedup", std::string("strict")));
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      cfg.grid.image_w = g.at("image_w").get<double>();
      cfg.grid.image_h = g.at("image_h").get<double>();
      cfg.grid.grid_w = g.at("grid_w").get<std::size_t>();
      cfg.grid.grid_h = g.at("grid_h").get<std::size_t>();
      cfg.grid.templates.clear();
      for (const auto& t : g.at("templates")) {
        cfg.grid.templates.push_back({t.at(0).get<double>(), t.at(1).get<double>()});
      }
    }
    if (j.contains("augment")) {
      cfg.augment_drift = j.at("augment").value("max_drift", 0u);
      cfg.augment_flip = j.at("augment").value("flip", false);
    }
    for (const auto& s : j.at("stages")) {
      StageSpec st;
      st.name = s.at("name").get<std::string>();
      st.kind = kind_from_string(s.value("kind", is_kind_name(st.name) ? st.name : std::string("noop")));
      st.fixed_ms = s.value("fixed_ms", 0.0);
      st.per_box_ms = s.value("per_box_ms", 0.0);
      st.placement = placement_from_string(s.value("placement", std::string("host")));
      st.transfer_cost_ms = s.value("transfer_cost_ms", 0.0);
      st.simulate = s.value("simulate", true);
      cfg.stages.push_back(std::move(st));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::format, std::string("malformed pipeline config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

std::string report_to_json(const ThroughputReport& r) { return report_json(r).dump(2); }

std::string speedup_to_json(const SpeedupReport& r) {
  return json{{"a", report_json(r.a)},
              {"b", report_json(r.b)},
              {"measured_speedup", r.measured_speedup},
              {"predicted_speedup", r.predicted_speedup}}
      .dump(2);
}

std::string report_table(const ThroughputReport& r) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %12s %10s\n", "stage", "busy_ms", "batches");
  os << line;
  for (std::size_t i = 0; i < r.stage_names.size(); ++i) {
    std::snprintf(line, sizeof line, "%-16s %12.2f %10zu\n", r.stage_names[i].c_str(),
                  r.per_stage_busy_ms[i], r.per_stage_processed[i]);
    os << line;
  }
  std::snprintf(line, sizeof line,
                "wall %.2f ms | %.2f batches/s (predicted %.2f) | %.2f images/s | prefetch %zu\n",
                r.wall_ms, r.batches_per_sec, r.predicted_batches_per_sec, r.images_per_sec,
                r.prefetch_depth);
  os << line;
  return os.str();
}

}  // namespace odf
