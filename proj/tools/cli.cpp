// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "odf/error.hpp"
#include "odf/geometry.hpp"
#include "odf/hyperopt.hpp"
#include "odf/matching.hpp"
#include "odf/pipeline.hpp"
#include "odf/record_io.hpp"
#include "odf/sparse_labels.hpp"
#include "odf/transfer_plan.hpp"

namespace odf::cli {

namespace {

using nlohmann::json;

// SqueezeDet's KITTI anchor shapes.
const char* const kDefaultTemplates =
    "36x37,366x174,115x59,162x87,38x90,258x173,224x108,78x170,72x43";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<double> split_dims(const std::string& text, std::size_t expected, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError(std::string(flag) + ": cannot parse '" + text + "'");
    }
  }
  if (out.size() != expected) {
    throw UsageError(std::string(flag) + ": expected " + std::to_string(expected) +
                     " 'x'-separated values, got '" + text + "'");
  }
  return out;
}

std::vector<Extent> parse_templates(const std::string& text) {
  std::vector<Extent> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto wh = split_dims(part, 2, "--templates");
    out.push_back({wh[0], wh[1]});
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to `path`, or to `fallback` when path is empty or "-".
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw Error(Errc::io, "cannot open " + path + " for writing");
      os_ = &file_;
    }
  }
  std::ostream& stream() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

// ---------------------------------------------------------------------------

struct GenDataArgs {
  std::size_t images = 100;
  std::size_t max_boxes = 8;
  std::uint64_t seed = 0;
  std::uint16_t width = 1248;
  std::uint16_t height = 384;
  std::uint16_t classes = 3;
  std::string out;
};

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
  const auto records = gen_synthetic(a.seed, a.images, a.max_boxes, a.width, a.height, a.classes);
  write_records(a.out, records);
  out << "wrote " << records.size() << " records to " << a.out << "\n";
  return kExitOk;
}

struct MatchArgs {
  std::string algo = "serial";
  std::string dedup = "strict";
  std::string records;
  std::string grid = "78x24x9";
  std::string image = "1248x384";
  std::string templates = kDefaultTemplates;
  std::size_t batch = 64;
  std::string out;
};

int cmd_match(const MatchArgs& a, std::ostream& out) {
  const auto g = split_dims(a.grid, 3, "--grid");
  const auto im = split_dims(a.image, 2, "--image");
  GridSpec spec;
  spec.image_w = im[0];
  spec.image_h = im[1];
  spec.grid_w = static_cast<std::size_t>(g[0]);
  spec.grid_h = static_cast<std::size_t>(g[1]);
  spec.templates = parse_templates(a.templates);
  if (static_cast<std::size_t>(g[2]) != spec.templates.size()) {
    throw UsageError("--grid asks for " + std::to_string(static_cast<std::size_t>(g[2])) +
                     " anchors per cell but --templates lists " +
                     std::to_string(spec.templates.size()));
  }
  const auto anchors = build_anchor_grid(spec);
  const DedupMode dedup = a.dedup == "strict" ? DedupMode::strict : DedupMode::paper_literal;

  Output sink(a.out, out);
  RecordReader reader(a.records);
  std::vector<LabelRecord> batch;
  auto flush = [&] {
    if (batch.empty()) return;
    const auto boxes = boxes_per_image(batch);
    const auto costs = iou_cost_matrices(anchors, boxes);
    MatchAssignment assignment;
    if (a.algo == "serial") {
      assignment = match_serial(anchors, boxes);
    } else if (a.algo == "parallel") {
      const auto sparse = encode_batch(batch);
      assignment = match_parallel(build_rankings(anchors, sparse), sparse, {dedup, 0});
    } else if (a.algo == "greedy") {
      assignment = match_greedy_bipartite(costs);
    } else {
      assignment = match_exact(costs);
    }
    const auto deltas = compute_deltas(assignment, anchors, boxes);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      json d = json::array();
      for (const auto& t : deltas[i]) d.push_back({t.dx, t.dy, t.dw, t.dh});
      sink.stream() << json{{"image_id", batch[i].image_id},
                            {"assignment", assignment[i]},
                            {"total_weight", total_weight(assignment[i], costs[i])},
                            {"deltas", d}}
                           .dump()
                    << "\n";
    }
    batch.clear();
  };
  while (auto r = reader.next()) {
    batch.push_back(std::move(*r));
    if (batch.size() == a.batch) flush();
  }
  flush();
  return kExitOk;
}

struct BenchArgs {
  std::string pipeline;
  std::vector<std::string> compare;
  std::string records;
  std::uint64_t seed = 0;
  std::string out;
};

std::vector<LabelRecord> bench_data(const BenchArgs& a, std::size_t needed) {
  if (!a.records.empty()) return read_records(a.records);
  return gen_synthetic(a.seed, std::max<std::size_t>(needed, 1), 8, 1248, 384, 3);
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  if (a.pipeline.empty() == a.compare.empty()) {
    throw UsageError("bench needs exactly one of --pipeline or --compare");
  }
  Output sink(a.out, out);
  if (!a.pipeline.empty()) {
    const auto cfg = parse_pipeline_config(read_file(a.pipeline));
    const auto data = bench_data(a, cfg.batch_size * cfg.n_batches);
    const auto run = run_pipeline(cfg, data);
    if (!a.out.empty() && a.out != "-") out << report_table(run.report);
    sink.stream() << report_to_json(run.report) << "\n";
    return kExitOk;
  }
  const auto cfg_a = parse_pipeline_config(read_file(a.compare.at(0)));
  const auto cfg_b = parse_pipeline_config(read_file(a.compare.at(1)));
  const auto data = bench_data(a, std::max(cfg_a.batch_size * cfg_a.n_batches,
                                           cfg_b.batch_size * cfg_b.n_batches));
  const auto rep = compare_pipelines(cfg_a, cfg_b, data);
  if (!a.out.empty() && a.out != "-") {
    out << "A:\n" << report_table(rep.a) << "B:\n" << report_table(rep.b);
    out << "speedup " << rep.measured_speedup << " (predicted " << rep.predicted_speedup << ")\n";
  }
  sink.stream() << speedup_to_json(rep) << "\n";
  return kExitOk;
}

struct HyperoptArgs {
  std::string space;
  std::size_t budget = 70;
  std::string objective = "builtin:sphere";
  bool ask_tell = false;
  std::uint64_t seed = 0;
  double exploration_p = 0.1;
  double alpha = 0.5;
  double noise_eps = 0.0;
  std::string out;
};

int cmd_hyperopt(const HyperoptArgs& a, std::istream& in, std::ostream& out) {
  const SearchSpace space = parse_search_space(read_file(a.space));
  Optimizer opt(space, {a.exploration_p, a.alpha, a.noise_eps, a.seed});

  Objective objective;
  if (!a.ask_tell) {
    const std::string prefix = "builtin:";
    if (a.objective.rfind(prefix, 0) != 0) {
      throw UsageError("--objective must name a builtin, e.g. builtin:sphere");
    }
    try {
      objective = builtin_objective(a.objective.substr(prefix.size()), space);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }

  // In ask/tell mode stdout carries the protocol, so the log needs a file.
  std::optional<Output> log;
  if (!a.ask_tell || (!a.out.empty() && a.out != "-")) log.emplace(a.out, out);

  for (std::size_t i = 0; i < a.budget; ++i) {
    const auto point = opt.ask();
    double value = 0.0;
    if (a.ask_tell) {
      out << json{{"seq", i}, {"point", point}}.dump() << "\n" << std::flush;
      std::string line;
      if (!std::getline(in, line)) throw Error(Errc::protocol, "input ended before tell");
      std::istringstream ls(line);
      std::string word;
      std::string rest;
      if (!(ls >> word >> value) || word != "tell" || (ls >> rest)) {
        throw Error(Errc::protocol, "expected 'tell VALUE', got '" + line + "'");
      }
    } else {
      value = objective(point);
    }
    opt.tell(point, value);
    if (log) log->stream() << trial_log_line(opt.trials().back(), opt.best().value) << "\n";
  }
  return kExitOk;
}

int cmd_plan_transfer(std::size_t layers, const std::string& path, std::ostream& out) {
  Output sink(path, out);
  sink.stream() << plan_to_json(plan_transfer(layers)) << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"odf: anchor matching, label pipeline and hyperparameter search toolkit", "odf"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic ODR1 label file");
  gen_cmd->add_option("--images", gen.images, "Number of images")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--max-boxes", gen.max_boxes, "Upper bound on boxes per image")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "RNG seed");
  gen_cmd->add_option("--width", gen.width, "Image width in pixels");
  gen_cmd->add_option("--height", gen.height, "Image height in pixels");
  gen_cmd->add_option("--classes", gen.classes, "Number of classes")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", gen.out, "Output file")->required();

  MatchArgs match;
  auto* match_cmd = app.add_subcommand("match", "Match ground-truth boxes to anchors");
  match_cmd->add_option("--algo", match.algo, "serial|parallel|greedy|exact")
      ->check(CLI::IsMember({"serial", "parallel", "greedy", "exact"}));
  match_cmd->add_option("--dedup", match.dedup, "strict|paper-literal (parallel only)")
      ->check(CLI::IsMember({"strict", "paper-literal"}));
  match_cmd->add_option("--records", match.records, "ODR1 label file")->required();
  match_cmd->add_option("--grid", match.grid, "GWxGHxK");
  match_cmd->add_option("--image", match.image, "WxH");
  match_cmd->add_option("--templates", match.templates, "Comma-separated WxH anchor shapes");
  match_cmd->add_option("--batch", match.batch, "Images per batch")->check(CLI::PositiveNumber);
  match_cmd->add_option("--out", match.out, "Output JSONL (default stdout)");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run the staged label pipeline");
  bench_cmd->add_option("--pipeline", bench.pipeline, "Pipeline config JSON");
  bench_cmd->add_option("--compare", bench.compare, "Two pipeline configs A.json B.json")
      ->expected(2);
  bench_cmd->add_option("--records", bench.records, "ODR1 label file (default: synthetic)");
  bench_cmd->add_option("--seed", bench.seed, "Seed for synthetic data");
  bench_cmd->add_option("--out", bench.out, "Report JSON (default stdout)");

  HyperoptArgs hyp;
  auto* hyp_cmd = app.add_subcommand("hyperopt", "Black-box hyperparameter search");
  hyp_cmd->add_option("--space", hyp.space, "Search space JSON")->required();
  hyp_cmd->add_option("--budget", hyp.budget, "Number of evaluations")->check(CLI::PositiveNumber);
  auto* objective_opt =
      hyp_cmd->add_option("--objective", hyp.objective, "builtin:sphere | builtin:table3-proxy");
  auto* ask_tell_opt =
      hyp_cmd->add_flag("--ask-tell", hyp.ask_tell, "Read 'tell VALUE' lines from stdin");
  objective_opt->excludes(ask_tell_opt);
  hyp_cmd->add_option("--seed", hyp.seed, "RNG seed");
  hyp_cmd->add_option("--exploration-p", hyp.exploration_p, "Uniform exploration probability")
      ->check(CLI::Range(0.0, 1.0));
  hyp_cmd->add_option("--alpha", hyp.alpha, "Lipschitz grid growth factor")
      ->check(CLI::PositiveNumber);
  hyp_cmd->add_option("--noise-eps", hyp.noise_eps, "Noise slack")->check(CLI::NonNegativeNumber);
  hyp_cmd->add_option("--out", hyp.out, "Trial log JSONL");

  std::size_t layers = 10;
  std::string plan_out;
  auto* plan_cmd = app.add_subcommand("plan-transfer", "Enumerate AnB/BnB transfer schedules");
  plan_cmd->add_option("--layers", layers, "Layer count L")->check(CLI::PositiveNumber);
  plan_cmd->add_option("--out", plan_out, "Output JSON (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen, out);
    if (*match_cmd) return cmd_match(match, out);
    if (*bench_cmd) return cmd_bench(bench, out);
    if (*hyp_cmd) return cmd_hyperopt(hyp, in, out);
    if (*plan_cmd) return cmd_plan_transfer(layers, plan_out, out);
  } catch (const UsageError& e) {
    err << "odf: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const Error& e) {
    err << "odf: " << to_string(e.code()) << " error: " << e.what() << "\n";
    return e.code() == Errc::parameter ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    err << "odf: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace odf::cli
