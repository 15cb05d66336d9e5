// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "odf/record_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result odf_run(std::vector<std::string> args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = odf::cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::vector<json> lines(const std::string& text) {
  std::vector<json> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct Scratch {
  fs::path dir = fs::temp_directory_path() / "odf_cli_test";
  Scratch() { fs::create_directories(dir); }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

const std::string kConfigs = ODF_CONFIG_DIR;

}  // namespace

TEST_CASE("usage errors") {
  CHECK(odf_run({}).code == odf::cli::kExitUsage);
  const auto r = odf_run({"frobnicate"});
  CHECK(r.code == odf::cli::kExitUsage);
  CHECK_FALSE(r.err.empty());
  CHECK(odf_run({"match", "--bogus"}).code == odf::cli::kExitUsage);
  CHECK(odf_run({"plan-transfer", "--layers", "0"}).code == odf::cli::kExitUsage);
  CHECK(odf_run({"bench"}).code == odf::cli::kExitUsage);
}

TEST_CASE("plan-transfer") {
  const auto r = odf_run({"plan-transfer", "--layers", "3"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  REQUIRE(j.size() == 12);
  CHECK(j[0].at("label") == "A1B");
  CHECK(j[3].at("label") == "A1B+");
  CHECK(j[11].at("label") == "B3B+");
  CHECK(json::parse(odf_run({"plan-transfer"}).out).size() == 40);
}

TEST_CASE("gen-data and match") {
  Scratch s;
  const auto gen = odf_run({"gen-data", "--images", "12", "--max-boxes", "6", "--seed", "3", "--out", s / "d.odr"});
  REQUIRE(gen.code == 0);
  CHECK(odf::read_records(s / "d.odr").size() == 12);

  const std::vector<std::string> base = {"match", "--records", s / "d.odr", "--grid", "16x6x9", "--batch", "5"};
  auto with = [&](std::vector<std::string> extra) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
  };
  const auto serial = odf_run(with({"--algo", "serial"}));
  const auto parallel = odf_run(with({"--algo", "parallel", "--dedup", "strict"}));
  REQUIRE(serial.code == 0);
  CHECK(serial.out == parallel.out);

  const auto rows = lines(serial.out);
  REQUIRE(rows.size() == 12);
  for (const auto& row : rows) {
    CHECK(row.contains("image_id"));
    CHECK(row.at("assignment").size() == row.at("deltas").size());
    CHECK(row.at("total_weight").is_number());
  }

  double exact_total = 0.0, greedy_total = 0.0, serial_total = 0.0;
  for (const auto& row : lines(odf_run(with({"--algo", "exact"})).out)) exact_total += row.at("total_weight").get<double>();
  for (const auto& row : lines(odf_run(with({"--algo", "greedy"})).out)) greedy_total += row.at("total_weight").get<double>();
  for (const auto& row : rows) serial_total += row.at("total_weight").get<double>();
  CHECK(exact_total <= greedy_total + 1e-9);
  CHECK(exact_total <= serial_total + 1e-9);

  REQUIRE(odf_run(with({"--algo", "serial", "--out", s / "m.jsonl"})).code == 0);
  CHECK(slurp(s / "m.jsonl") == serial.out);

  CHECK(odf_run(with({"--algo", "quantum"})).code == odf::cli::kExitUsage);
  CHECK(odf_run(with({"--grid", "16x6x2"})).code == odf::cli::kExitUsage);  // K disagrees with templates
  CHECK(odf_run({"match", "--records", s / "missing.odr"}).code == odf::cli::kExitData);

  std::ofstream(s / "bad.odr") << "XXXX";
  CHECK(odf_run({"match", "--records", s / "bad.odr"}).code == odf::cli::kExitData);
}

TEST_CASE("hyperopt with a builtin objective") {
  Scratch s;
  const auto r = odf_run({"hyperopt", "--space", kConfigs + "/table3_space.json", "--budget", "70",
                          "--objective", "builtin:table3-proxy", "--seed", "1"});
  REQUIRE(r.code == 0);
  const auto trials = lines(r.out);
  REQUIRE(trials.size() == 70);
  double best = -1e300;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    CHECK(t.at("seq") == i);
    const auto p = t.at("point").get<std::vector<double>>();
    CHECK(p[0] >= 1);
    CHECK(p[0] <= 16);
    CHECK(p[0] == std::round(p[0]));
    best = std::max(best, t.at("value").get<double>());
    CHECK(t.at("best_so_far") == best);
  }
  CHECK(r.out == odf_run({"hyperopt", "--space", kConfigs + "/table3_space.json", "--budget", "70",
                          "--objective", "builtin:table3-proxy", "--seed", "1"}).out);
  CHECK(odf_run({"hyperopt", "--space", kConfigs + "/table3_space.json", "--objective", "builtin:nope"}).code ==
        odf::cli::kExitUsage);
}

TEST_CASE("hyperopt ask/tell") {
  Scratch s;
  const auto r = odf_run({"hyperopt", "--space", kConfigs + "/unit_square_space.json", "--budget", "3",
                          "--ask-tell", "--out", s / "log.jsonl"},
                         "tell 0.5\ntell -1\ntell 2.25\n");
  REQUIRE(r.code == 0);
  const auto asks = lines(r.out);
  REQUIRE(asks.size() == 3);
  CHECK(asks[2].at("seq") == 2);
  const auto log = lines(slurp(s / "log.jsonl"));
  REQUIRE(log.size() == 3);
  CHECK(log[1].at("best_so_far") == 0.5);
  CHECK(log[2].at("value") == 2.25);
  CHECK(log[0].at("point") == asks[0].at("point"));

  CHECK(odf_run({"hyperopt", "--space", kConfigs + "/unit_square_space.json", "--budget", "3", "--ask-tell"},
                "tell 1\n")
            .code == odf::cli::kExitData);
  CHECK(odf_run({"hyperopt", "--space", kConfigs + "/unit_square_space.json", "--budget", "1", "--ask-tell"},
                "value 1\n")
            .code == odf::cli::kExitData);
  CHECK(odf_run({"hyperopt", "--space", kConfigs + "/unit_square_space.json", "--ask-tell", "--objective",
                 "builtin:sphere"})
            .code == odf::cli::kExitUsage);
}

TEST_CASE("bench") {
  Scratch s;
  const auto r = odf_run({"bench", "--pipeline", kConfigs + "/two_stage_prefetch.json", "--out", s / "rep.json"});
  REQUIRE(r.code == 0);
  const auto rep = json::parse(slurp(s / "rep.json"));
  CHECK(rep.at("n_batches") == 50);
  CHECK(rep.at("predicted_batches_per_sec").get<double>() == doctest::Approx(100.0));
  CHECK(r.out.find("busy_ms") != std::string::npos);

  const auto cmp = odf_run({"bench", "--compare", kConfigs + "/two_stage_sync.json",
                            kConfigs + "/two_stage_prefetch.json"});
  REQUIRE(cmp.code == 0);
  const auto j = json::parse(cmp.out);
  CHECK(j.at("predicted_speedup").get<double>() == doctest::Approx(1.5));
  CHECK(j.at("measured_speedup").get<double>() > 1.0);
}
