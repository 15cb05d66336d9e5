// SPDX-License-Identifier: Apache-2.0
#include <json.hpp>

#include <sstream>

#include "odf/error.hpp"
#include "odf/hyperopt.hpp"

namespace odf {

using nlohmann::json;

namespace {

json space_to_json(const SearchSpace& space) {
  json dims = json::array();
  for (const auto& d : space.dims()) {
    dims.push_back({{"name", d.name}, {"lo", d.lo}, {"hi", d.hi}, {"integer", d.is_integer}});
  }
  return dims;
}

SearchSpace space_from_json(const json& j) {
  // Accept a bare list or {"dims": [...]}.
  const json& list = j.is_object() && j.contains("dims") ? j.at("dims") : j;
  if (!list.is_array()) throw Error(Errc::invalid_spec, "search space must be a JSON list");
  std::vector<Dimension> dims;
  for (const auto& e : list) {
    Dimension d;
    d.name = e.at("name").get<std::string>();
    d.lo = e.at("lo").get<double>();
    d.hi = e.at("hi").get<double>();
    d.is_integer = e.value("integer", false);
    dims.push_back(std::move(d));
  }
  return SearchSpace(std::move(dims));
}

}  // namespace

SearchSpace parse_search_space(const std::string& json_text) {
  try {
    return space_from_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw Error(Errc::format, std::string("malformed search space: ") + e.what());
  }
}

std::string dump_search_space(const SearchSpace& space) { return space_to_json(space).dump(2); }

std::string trial_log_line(const Trial& t, double best_so_far) {
  return json{{"seq", t.seq}, {"point", t.point}, {"value", t.value}, {"best_so_far", best_so_far}}
      .dump();
}

std::string Optimizer::to_json() const {
  json trials = json::array();
  for (const auto& t : trials_) trials.push_back({{"seq", t.seq}, {"point", t.point}, {"value", t.value}});
  std::ostringstream rng_state;
  rng_state << rng_;
  json j = {
      {"space", space_to_json(space_)},
      {"exploration_p", opts_.exploration_p},
      {"alpha", opts_.alpha},
      {"noise_eps", opts_.noise_eps},
      {"seed", opts_.seed},
      {"trials", trials},
      {"lipschitz_k", lipschitz_k_},
      {"tr_radius", tr_radius_},
      {"phase", phase_ == Phase::local ? "local" : "global"},
      {"rank_deficient_fits", rank_deficient_},
      {"rng", rng_state.str()},
  };
  j["pending"] = pending_ ? json(*pending_) : json(nullptr);
  return j.dump();
}

Optimizer Optimizer::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    OptimizerOptions opts;
    opts.exploration_p = j.at("exploration_p").get<double>();
    opts.alpha = j.at("alpha").get<double>();
    opts.noise_eps = j.at("noise_eps").get<double>();
    opts.seed = j.at("seed").get<std::uint64_t>();
    Optimizer state(space_from_json(j.at("space")), opts);
    for (const auto& t : j.at("trials")) {
      state.trials_.push_back(
          {t.at("point").get<std::vector<double>>(), t.at("value").get<double>(),
           t.at("seq").get<std::size_t>()});
      if (state.trials_.size() == 1 || state.trials_.back().value > state.trials_[state.best_idx_].value) {
        state.best_idx_ = state.trials_.size() - 1;
      }
    }
    state.lipschitz_k_ = j.at("lipschitz_k").get<double>();
    state.tr_radius_ = j.at("tr_radius").get<double>();
    state.phase_ = j.at("phase").get<std::string>() == "local" ? Phase::local : Phase::global;
    state.rank_deficient_ = j.value("rank_deficient_fits", std::size_t{0});
    std::istringstream rng_state(j.at("rng").get<std::string>());
    rng_state >> state.rng_;
    if (!j.at("pending").is_null()) state.pending_ = j.at("pending").get<std::vector<double>>();
    return state;
  } catch (const json::exception& e) {
    throw Error(Errc::format, std::string("malformed optimizer state: ") + e.what());
  }
}

}  // namespace odf
