// SPDX-License-Identifier: Apache-2.0
#include "odf/transfer_plan.hpp"

#include <json.hpp>

#include "odf/error.hpp"

namespace odf {

std::string transfer_label(TransferSource source, std::size_t n_layers, bool fine_tune) {
  std::string label = source == TransferSource::A ? "A" : "B";
  label += std::to_string(n_layers);
  label += "B";
  if (fine_tune) label += "+";
  return label;
}

std::vector<TransferPlanEntry> plan_transfer(std::size_t layers) {
  if (layers == 0) throw Error(Errc::parameter, "layer count must be at least 1");
  std::vector<TransferPlanEntry> plan;
  plan.reserve(4 * layers);
  for (const auto source : {TransferSource::A, TransferSource::B}) {
    for (const bool fine_tune : {false, true}) {
      for (std::size_t n = 1; n <= layers; ++n) {
        plan.push_back({source, n, fine_tune, transfer_label(source, n, fine_tune)});
      }
    }
  }
  return plan;
}

std::string plan_to_json(const std::vector<TransferPlanEntry>& plan) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : plan) {
    out.push_back({{"source", e.source == TransferSource::A ? "A" : "B"},
                   {"n_layers", e.n_layers},
                   {"fine_tune", e.fine_tune},
                   {"label", e.label}});
  }
  return out.dump(2);
}

}  // namespace odf
