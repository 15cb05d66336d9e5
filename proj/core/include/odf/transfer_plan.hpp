// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace odf {

enum class TransferSource { A, B };

/// One retraining schedule on task B: copy the first n_layers from a network
/// trained on `source`, keep them frozen (AnB, BnB) or fine-tune them
/// (AnB+, BnB+).
struct TransferPlanEntry {
  TransferSource source = TransferSource::A;
  std::size_t n_layers = 1;
  bool fine_tune = false;
  std::string label;

  friend bool operator==(const TransferPlanEntry&, const TransferPlanEntry&) = default;
};

std::string transfer_label(TransferSource source, std::size_t n_layers, bool fine_tune);

/// Every schedule for depths 1..layers, ordered by source, then frozen before
/// fine-tuned, then depth. Throws Error{parameter} when layers == 0.
std::vector<TransferPlanEntry> plan_transfer(std::size_t layers);

std::string plan_to_json(const std::vector<TransferPlanEntry>& plan);

}  // namespace odf
