// SPDX-License-Identifier: Apache-2.0
#include "odf/error.hpp"

namespace odf {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_box: return "invalid-box";
    case Errc::invalid_spec: return "invalid-spec";
    case Errc::invalid_input: return "invalid-input";
    case Errc::capacity: return "capacity";
    case Errc::inconsistency: return "inconsistency";
    case Errc::corrupt_batch: return "corrupt-batch";
    case Errc::format: return "format";
    case Errc::corruption: return "corruption";
    case Errc::io: return "io";
    case Errc::parameter: return "parameter";
    case Errc::precondition: return "precondition";
    case Errc::protocol: return "protocol";
    case Errc::underrun: return "underrun";
  }
  return "unknown";
}

}  // namespace odf
