// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <cstdint>
#include <string>

namespace odf {

enum class Errc {
  invalid_box,
  invalid_spec,
  invalid_input,
  capacity,
  inconsistency,
  corrupt_batch,
  format,
  corruption,
  io,
  parameter,
  precondition,
  protocol,
  underrun,
};

const char* to_string(Errc code) noexcept;

/// Every failure raised by odf carries one of the codes above so callers
/// (the CLI in particular) can map it to an exit status without string
/// matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Raised by the record reader when a payload ends early or disagrees with
/// its declared length.
class CorruptionError : public Error {
 public:
  CorruptionError(const std::string& what, std::uint64_t offset)
      : Error(Errc::corruption, what + " at byte offset " + std::to_string(offset)),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace odf
