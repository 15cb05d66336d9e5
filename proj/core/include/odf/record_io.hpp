// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "odf/sparse_labels.hpp"

namespace odf {

// ODR1 label files
//
//   "ODR1"                                       4 bytes
//   repeated:
//     u32 payload_length                         little endian
//     u64 image_id, u16 image_w, u16 image_h, u16 num_boxes
//     num_boxes x { f32 x, f32 y, f32 w, f32 h, u16 class_id }
//
// Box coordinates are narrowed to f32 on write.

inline constexpr char kRecordMagic[4] = {'O', 'D', 'R', '1'};

/// Bytes of one framed record (length prefix included).
std::vector<std::uint8_t> encode_record(const LabelRecord& r);

/// Inverse of encode_record. Throws CorruptionError (offsets relative to
/// the start of `framed`) on short or inconsistent input.
LabelRecord decode_record(std::span<const std::uint8_t> framed);

class RecordWriter {
 public:
  explicit RecordWriter(const std::filesystem::path& path);
  /// Writes to a caller-owned stream; the magic is emitted immediately.
  explicit RecordWriter(std::ostream& os);

  void write(const LabelRecord& r);
  void flush();

 private:
  std::ofstream file_;
  std::ostream* os_;
};

/// Streaming reader; holds at most one record in memory.
class RecordReader {
 public:
  explicit RecordReader(const std::filesystem::path& path);
  explicit RecordReader(std::istream& is);

  /// Next record, or nullopt at a clean end of file.
  std::optional<LabelRecord> next();

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  void read_magic();

  std::ifstream file_;
  std::istream* is_;
  std::uint64_t offset_ = 0;
};

void write_records(const std::filesystem::path& path, std::span<const LabelRecord> records);
std::vector<LabelRecord> read_records(const std::filesystem::path& path);

}  // namespace odf
