// SPDX-License-Identifier: Apache-2.0
#include "odf/record_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <limits>
#include <string>

#include "odf/error.hpp"

namespace odf {

namespace {

constexpr std::size_t kHeaderBytes = 8 + 2 + 2 + 2;
constexpr std::size_t kBoxBytes = 4 * 4 + 2;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int s = 0; s < 64; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_f32(std::vector<std::uint8_t>& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(p[i]) << (8 * i));
  return v;
}

double get_f32(const std::uint8_t* p) {
  return static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(p)));
}

// `p` points at a payload whose length was already checked.
LabelRecord parse_payload(const std::uint8_t* p, std::uint16_t num_boxes) {
  LabelRecord r;
  r.image_id = get_le<std::uint64_t>(p);
  r.image_w = get_le<std::uint16_t>(p + 8);
  r.image_h = get_le<std::uint16_t>(p + 10);
  r.boxes.reserve(num_boxes);
  p += kHeaderBytes;
  for (std::size_t i = 0; i < num_boxes; ++i, p += kBoxBytes) {
    LabeledBox lb;
    lb.box = {get_f32(p), get_f32(p + 4), get_f32(p + 8), get_f32(p + 12)};
    lb.class_id = get_le<std::uint16_t>(p + 16);
    r.boxes.push_back(lb);
  }
  return r;
}

}  // namespace

std::vector<std::uint8_t> encode_record(const LabelRecord& r) {
  if (r.boxes.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(Errc::invalid_input, "record holds more than 65535 boxes");
  }
  const std::size_t payload = kHeaderBytes + kBoxBytes * r.boxes.size();
  std::vector<std::uint8_t> out;
  out.reserve(4 + payload);
  put_u32(out, static_cast<std::uint32_t>(payload));
  put_u64(out, r.image_id);
  put_u16(out, r.image_w);
  put_u16(out, r.image_h);
  put_u16(out, static_cast<std::uint16_t>(r.boxes.size()));
  for (const auto& lb : r.boxes) {
    put_f32(out, lb.box.x);
    put_f32(out, lb.box.y);
    put_f32(out, lb.box.w);
    put_f32(out, lb.box.h);
    put_u16(out, lb.class_id);
  }
  return out;
}

LabelRecord decode_record(std::span<const std::uint8_t> framed) {
  if (framed.size() < 4) throw CorruptionError("truncated record length", framed.size());
  const std::uint32_t payload_len = get_le<std::uint32_t>(framed.data());
  if (payload_len < kHeaderBytes || framed.size() < 4 + kHeaderBytes) {
    throw CorruptionError("truncated record header", std::min<std::size_t>(framed.size(), 4));
  }
  const std::uint16_t num_boxes = get_le<std::uint16_t>(framed.data() + 4 + 12);
  const std::size_t expected = kHeaderBytes + kBoxBytes * num_boxes;
  if (payload_len != expected) {
    throw CorruptionError("record length disagrees with box count", 0);
  }
  if (framed.size() != 4 + expected) {
    throw CorruptionError("record size disagrees with its length prefix", framed.size());
  }
  return parse_payload(framed.data() + 4, num_boxes);
}

RecordWriter::RecordWriter(const std::filesystem::path& path)
    : file_(path, std::ios::binary | std::ios::trunc), os_(&file_) {
  if (!file_) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
  os_->write(kRecordMagic, sizeof kRecordMagic);
}

RecordWriter::RecordWriter(std::ostream& os) : os_(&os) {
  os_->write(kRecordMagic, sizeof kRecordMagic);
}

void RecordWriter::write(const LabelRecord& r) {
  const auto bytes = encode_record(r);
  os_->write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  if (!*os_) throw Error(Errc::io, "record write failed");
}

void RecordWriter::flush() {
  os_->flush();
  if (!*os_) throw Error(Errc::io, "record flush failed");
}

RecordReader::RecordReader(const std::filesystem::path& path)
    : file_(path, std::ios::binary), is_(&file_) {
  if (!file_) throw Error(Errc::io, "cannot open " + path.string() + " for reading");
  read_magic();
}

RecordReader::RecordReader(std::istream& is) : is_(&is) { read_magic(); }

void RecordReader::read_magic() {
  char magic[4] = {};
  is_->read(magic, sizeof magic);
  if (is_->gcount() != 4 || std::memcmp(magic, kRecordMagic, 4) != 0) {
    throw Error(Errc::format, "not an ODR1 record file (bad magic)");
  }
  offset_ = 4;
}

std::optional<LabelRecord> RecordReader::next() {
  std::array<std::uint8_t, 4> len_bytes{};
  is_->read(reinterpret_cast<char*>(len_bytes.data()), 4);
  const auto got = static_cast<std::size_t>(is_->gcount());
  if (got == 0) return std::nullopt;
  if (got != 4) throw CorruptionError("truncated record length", offset_ + got);

  const std::uint32_t payload_len = get_le<std::uint32_t>(len_bytes.data());
  const std::uint64_t payload_start = offset_ + 4;
  if (payload_len < kHeaderBytes) {
    throw CorruptionError("record payload shorter than its header", payload_start);
  }

  std::vector<std::uint8_t> payload(kHeaderBytes);
  is_->read(reinterpret_cast<char*>(payload.data()), kHeaderBytes);
  if (static_cast<std::size_t>(is_->gcount()) != kHeaderBytes) {
    throw CorruptionError("truncated record header",
                          payload_start + static_cast<std::uint64_t>(is_->gcount()));
  }
  const std::uint16_t num_boxes = get_le<std::uint16_t>(payload.data() + 12);
  const std::size_t expected = kHeaderBytes + kBoxBytes * num_boxes;
  if (payload_len != expected) {
    throw CorruptionError("record length " + std::to_string(payload_len) +
                              " disagrees with box count " + std::to_string(num_boxes),
                          offset_);
  }

  payload.resize(expected);
  is_->read(reinterpret_cast<char*>(payload.data() + kHeaderBytes),
            static_cast<std::streamsize>(expected - kHeaderBytes));
  const auto body = static_cast<std::size_t>(is_->gcount());
  if (body != expected - kHeaderBytes) {
    throw CorruptionError("truncated record payload", payload_start + kHeaderBytes + body);
  }

  LabelRecord r = parse_payload(payload.data(), num_boxes);
  offset_ = payload_start + expected;
  return r;
}

void write_records(const std::filesystem::path& path, std::span<const LabelRecord> records) {
  RecordWriter w(path);
  for (const auto& r : records) w.write(r);
  w.flush();
}

std::vector<LabelRecord> read_records(const std::filesystem::path& path) {
  RecordReader reader(path);
  std::vector<LabelRecord> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  return out;
}

}  // namespace odf
