// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "odf/error.hpp"
#include "odf/record_io.hpp"

using namespace odf;
namespace fs = std::filesystem;

namespace {

struct TempFile {
  fs::path path;
  explicit TempFile(const char* name)
      : path(fs::temp_directory_path() / (std::string("odf_test_") + name)) {}
  ~TempFile() {
    std::error_code ec;
    fs::remove(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void dump(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

}  // namespace

TEST_CASE("file round trip") {
  TempFile f("roundtrip.odr");
  const auto recs = gen_synthetic(11, 100, 10, 1248, 384, 3);
  write_records(f.path, recs);
  CHECK(read_records(f.path) == recs);
}

TEST_CASE("empty file holds only the magic") {
  TempFile f("empty.odr");
  write_records(f.path, {});
  CHECK(fs::file_size(f.path) == 4);
  CHECK(slurp(f.path) == "ODR1");
  CHECK(read_records(f.path).empty());
}

TEST_CASE("frame layout") {
  LabelRecord r{0x0102030405060708ull, 640, 480, {{{1.5f, 2.5f, 3.0f, 4.0f}, 7}}};
  const auto bytes = encode_record(r);
  REQUIRE(bytes.size() == 4 + 14 + 18);
  CHECK(bytes[0] == 32);  // payload length, little endian
  CHECK(bytes[1] == 0);
  CHECK(bytes[4] == 0x08);
  CHECK(bytes[11] == 0x01);
  CHECK(bytes[16] == 1);  // box count
  CHECK(decode_record(bytes) == r);
}

TEST_CASE("stream round trip with awkward values") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> v(0.001f, 5000.0f);
  std::vector<LabelRecord> recs;
  for (int i = 0; i < 50; ++i) {
    LabelRecord r{rng(), 65535, 1, {}};
    for (int k = 0; k < i % 7; ++k) r.boxes.push_back({{v(rng), v(rng), v(rng), v(rng)}, 65535});
    recs.push_back(r);
  }
  std::stringstream ss;
  RecordWriter w(ss);
  for (const auto& r : recs) w.write(r);
  w.flush();
  RecordReader rd(ss);
  std::vector<LabelRecord> back;
  while (auto r = rd.next()) back.push_back(*r);
  CHECK(back == recs);
}

TEST_CASE("bad magic") {
  TempFile f("magic.odr");
  dump(f.path, "XXXX");
  try {
    read_records(f.path);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::format);
  }
  dump(f.path, "OD");
  CHECK_THROWS_AS(read_records(f.path), Error);
}

TEST_CASE("truncation at every byte reports the end offset") {
  TempFile f("trunc.odr");
  const auto recs = gen_synthetic(3, 4, 3, 200, 200, 2);
  write_records(f.path, recs);
  const std::string full = slurp(f.path);

  std::size_t boundary_hits = 0;
  for (std::size_t cut = 4; cut < full.size(); ++cut) {
    dump(f.path, full.substr(0, cut));
    try {
      const auto got = read_records(f.path);
      // Cutting exactly between records is a clean, shorter file.
      CHECK(got.size() < recs.size());
      ++boundary_hits;
    } catch (const CorruptionError& e) {
      CHECK(e.code() == Errc::corruption);
      CHECK(e.offset() == cut);
      CHECK(std::string(e.what()).find("byte offset " + std::to_string(cut)) != std::string::npos);
    }
  }
  CHECK(boundary_hits == recs.size());  // including the bare magic
}

TEST_CASE("length prefix that disagrees with the box count") {
  auto bytes = encode_record(LabelRecord{1, 10, 10, {{{5, 5, 2, 2}, 0}}});
  bytes[0] += 1;
  CHECK_THROWS_AS(decode_record(bytes), CorruptionError);
  bytes.push_back(0);
  CHECK_THROWS_AS(decode_record(bytes), CorruptionError);

  std::stringstream ss;
  ss.write("ODR1", 4);
  ss.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  RecordReader rd(ss);
  CHECK_THROWS_AS(rd.next(), CorruptionError);
}

TEST_CASE("missing file") {
  try {
    read_records("/nonexistent/dir/file.odr");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::io);
  }
}
