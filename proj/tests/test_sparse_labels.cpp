// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "odf/error.hpp"
#include "odf/record_io.hpp"
#include "odf/sparse_labels.hpp"

using namespace odf;

namespace {

LabelRecord record(std::uint64_t id, std::vector<Box> boxes) {
  LabelRecord r{id, 100, 50, {}};
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    r.boxes.push_back({boxes[i], static_cast<std::uint16_t>(i % 3)});
  }
  return r;
}

Errc error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected odf::Error");
  return Errc::invalid_input;
}

}  // namespace

TEST_CASE("encode batch layout") {
  const std::vector<LabelRecord> recs = {record(1, {{10, 10, 4, 4}, {20, 20, 4, 4}}),
                                         record(2, {{30, 30, 6, 6}})};
  const auto b = encode_batch(recs);
  CHECK(b.batch_size == 2);
  CHECK(b.rois_idx == std::vector<RoiIndex>{{0, 0}, {0, 1}, {1, 0}});
  CHECK(b.rois_values.size() == 3);
  CHECK(b.rois_values[2] == Box{30, 30, 6, 6});
  CHECK(b.classes == std::vector<std::uint16_t>{0, 1, 0});

  const auto back = decode_batch(b);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == recs[0].boxes);
  CHECK(back[1] == recs[1].boxes);
  CHECK(boxes_per_image(b) == boxes_per_image(recs));
}

TEST_CASE("empty images keep the batch size") {
  const std::vector<LabelRecord> recs = {record(1, {}), record(2, {}), record(3, {})};
  const auto b = encode_batch(recs);
  CHECK(b.size() == 0);
  CHECK(b.batch_size == 3);
  const auto back = decode_batch(b);
  CHECK(back.size() == 3);
  for (const auto& im : back) CHECK(im.empty());
}

TEST_CASE("encode/decode round trip on synthetic records") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto recs = gen_synthetic(seed, 8, 12, 640, 480, 4);
    const auto back = decode_batch(encode_batch(recs));
    REQUIRE(back.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) CHECK(back[i] == recs[i].boxes);
  }
}

TEST_CASE("corrupt batches are rejected") {
  auto b = encode_batch(std::vector<LabelRecord>{record(1, {{10, 10, 4, 4}, {20, 20, 4, 4}}),
                                                 record(2, {{30, 30, 6, 6}})});
  SUBCASE("unsorted") {
    std::swap(b.rois_idx[0], b.rois_idx[1]);
    CHECK(error_code([&] { decode_batch(b); }) == Errc::corrupt_batch);
  }
  SUBCASE("length mismatch") {
    b.classes.pop_back();
    CHECK(error_code([&] { decode_batch(b); }) == Errc::corrupt_batch);
  }
  SUBCASE("gap in ordinals") {
    b.rois_idx[1].second = 2;
    CHECK(error_code([&] { decode_batch(b); }) == Errc::corrupt_batch);
  }
  SUBCASE("image index out of range") {
    b.rois_idx[2].first = 5;
    CHECK(error_code([&] { validate(b); }) == Errc::corrupt_batch);
  }
}

TEST_CASE("synthetic generation") {
  const auto a = gen_synthetic(42, 10, 6, 1248, 384, 3);
  CHECK(a.size() == 10);
  CHECK(a == gen_synthetic(42, 10, 6, 1248, 384, 3));
  CHECK(a != gen_synthetic(43, 10, 6, 1248, 384, 3));

  std::vector<std::uint8_t> s1, s2;
  for (const auto& r : gen_synthetic(1, 10, 6, 1248, 384, 3)) {
    const auto bytes = encode_record(r);
    s1.insert(s1.end(), bytes.begin(), bytes.end());
  }
  for (const auto& r : gen_synthetic(2, 10, 6, 1248, 384, 3)) {
    const auto bytes = encode_record(r);
    s2.insert(s2.end(), bytes.begin(), bytes.end());
  }
  CHECK(s1 != s2);

  for (const auto& r : gen_synthetic(7, 200, 20, 300, 200, 5)) {
    CHECK(r.boxes.size() <= 20);
    CHECK(boxes_in_bounds(r));
    for (const auto& b : r.boxes) CHECK(b.class_id < 5);
  }

  CHECK(error_code([] { gen_synthetic(1, 1, 1, 0, 10, 1); }) == Errc::invalid_spec);
  CHECK(error_code([] { gen_synthetic(1, 1, 1, 10, 0, 1); }) == Errc::invalid_spec);
  CHECK(error_code([] { gen_synthetic(1, 1, 1, 10, 10, 0); }) == Errc::invalid_spec);
}

TEST_CASE("augmentation") {
  const auto recs = gen_synthetic(5, 30, 8, 640, 480, 2);
  SUBCASE("no-op parameters") {
    for (const auto& r : recs) CHECK(augment_jitter(r, 99, 0, false) == r);
  }
  SUBCASE("flip is an involution") {
    for (const auto& r : recs) CHECK(flip_horizontal(flip_horizontal(r)) == r);
  }
  SUBCASE("drift moves centers only") {
    LabelRecord r{0, 100, 100, {{{10, 20, 4, 6}, 1}}};
    const auto d = apply_drift(r, 3, 0);
    CHECK(d.boxes[0].box == Box{13, 20, 4, 6});
    CHECK(d.boxes[0].class_id == 1);
  }
  SUBCASE("drift is clamped to the image") {
    LabelRecord r{0, 100, 100, {{{10, 20, 4, 6}, 1}}};
    CHECK(apply_drift(r, -50, 0).boxes[0].box.x == 2.0);
    CHECK(apply_drift(r, 0, 500).boxes[0].box.y == 97.0);
  }
  SUBCASE("jitter is seeded and stays in bounds") {
    for (const auto& r : recs) {
      const auto j = augment_jitter(r, 3, 12, true);
      CHECK(j == augment_jitter(r, 3, 12, true));
      CHECK(boxes_in_bounds(j));
      REQUIRE(j.boxes.size() == r.boxes.size());
      for (std::size_t i = 0; i < r.boxes.size(); ++i) {
        CHECK(j.boxes[i].box.w == r.boxes[i].box.w);
        CHECK(j.boxes[i].box.h == r.boxes[i].box.h);
      }
    }
  }
}
