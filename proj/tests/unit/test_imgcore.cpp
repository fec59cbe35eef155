// Copyright 2026 The segvar Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include "helpers.hpp"
#include "segvar/manifest.hpp"

using namespace segvar;
using testing::TempDir;

TEST_CASE("pnm: 8-bit P5 decodes samples exactly") {
  TempDir dir("pnm8");
  testing::write_bytes(dir / "a.pgm", std::string("P5\n2 2\n255\n") + std::string("\x00\x80\xff\x07", 4));
  const auto r = load_pnm(dir / "a.pgm");
  REQUIRE(std::holds_alternative<GrayImage>(r));
  const auto& img = std::get<GrayImage>(r);
  CHECK(img.depth() == 8);
  CHECK(img.data() == std::vector<std::uint16_t>{0, 128, 255, 7});
}

TEST_CASE("pnm: maxval 1 decodes as a mask") {
  TempDir dir("pnm1");
  testing::write_bytes(dir / "m.pgm", std::string("P5\n1 1\n1\n") + std::string("\x01", 1));
  const auto r = load_pnm(dir / "m.pgm");
  REQUIRE(std::holds_alternative<BinaryMask>(r));
  CHECK(std::get<BinaryMask>(r).data() == std::vector<std::uint8_t>{1});
}

TEST_CASE("pnm: header comments are skipped") {
  TempDir dir("pnmc");
  testing::write_bytes(dir / "c.pgm", std::string("P5\n# note\n1 2\n255\n") + std::string("\x05\x06", 2));
  CHECK(load_gray(dir / "c.pgm").data() == std::vector<std::uint16_t>{5, 6});
}

TEST_CASE("pnm: malformed inputs") {
  TempDir dir("pnmbad");
  SUBCASE("bad magic") {
    testing::write_bytes(dir / "x.pgm", std::string("P9\n1 1\n255\n") + std::string("\x00", 1));
    try {
      load_pnm(dir / "x.pgm");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Format);
    }
  }
  SUBCASE("truncated payload") {
    testing::write_bytes(dir / "t.pgm", std::string("P5\n2 2\n255\n") + std::string("\x00\x01", 2));
    CHECK_THROWS_AS(load_pnm(dir / "t.pgm"), Error);
  }
  SUBCASE("unsupported maxval") {
    testing::write_bytes(dir / "v.pgm", std::string("P5\n1 1\n100\n") + std::string("\x00", 1));
    CHECK_THROWS_AS(load_pnm(dir / "v.pgm"), Error);
  }
  SUBCASE("absent file names the path") {
    try {
      load_pnm(dir / "absent.pgm");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingArtifact);
      CHECK(std::string(e.what()).find("absent.pgm") != std::string::npos);
    }
  }
}

TEST_CASE("pnm: roundtrips are bit exact") {
  TempDir dir("pnmrt");
  Rng rng(3);
  for (int depth : {8, 12, 16}) {
    const auto img = testing::random_image(7, 5, depth, rng);
    const auto p = dir / ("g" + std::to_string(depth) + ".pgm");
    save_pnm(img, p);
    CHECK(load_gray(p) == img);
  }
  const auto mask = testing::random_mask(9, 4, rng);
  save_pnm(mask, dir / "m.pgm");
  CHECK(load_mask(dir / "m.pgm") == mask);

  ColorImage c(3, 2);
  for (std::size_t i = 0; i < c.size(); ++i)
    c[i] = {static_cast<std::uint8_t>(i * 40), static_cast<std::uint8_t>(255 - i), static_cast<std::uint8_t>(i)};
  save_pnm(c, dir / "c.ppm");
  CHECK(load_ppm(dir / "c.ppm") == c);
  CHECK(testing::read_bytes(dir / "c.ppm").substr(0, 2) == "P6");
}

TEST_CASE("pnm: 12-bit samples are two big-endian bytes") {
  TempDir dir("pnm12");
  GrayImage img(2, 1, 12, std::vector<std::uint16_t>{4095, 258});
  save_pnm(img, dir / "a.pgm");
  const std::string bytes = testing::read_bytes(dir / "a.pgm");
  CHECK(bytes == std::string("P5\n2 1\n4095\n") + std::string("\x0f\xff\x01\x02", 4));
}

TEST_CASE("resample: identity size is the identity in both modes") {
  Rng rng(5);
  const auto img = testing::random_image(6, 4, 12, rng);
  CHECK(resample(img, 6, 4, Interp::Bilinear) == img);
  CHECK(resample(img, 6, 4, Interp::Nearest) == img);
  const auto m = testing::random_mask(6, 4, rng);
  CHECK(resample_mask(m, 6, 4) == m);
}

TEST_CASE("resample: constants stay constant and depth is kept") {
  const GrayImage one(1, 1, 8, 7);
  const auto up = resample(one, 3, 3, Interp::Nearest);
  CHECK(up == GrayImage(3, 3, 8, 7));
  const GrayImage c(5, 3, 12, 1234);
  for (auto mode : {Interp::Bilinear, Interp::Nearest}) {
    const auto r = resample(c, 8, 11, mode);
    CHECK(r.depth() == 12);
    CHECK(r == GrayImage(8, 11, 12, 1234));
  }
  CHECK(resample_mask(BinaryMask(3, 3, 1), 7, 2) == BinaryMask(7, 2, 1));
}

TEST_CASE("resample: bilinear 2x2 to 4x4 half-pixel values") {
  // src x = (dst + 0.5) / 2 - 0.5 -> -0.25, 0.25, 0.75, 1.25; clamped to [0, 1].
  const GrayImage img(2, 2, 8, std::vector<std::uint16_t>{0, 100, 0, 100});
  const auto r = resample(img, 4, 4, Interp::Bilinear);
  for (int y = 0; y < 4; ++y) {
    CHECK(r.at(0, y) == 0);
    CHECK(r.at(1, y) == 25);
    CHECK(r.at(2, y) == 75);
    CHECK(r.at(3, y) == 100);
  }
}

TEST_CASE("resample: nearest mask upsampling fills the quadrant") {
  const BinaryMask m(2, 2, std::vector<std::uint8_t>{1, 0, 0, 0});
  const auto r = resample_mask(m, 4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) CHECK(r.at(x, y) == ((x < 2 && y < 2) ? 1 : 0));
}

TEST_CASE("resample: zero target is rejected") {
  CHECK_THROWS_AS(resample(GrayImage(2, 2, 8), 0, 3, Interp::Bilinear), Error);
  CHECK_THROWS_AS(resample_mask(BinaryMask(2, 2), 3, 0), Error);
}

TEST_CASE("crop") {
  Rng rng(9);
  const auto img = testing::random_image(6, 5, 8, rng);
  CHECK(crop(img, {0, 0, 6, 5}) == img);
  const auto one = crop(img, {0, 0, 1, 1});
  CHECK(one.width() == 1);
  CHECK(one[0] == img[0]);
  try {
    crop(img, {2, 0, 5, 1});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfBounds);
  }
  // Composition: a crop of a crop equals the composed box.
  const auto a = crop(crop(img, {1, 1, 4, 3}), {1, 0, 2, 2});
  CHECK(a == crop(img, {2, 1, 2, 2}));
}

TEST_CASE("manifest: load, order and errors") {
  TempDir dir("manifest");
  const std::string line1 =
      R"({"id":"a","patient":"p1","image":"a.pgm","rectum_mask":"ra.pgm","tumor_mask":"ta.pgm"})";
  const std::string line2 =
      R"({"id":"b","patient":"p1","image":"b.pgm","rectum_mask":"rb.pgm","tumor_mask":"tb.pgm"})";
  SUBCASE("two records in order, roundtrip stable") {
    testing::write_bytes(dir / "m.jsonl", line1 + "\n" + line2 + "\n");
    const auto m = load_manifest(dir / "m.jsonl");
    REQUIRE(m.size() == 2);
    CHECK(m.records()[0].id == "a");
    CHECK(m.records()[1].id == "b");
    save_manifest(m, dir / "copy.jsonl");
    CHECK(load_manifest(dir / "copy.jsonl").records() == m.records());
    try {
      m.load_image(m.records()[0]);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingArtifact);
    }
  }
  SUBCASE("duplicate id") {
    testing::write_bytes(dir / "d.jsonl", line1 + "\n" + line1 + "\n");
    try {
      load_manifest(dir / "d.jsonl");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DuplicateId);
    }
  }
  SUBCASE("empty file") {
    testing::write_bytes(dir / "e.jsonl", "");
    try {
      load_manifest(dir / "e.jsonl");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyInput);
    }
  }
  SUBCASE("missing key") {
    testing::write_bytes(dir / "k.jsonl", R"({"id":"a","patient":"p","image":"a.pgm","rectum_mask":"r"})" "\n");
    try {
      load_manifest(dir / "k.jsonl");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingKey);
    }
  }
}
