#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>

#include "polydub/facecrop/facecrop.hpp"
#include "polydub/toydata/toydata.hpp"

using namespace polydub;
using namespace polydub::facecrop;

namespace {

LandmarkSet corners(float x0, float y0, float x1, float y1) {
  LandmarkSet lm;
  lm.provider_id = "test";
  lm.points = {{x0, y0}, {x1, y0}, {x0, y1}, {x1, y1}, {(x0 + x1) / 2, (y0 + y1) / 2}};
  return lm;
}

image::Image random_frame(Rng& rng, int h, int w) {
  image::Image img(h, w, 3);
  for (auto& p : img.px) p = static_cast<float>(rng.uniform());
  return img;
}

}  // namespace

TEST_CASE("expand_region follows the margin formula") {
  CropConfig cfg;
  cfg.margin_scale = 1.6f;
  cfg.up_shift = 0.3f;
  auto geo = expand_region(corners(100, 100, 200, 200), 640, 480, cfg);
  CHECK(geo.side == 160);
  CHECK(geo.x0 == 70);
  CHECK(geo.y0 == 70);
  CHECK_FALSE(geo.clamped);

  // degenerate parameters give the square hull of the tight bbox
  cfg.margin_scale = 1.0f;
  cfg.up_shift = 0.0f;
  auto hull = expand_region(corners(100, 100, 200, 200), 640, 480, cfg);
  CHECK(hull.side == 100);
  CHECK(hull.x0 == 100);
  CHECK(hull.y0 == 100);

  // bbox at frame corner gets clamped and flagged
  cfg.margin_scale = 1.6f;
  cfg.up_shift = 0.3f;
  auto clamped = expand_region(corners(0, 0, 80, 80), 200, 200, cfg);
  CHECK(clamped.clamped);
  CHECK(clamped.x0 >= 0);
  CHECK(clamped.y0 >= 0);
  CHECK(clamped.x0 + clamped.side <= 200);
  CHECK(clamped.y0 + clamped.side <= 200);
}

TEST_CASE("expand_region is translation-equivariant absent clamping") {
  Rng rng(31);
  CropConfig cfg;
  for (int iter = 0; iter < 100; ++iter) {
    LandmarkSet lm;
    lm.provider_id = "t";
    const float bx = 300.0f + static_cast<float>(rng.uniform_int(0, 100));
    const float by = 300.0f + static_cast<float>(rng.uniform_int(0, 100));
    for (int i = 0; i < 6; ++i)
      lm.points.emplace_back(bx + static_cast<float>(rng.uniform_int(0, 60)),
                             by + static_cast<float>(rng.uniform_int(0, 60)));
    const int dx = rng.uniform_int(-40, 40), dy = rng.uniform_int(-40, 40);
    LandmarkSet shifted = lm;
    for (auto& [x, y] : shifted.points) {
      x += static_cast<float>(dx);
      y += static_cast<float>(dy);
    }
    auto a = expand_region(lm, 2000, 2000, cfg);
    auto b = expand_region(shifted, 2000, 2000, cfg);
    REQUIRE(!a.clamped);
    REQUIRE(!b.clamped);
    CHECK(b.x0 == a.x0 + dx);
    CHECK(b.y0 == a.y0 + dy);
    CHECK(b.side == a.side);
  }
}

TEST_CASE("crop copies bit-exactly when side == S and preserves constants") {
  Rng rng(17);
  auto frame = random_frame(rng, 100, 120);
  CropGeometry geo{10, 20, 64, 1.0f, false};
  auto face = crop(frame, geo, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      for (int c = 0; c < 3; ++c)
        REQUIRE(face.at(y, x, c) == frame.at(20 + y, 10 + x, c));

  image::Image flat(80, 80, 3);
  for (auto& p : flat.px) p = 0.25f;
  CropGeometry g2{8, 8, 40, 1.0f, false};
  auto small = crop(flat, g2, 64);
  for (float p : small.px) REQUIRE(p == 0.25f);
}

TEST_CASE("paste_back: identity round trip, replacement semantics, outside untouched") {
  Rng rng(23);
  for (int iter = 0; iter < 20; ++iter) {
    auto frame = random_frame(rng, 90, 110);
    const image::Image original = frame;
    CropGeometry geo{rng.uniform_int(0, 110 - 64), rng.uniform_int(0, 90 - 64), 64, 1.0f,
                     false};
    auto face = crop(frame, geo, 64);
    paste_back(frame, face, geo, 0);
    REQUIRE(frame.px == original.px);  // bit-exact
  }

  // all-white face with margin 0: region exactly white, outside untouched
  auto frame = random_frame(rng, 90, 110);
  const image::Image original = frame;
  CropGeometry geo{30, 12, 48, 1.0f, false};
  image::Image white(48, 48, 3);
  for (auto& p : white.px) p = 1.0f;
  paste_back(frame, white, geo, 0);
  for (int y = 0; y < 90; ++y)
    for (int x = 0; x < 110; ++x)
      for (int c = 0; c < 3; ++c) {
        const bool inside = x >= 30 && x < 78 && y >= 12 && y < 60;
        if (inside)
          REQUIRE(frame.at(y, x, c) == 1.0f);
        else
          REQUIRE(frame.at(y, x, c) == original.at(y, x, c));
      }
}

TEST_CASE("paste_back blends linearly over the margin") {
  image::Image frame(64, 64, 3);  // all zeros
  image::Image face(32, 32, 3);
  for (auto& p : face.px) p = 1.0f;
  CropGeometry geo{16, 16, 32, 1.0f, false};
  paste_back(frame, face, geo, 4);
  // interior fully replaced
  CHECK(frame.at(32, 32, 0) == 1.0f);
  // d = 0 at region edge -> alpha 0 (source kept)
  CHECK(frame.at(16, 32, 0) == 0.0f);
  // d = 2 rows in -> 50/50
  CHECK(frame.at(18, 32, 0) == doctest::Approx(0.5f));
  // d = 4 -> fully face
  CHECK(frame.at(20, 32, 0) == 1.0f);

  image::Image not_square(16, 18, 3);
  CHECK_THROWS_AS(paste_back(frame, not_square, geo, 0), GeometryMismatch);
  CropGeometry bad{50, 50, 32, 1.0f, false};
  CHECK_THROWS_AS(paste_back(frame, face, bad, 0), GeometryMismatch);
}

TEST_CASE("landmark provider registry and the synthetic provider") {
  CHECK_THROWS(detect_landmarks(image::Image(32, 32, 3), "nonexistent"));

  // synthetic provider inverts the toy renderer
  audio::Waveform silence;
  silence.sample_rate = 22050;
  silence.samples.assign(22050, 0.0f);
  auto clip = toydata::render_face_clip(silence, 99, 120, 160);
  REQUIRE(!clip.frames.empty());
  auto lm = detect_landmarks(clip.frames[0], "synthetic");
  CHECK(lm.provider_id == "synthetic");
  REQUIRE(lm.points.size() == clip.landmarks[0].points.size());
  for (size_t i = 0; i < lm.points.size(); ++i) {
    CHECK(std::fabs(lm.points[i].first - clip.landmarks[0].points[i].first) < 2.5f);
    CHECK(std::fabs(lm.points[i].second - clip.landmarks[0].points[i].second) < 2.5f);
  }

  // blank frame -> NoFaceFound
  image::Image blank(120, 160, 3);
  CHECK_THROWS_AS(detect_landmarks(blank, "synthetic"), NoFaceFound);

  // two providers report distinct provider ids
  register_landmark_provider("fixed", [](const image::Image&) {
    LandmarkSet fixed;
    fixed.provider_id = "fixed";
    fixed.points = {{10, 10}, {20, 10}, {15, 15}, {12, 20}, {18, 20}};
    return fixed;
  });
  auto lm2 = detect_landmarks(clip.frames[0], "fixed");
  CHECK(lm2.provider_id == "fixed");
  CHECK(lm.provider_id != lm2.provider_id);
}

TEST_CASE("subprocess landmark provider speaks the x-y line protocol") {
  const char* script = "/tmp/polydub_fake_detector.sh";
  write_text_file(script,
                  "#!/bin/sh\n# ignores the frame, emits fixed points\n"
                  "printf '10 12\\n40 12\\n25 30\\n15 40\\n35 40\\n'\n");
  REQUIRE(std::system("chmod +x /tmp/polydub_fake_detector.sh") == 0);
  register_landmark_provider("external", make_subprocess_provider(script, "external"));
  image::Image frame(64, 64, 3);
  auto lm = detect_landmarks(frame, "external");
  REQUIRE(lm.points.size() == 5);
  CHECK(lm.points[0].first == 10.0f);
  CHECK(lm.points[4].second == 40.0f);
  CHECK(lm.provider_id == "external");
  std::remove(script);
}

TEST_CASE("geometry smoothing is an EMA and keeps the first frame") {
  std::vector<CropGeometry> geos = {{10, 10, 50, 1, false},
                                    {20, 10, 50, 1, false},
                                    {30, 10, 50, 1, false}};
  auto sm = smooth_geometries(geos, 0.5f);
  CHECK(sm[0].x0 == 10);
  CHECK(sm[1].x0 == 15);
  CHECK(sm[2].x0 == 23);  // round(22.5) -> 23
  CHECK(sm[2].side == 50);
}
