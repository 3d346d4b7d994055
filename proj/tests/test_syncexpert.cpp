#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "polydub/facecrop/facecrop.hpp"
#include "polydub/syncexpert/syncexpert.hpp"
#include "polydub/toydata/toydata.hpp"

using namespace polydub;
using namespace polydub::syncexpert;

namespace {

SyncWindow random_window(Rng& rng, const SyncConfig& cfg) {
  SyncWindow w;
  for (int f = 0; f < cfg.window_frames; ++f) {
    image::Image img(cfg.face_size / 2, cfg.face_size, 3);
    for (auto& p : img.px) p = static_cast<float>(rng.uniform());
    w.frames.push_back(std::move(img));
  }
  w.mel.resize(static_cast<size_t>(cfg.mel_frames) * cfg.mel_bins);
  for (auto& v : w.mel) v = static_cast<float>(rng.normal());
  return w;
}

// Face crops + mel for a rendered toy clip, the sync training currency.
SyncClip toy_clip(const std::string& text, uint64_t seed,
                  const audio::MelBasis& basis) {
  auto seq = textfront::grapheme_to_phoneme(text, textfront::Lang::ko);
  auto voice = toydata::render_voice(seq, seed);
  auto clip = toydata::render_face_clip(voice, seed * 7 + 1);
  SyncClip out;
  out.mel = audio::mel_spectrogram(voice, basis);
  for (size_t t = 0; t < clip.frames.size(); ++t) {
    auto geo = facecrop::expand_region(clip.landmarks[t], clip.frames[t].w,
                                       clip.frames[t].h);
    out.crops.push_back(facecrop::crop(clip.frames[t], geo, 64));
  }
  return out;
}

}  // namespace

TEST_CASE("embeddings are unit-norm, deterministic, and finite on zero input") {
  SyncConfig cfg;
  SyncExpert expert(cfg);
  Rng rng(9);
  for (int iter = 0; iter < 10; ++iter) {
    auto w = random_window(rng, cfg);
    auto [v, a] = expert.embed_pair(w);
    double nv = 0, na = 0;
    for (float x : v.data()) nv += double(x) * x;
    for (float x : a.data()) na += double(x) * x;
    CHECK(std::fabs(std::sqrt(nv) - 1.0) < 1e-5);
    CHECK(std::fabs(std::sqrt(na) - 1.0) < 1e-5);
    auto [v2, a2] = expert.embed_pair(w);
    REQUIRE(v2.data() == v.data());
    REQUIRE(a2.data() == a.data());
  }

  SyncWindow zero;
  for (int f = 0; f < cfg.window_frames; ++f)
    zero.frames.emplace_back(cfg.face_size / 2, cfg.face_size, 3);
  zero.mel.assign(static_cast<size_t>(cfg.mel_frames) * cfg.mel_bins, 0.0f);
  auto [vz, az] = expert.embed_pair(zero);
  for (float x : vz.data()) REQUIRE(std::isfinite(x));
  for (float x : az.data()) REQUIRE(std::isfinite(x));

  SyncWindow bad = random_window(rng, cfg);
  bad.frames.pop_back();
  CHECK_THROWS_AS(expert.embed_pair(bad), ShapeMismatch);
}

TEST_CASE("sync_loss closed forms and the sum bound") {
  using nn::Tensor;
  const int d = 8;
  auto unit = [&](std::vector<float> v) {
    double n = 0;
    for (float x : v) n += double(x) * x;
    for (auto& x : v) x = static_cast<float>(x / std::sqrt(n));
    return Tensor::from({d}, std::move(v));
  };
  std::vector<float> e1(d, 0.0f);
  e1[0] = 1.0f;
  Tensor a = unit(std::vector<float>(e1));
  CHECK(sync_loss(a, a, true).item() < 1e-6f);  // cos = 1, in sync

  std::vector<float> neg = e1;
  neg[0] = -1.0f;
  Tensor b = unit(std::vector<float>(neg));
  CHECK(sync_loss(a, b, false).item() < 1e-6f);  // cos = -1, off sync

  std::vector<float> orth(d, 0.0f);
  orth[1] = 1.0f;
  Tensor c = unit(std::vector<float>(orth));
  CHECK(sync_loss(a, c, true).item() == doctest::Approx(0.693147f).epsilon(1e-4));
  CHECK(sync_loss(a, c, false).item() == doctest::Approx(0.693147f).epsilon(1e-4));

  // loss(in) + loss(off) >= 2*(-log 0.5), equality iff cos = 0
  Rng rng(77);
  const float bound = 2.0f * 0.6931472f;
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<float> xv(d), yv(d);
    for (auto& x : xv) x = static_cast<float>(rng.normal());
    for (auto& y : yv) y = static_cast<float>(rng.normal());
    Tensor x = unit(std::move(xv)), y = unit(std::move(yv));
    const float s = sync_loss(x, y, true).item() + sync_loss(x, y, false).item();
    CHECK(s >= bound - 1e-4f);
  }
  CHECK(sync_loss(a, c, true).item() + sync_loss(a, c, false).item() ==
        doctest::Approx(bound).epsilon(1e-4));
}

TEST_CASE("negative windows must shift audio by at least 4 frames") {
  SyncConfig cfg;
  audio::MelConfig mc;
  mc.n_mels = cfg.mel_bins;
  audio::MelBasis basis(mc);
  auto clip = toy_clip("안녕 바다 하늘", 11, basis);
  REQUIRE(clip.crops.size() >= 10);

  CHECK_NOTHROW(make_window(clip.crops, clip.mel, 0, 0, cfg));
  CHECK_THROWS_AS(make_window(clip.crops, clip.mel, 0, 1, cfg), InvalidNegativeOffset);
  CHECK_THROWS_AS(make_window(clip.crops, clip.mel, 0, -3, cfg), InvalidNegativeOffset);
  CHECK_NOTHROW(make_window(clip.crops, clip.mel, 0, 4, cfg));
}

TEST_CASE("brightness offset after input normalization does not move the score") {
  SyncConfig cfg;
  SyncExpert expert(cfg);
  audio::MelConfig mc;
  mc.n_mels = cfg.mel_bins;
  audio::MelBasis basis(mc);
  auto clip = toy_clip("노래 구름 나무 사랑", 13, basis);
  auto w = make_window(clip.crops, clip.mel, 2, 0, cfg);
  const float base = expert.cosine(w);
  SyncWindow brighter = w;
  for (auto& f : brighter.frames)
    for (auto& p : f.px) p = std::min(1.0f, p + 0.05f);
  const float shifted = expert.cosine(brighter);
  CHECK(std::fabs(shifted - base) < 0.02f);
}

TEST_CASE("untrained expert separates nothing; a short run improves separation") {
  SyncConfig cfg;
  cfg.seed = 2;
  SyncExpert expert(cfg);
  audio::MelConfig mc;
  mc.n_mels = cfg.mel_bins;
  audio::MelBasis basis(mc);
  std::vector<SyncClip> clips;
  clips.push_back(toy_clip("안녕 바다 하늘 노래", 21, basis));
  clips.push_back(toy_clip("사랑 아침 저녁 구름 나무", 22, basis));
  clips.push_back(toy_clip("친구 학교 시간 세상", 23, basis));

  const float before = separation(expert, clips, 100, 5);
  CHECK(std::fabs(before) < 0.1f);

  train_expert(expert, clips, 150, 4, 6);
  const float after = separation(expert, clips, 60, 5);
  CHECK(after > before + 0.05f);
}

TEST_CASE("checkpoint round trip") {
  SyncConfig cfg;
  SyncExpert expert(cfg);
  Rng rng(3);
  auto w = random_window(rng, cfg);
  const float before = expert.cosine(w);
  expert.save("test_sync_ckpt.bin");
  auto loaded = SyncExpert::load("test_sync_ckpt.bin");
  CHECK(loaded->cosine(w) == before);
  std::remove("test_sync_ckpt.bin");
}
