#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "polydub/facecrop/facecrop.hpp"
#include "polydub/facegen/facegen.hpp"
#include "polydub/toydata/toydata.hpp"

using namespace polydub;
using namespace polydub::facegen;
using nn::Tensor;

namespace {

FacegenConfig tiny_config() {
  FacegenConfig cfg;
  cfg.base_channels = 4;
  cfg.audio_dim = 16;
  cfg.disc_channels = 6;
  cfg.seed = 5;
  return cfg;
}

struct ToyMaterial {
  std::vector<image::Image> crops;
  audio::MelSpectrogram mel;
};

ToyMaterial toy_material(const std::string& text, uint64_t seed, int mel_bins) {
  audio::MelConfig mc;
  mc.n_mels = mel_bins;
  audio::MelBasis basis(mc);
  auto seq = textfront::grapheme_to_phoneme(text, textfront::Lang::ko);
  auto voice = toydata::render_voice(seq, seed);
  auto clip = toydata::render_face_clip(voice, seed + 5);
  ToyMaterial m;
  m.mel = audio::mel_spectrogram(voice, basis);
  for (size_t t = 0; t < clip.frames.size(); ++t) {
    auto geo = facecrop::expand_region(clip.landmarks[t], clip.frames[t].w,
                                       clip.frames[t].h);
    m.crops.push_back(facecrop::crop(clip.frames[t], geo, 64));
  }
  return m;
}

TrainingWindow make_training_window(const ToyMaterial& m, int start, Rng& rng) {
  TrainingWindow w;
  w.mel = m.mel;
  w.start_frame = start;
  for (int f = 0; f < 5; ++f) {
    const int t = start + f;
    GenInput in;
    in.reference = mask_lower_half(m.crops[static_cast<size_t>(t)]);
    in.identity = m.crops[static_cast<size_t>(facegen::sample_negative_index(
        static_cast<int>(m.crops.size()), t, rng))];
    w.inputs.push_back(std::move(in));
    w.targets.push_back(m.crops[static_cast<size_t>(t)]);
  }
  return w;
}

}  // namespace

TEST_CASE("config validation") {
  FacegenConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.face_size = 100;
  CHECK_THROWS(cfg.validate());
  cfg.face_size = 256;
  cfg.n_disc_scales = 2;
  CHECK_THROWS(cfg.validate());
  cfg.n_disc_scales = 3;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("augment: identity bit-exact, translation, bounds") {
  Rng rng(8);
  image::Image img(64, 64, 3);
  for (auto& p : img.px) p = static_cast<float>(rng.uniform());

  auto same = augment(img, {0, 0, 0, 1.0f});
  REQUIRE(same.px == img.px);

  image::Image dot(64, 64, 3);
  dot.at(10, 10, 0) = 1.0f;  // (x=10, y=10)
  auto moved = augment(dot, {5, 0, 0, 1.0f});
  CHECK(moved.at(10, 15, 0) == doctest::Approx(1.0f));
  CHECK(moved.at(10, 10, 0) == doctest::Approx(0.0f));

  CHECK_THROWS_AS(augment(img, {0, 0, 0, 2.0f}), ParamOutOfRange);
  CHECK_THROWS_AS(augment(img, {20.0f, 0, 0, 1.0f}), ParamOutOfRange);
  CHECK_THROWS_AS(augment(img, {0, 0, 30.0f, 1.0f}), ParamOutOfRange);
}

TEST_CASE("sample_negative respects the 5-frame exclusion") {
  Rng rng(4);
  for (int iter = 0; iter < 50; ++iter) {
    const int idx = sample_negative_index(10, 0, rng);
    CHECK(idx >= 5);
    CHECK(idx <= 9);
  }
  CHECK(sample_negative_index(6, 0, rng) == 5);
  CHECK_THROWS_AS(sample_negative_index(4, 0, rng), ClipTooShort);
}

TEST_CASE("audio_encode: length contract and causality") {
  FacegenConfig cfg = tiny_config();
  FacegenModel model(cfg);

  // one second of audio -> 87 mel frames -> 25 video frames
  audio::MelConfig mc;
  mc.n_mels = cfg.mel_bins;
  audio::MelBasis basis(mc);
  audio::Waveform sec;
  sec.sample_rate = 22050;
  sec.samples.resize(22050);
  Rng rng(6);
  for (auto& s : sec.samples) s = static_cast<float>(rng.normal()) * 0.1f;
  auto mel = audio::mel_spectrogram(sec, basis);
  REQUIRE(mel.t == 87);
  Tensor feats = model.audio_encode(mel);
  CHECK(feats.dim(0) == 25);
  CHECK(feats.dim(1) == cfg.audio_dim);

  // truncating the last 0.2 s leaves earlier features bit-identical
  audio::Waveform shorter = sec;
  shorter.samples.resize(22050 - 4410);
  auto mel2 = audio::mel_spectrogram(shorter, basis);
  Tensor feats2 = model.audio_encode(mel2);
  const int n2 = feats2.dim(0) - 1;  // the final frame's look-back window
                                     // touches the truncation padding
  REQUIRE(n2 < 25);
  for (int t = 0; t < n2; ++t)
    for (int c = 0; c < cfg.audio_dim; ++c)
      REQUIRE(feats2.data()[static_cast<size_t>(t) * cfg.audio_dim + c] ==
              feats.data()[static_cast<size_t>(t) * cfg.audio_dim + c]);

  audio::MelSpectrogram empty;
  empty.bins = cfg.mel_bins;
  empty.t = 0;
  CHECK_THROWS_AS(model.audio_encode(empty), InsufficientAudio);
}

TEST_CASE("generate_frames: shape, range, determinism, causality") {
  FacegenConfig cfg = tiny_config();
  FacegenModel model(cfg);
  auto m = toy_material("안녕 바다 하늘 노래", 31, cfg.mel_bins);
  REQUIRE(m.crops.size() >= 12);

  Rng rng(7);
  std::vector<GenInput> inputs;
  for (int t = 0; t < 8; ++t) {
    GenInput in;
    in.reference = m.crops[static_cast<size_t>(t)];
    in.identity = m.crops[static_cast<size_t>(t + 6)];
    inputs.push_back(std::move(in));
  }
  auto frames = model.generate_frames(inputs, m.mel);
  REQUIRE(frames.size() == 8);
  for (const auto& f : frames) {
    CHECK(f.h == 64);
    CHECK(f.w == 64);
    for (float p : f.px) {
      REQUIRE(p >= 0.0f);
      REQUIRE(p <= 1.0f);
    }
  }
  auto again = model.generate_frames(inputs, m.mel);
  for (size_t i = 0; i < frames.size(); ++i) REQUIRE(again[i].px == frames[i].px);

  // editing audio after time t never changes frames before t
  audio::MelSpectrogram edited = m.mel;
  for (int r = edited.t - 20; r < edited.t; ++r)
    for (int b = 0; b < edited.bins; ++b)
      edited.data[static_cast<size_t>(r) * edited.bins + b] += 3.0f;
  auto frames2 = model.generate_frames(inputs, edited);
  // the last edited mel rows start after video frame floor((t-20)/3.445)-5
  const int safe = (edited.t - 20 - 17) * 25 * 256 / 22050;
  for (int t = 0; t < std::min<int>(safe, 8); ++t)
    REQUIRE(frames2[static_cast<size_t>(t)].px == frames[static_cast<size_t>(t)].px);
}

TEST_CASE("multiscale_disc shapes and hinge values") {
  FacegenConfig cfg = tiny_config();
  FacegenModel model(cfg);
  Rng rng(3);
  Tensor img = Tensor::randn({3, 64, 64}, rng, 0.3f);
  auto maps = model.multiscale_disc(img);
  REQUIRE(maps.size() == 2);
  CHECK(maps[0].shape() == std::vector<int>{1, 8, 8});
  CHECK(maps[1].shape() == std::vector<int>{1, 4, 4});

  // hinge arithmetic at perfect scores
  Tensor perfect_real = Tensor::full({1, 4, 4}, 1.0f);
  Tensor perfect_fake = Tensor::full({1, 4, 4}, -1.0f);
  const float d_real =
      nn::mean_all(nn::relu(nn::add_scalar(nn::neg(perfect_real), 1.0f))).item();
  const float d_fake =
      nn::mean_all(nn::relu(nn::add_scalar(perfect_fake, 1.0f))).item();
  CHECK(d_real == 0.0f);
  CHECK(d_fake == 0.0f);
  const float g_loss = nn::neg(nn::mean_all(perfect_fake)).item();
  CHECK(g_loss > 0.0f);
}

TEST_CASE("training_step: decomposition, finite losses, and learning signal") {
  FacegenConfig cfg = tiny_config();
  cfg.w_sync = 0.0f;
  cfg.w_adv = 0.0f;
  FacegenModel model(cfg);
  syncexpert::SyncConfig scfg;
  scfg.mel_bins = cfg.mel_bins;
  syncexpert::SyncExpert expert(scfg);
  expert.set_frozen(true);

  auto m = toy_material("사랑 아침 저녁 구름", 41, cfg.mel_bins);
  Rng rng(11);
  auto window = make_training_window(m, 2, rng);

  auto first = model.training_step(window, expert);
  CHECK(first.total_g == doctest::Approx(first.l1).epsilon(1e-5));
  CHECK(first.adv_d == 0.0f);

  float last = first.l1;
  for (int i = 0; i < 15; ++i) last = model.training_step(window, expert).l1;
  CHECK(last < first.l1);  // overfits a single window quickly
}

TEST_CASE("training gradient matches directional finite differences") {
  FacegenConfig cfg = tiny_config();
  cfg.w_adv = 0.07f;
  cfg.w_sync = 0.03f;
  FacegenModel model(cfg);
  syncexpert::SyncConfig scfg;
  scfg.mel_bins = cfg.mel_bins;
  syncexpert::SyncExpert expert(scfg);
  expert.set_frozen(true);

  auto m = toy_material("노래 구름 나무", 43, cfg.mel_bins);
  Rng rng(13);
  auto window = make_training_window(m, 1, rng);
  AugmentParams aug;  // identity: keeps the loss graph smooth in the params

  Tensor total = model.training_loss(window, expert, aug, nullptr);
  auto params = model.generator_parameters();
  for (auto& p : params) p.zero_grad();
  total.backward();

  // probe the single best-conditioned coordinate: the largest-magnitude
  // gradient entry over all generator parameters
  Tensor target;
  size_t coord = 0;
  double analytic = 0.0;
  for (auto& p : params)
    for (size_t i = 0; i < p.grad().size(); ++i)
      if (std::fabs(p.grad()[i]) > std::fabs(analytic)) {
        analytic = p.grad()[i];
        target = p;
        coord = i;
      }
  REQUIRE(target.defined());
  REQUIRE(std::fabs(analytic) > 1e-6);

  const float saved = target.data()[coord];
  double best_rel = 1.0;
  for (const double h : {1e-3, 2e-3}) {
    target.data()[coord] = saved + static_cast<float>(h);
    const double lp = model.training_loss(window, expert, aug, nullptr).item();
    target.data()[coord] = saved - static_cast<float>(h);
    const double lm = model.training_loss(window, expert, aug, nullptr).item();
    target.data()[coord] = saved;
    const double fd = (lp - lm) / (2.0 * h);
    const double rel = std::fabs(fd - analytic) / std::fabs(analytic);
    INFO("h=", h, " fd=", fd, " analytic=", analytic);
    best_rel = std::min(best_rel, rel);
  }
  CHECK(best_rel < 1e-3);
}

TEST_CASE("checkpoint round trip") {
  FacegenConfig cfg = tiny_config();
  FacegenModel model(cfg);
  auto m = toy_material("안녕", 51, cfg.mel_bins);
  std::vector<GenInput> inputs;
  GenInput in;
  in.reference = m.crops[0];
  in.identity = m.crops[2];
  inputs.push_back(in);
  auto before = model.generate_frames(inputs, m.mel);

  model.save("test_facegen_ckpt.bin");
  auto loaded = FacegenModel::load("test_facegen_ckpt.bin");
  auto after = loaded->generate_frames(inputs, m.mel);
  REQUIRE(after[0].px == before[0].px);
  std::remove("test_facegen_ckpt.bin");
}
