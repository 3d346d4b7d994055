#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "polydub/tts/tts.hpp"

using namespace polydub;
using namespace polydub::tts;
using nn::Tensor;
using textfront::Lang;

namespace {

// Exhaustive enumeration over all monotone, surjective, non-skipping
// alignments; the independent oracle for the dynamic program.
struct BruteForce {
  double best_score = -1e300;
  std::vector<int> best_path;

  void run(const std::vector<float>& ll, int T, int M) {
    std::vector<int> path(static_cast<size_t>(M));
    recurse(ll, T, M, 0, 0, 0.0, path);
  }

 private:
  void recurse(const std::vector<float>& ll, int T, int M, int j, int i, double acc,
               std::vector<int>& path) {
    if (j == M) {
      if (i == T - 1 && acc > best_score) {
        best_score = acc;
        best_path = path;
      }
      return;
    }
    // remaining frames must cover remaining phonemes
    if (T - 1 - i > M - j) return;
    path[static_cast<size_t>(j)] = i;
    recurse(ll, T, M, j + 1, i, acc + ll[static_cast<size_t>(i) * M + j], path);
    if (j > 0 && i + 1 < T) {
      path[static_cast<size_t>(j)] = i + 1;
      recurse(ll, T, M, j + 1, i + 1, acc + ll[static_cast<size_t>(i + 1) * M + j], path);
    }
  }
};

TtsConfig tiny_config() {
  TtsConfig cfg;
  cfg.hidden_dim = 32;
  cfg.latent_dim = 8;
  cfg.mel_bins = 24;
  cfg.n_fft = 256;
  cfg.win_length = 256;
  cfg.hop_length = 256;
  cfg.segment_frames = 8;
  cfg.seed = 77;
  return cfg;
}

std::vector<SpeakerProfile> two_speakers() {
  SpeakerProfile a, b;
  a.speaker_id = "spk_ko";
  a.native_language = Lang::ko;
  b.speaker_id = "spk_en";
  b.native_language = Lang::en;
  return {a, b};
}

audio::Waveform tone(double seconds, double freq, int sr = 22050) {
  audio::Waveform w;
  w.sample_rate = sr;
  const int n = static_cast<int>(seconds * sr);
  w.samples.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    w.samples[static_cast<size_t>(i)] =
        0.3f * static_cast<float>(std::sin(2.0 * M_PI * freq * i / sr));
  return w;
}

Utterance make_utt(const TtsModel& model, const std::string& text, Lang lang,
                   int speaker_index, double seconds, double freq) {
  Utterance u;
  u.lang = lang;
  u.speaker_index = speaker_index;
  u.ids = textfront::text_to_ids(text, lang).ids;
  u.wave = tone(seconds, freq);
  u.mel = audio::mel_spectrogram(u.wave, model.mel_basis());
  return u;
}

}  // namespace

TEST_CASE("monotonic_align trivial cases") {
  // single phoneme takes all frames
  auto a = monotonic_align({0.1f, -0.3f, 0.2f}, 1, 3);
  CHECK(a.frame_to_phoneme == std::vector<int>{0, 0, 0});
  CHECK(a.durations == std::vector<int>{3});

  // identity-favoring 2x2
  auto b = monotonic_align({0.0f, -9.0f, -9.0f, 0.0f}, 2, 2);
  CHECK(b.frame_to_phoneme == std::vector<int>{0, 1});
  CHECK(b.durations == std::vector<int>{1, 1});

  CHECK_THROWS_AS(monotonic_align(std::vector<float>(12, 0.0f), 4, 3),
                  InfeasibleAlignment);
}

TEST_CASE("monotonic_align equals brute force on random matrices") {
  Rng rng(4242);
  int cases = 0;
  while (cases < 250) {
    const int T = rng.uniform_int(1, 6);
    const int M = rng.uniform_int(T, 8);
    std::vector<float> ll(static_cast<size_t>(T) * M);
    for (auto& v : ll) v = static_cast<float>(rng.normal());
    BruteForce bf;
    bf.run(ll, T, M);
    auto dp = monotonic_align(ll, T, M);
    REQUIRE(dp.frame_to_phoneme == bf.best_path);
    REQUIRE(dp.score == bf.best_score);
    ++cases;
  }
  // the 4x7 case from the contract: C(6,3) = 20 candidate paths
  std::vector<float> ll(28);
  for (auto& v : ll) v = static_cast<float>(rng.normal());
  BruteForce bf;
  bf.run(ll, 4, 7);
  auto dp = monotonic_align(ll, 4, 7);
  CHECK(dp.frame_to_phoneme == bf.best_path);
}

TEST_CASE("lambda_schedule closed form and monotonicity") {
  CHECK(lambda_schedule(0.0f, 10.0f) == 0.0f);
  CHECK(lambda_schedule(0.5f, 10.0f) == doctest::Approx(0.9866143).epsilon(1e-5));
  CHECK(lambda_schedule(1.0f, 10.0f) == doctest::Approx(0.9999092).epsilon(1e-5));
  float prev = -1.0f;
  for (int i = 0; i <= 100; ++i) {
    const float v = lambda_schedule(static_cast<float>(i) / 100.0f, 10.0f);
    CHECK(v > prev);
    CHECK(v < 1.0f);
    prev = v;
  }
}

TEST_CASE("grad_reverse input gradient equals -lambda times unreversed gradient") {
  Rng rng(5);
  const int n = 6;
  std::vector<float> xv(n), cv(n);
  for (auto& v : xv) v = static_cast<float>(rng.normal());
  for (auto& v : cv) v = static_cast<float>(rng.normal());

  for (float lambda_val : {0.0f, 0.5f, 1.0f}) {
    Tensor x = Tensor::from({n}, std::vector<float>(xv), true);
    Tensor c = Tensor::from({n}, std::vector<float>(cv));
    Tensor y = nn::grad_reverse(x, lambda_val);
    Tensor loss = nn::sum_all(nn::mul(nn::mul(y, y), c));
    loss.backward();

    // double-precision finite differences on the plain (unreversed) function
    for (int i = 0; i < n; ++i) {
      auto f = [&](double xi) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) {
          const double v = k == i ? xi : xv[static_cast<size_t>(k)];
          s += v * v * cv[static_cast<size_t>(k)];
        }
        return s;
      };
      const double h = 1e-5;
      const double fd = (f(xv[static_cast<size_t>(i)] + h) - f(xv[static_cast<size_t>(i)] - h)) / (2 * h);
      const double expect = -double(lambda_val) * fd;
      const double got = x.grad()[static_cast<size_t>(i)];
      if (lambda_val == 0.0f) {
        CHECK(got == 0.0);
      } else {
        CHECK(std::fabs(got - expect) / std::max(1e-9, std::fabs(expect)) < 1e-4);
      }
    }
  }
}

TEST_CASE("speaker_mean_penalty values and gradient") {
  Tensor a = Tensor::from({2, 2}, {1.0f, 0.0f, -1.0f, 0.0f});
  CHECK(speaker_mean_penalty(a).item() == 0.0f);
  Tensor b = Tensor::from({2, 2}, {1.0f, 0.0f, 1.0f, 0.0f});
  CHECK(speaker_mean_penalty(b).item() == doctest::Approx(1.0f));

  Rng rng(12);
  const int n = 8, d = 16;
  std::vector<float> data(static_cast<size_t>(n) * d);
  for (auto& v : data) v = static_cast<float>(rng.normal());

  // independent two-pass oracle in double
  std::vector<double> centroid(static_cast<size_t>(d), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) centroid[static_cast<size_t>(j)] += data[static_cast<size_t>(i) * d + j];
  double expect = 0.0;
  for (int j = 0; j < d; ++j) {
    centroid[static_cast<size_t>(j)] /= n;
    expect += centroid[static_cast<size_t>(j)] * centroid[static_cast<size_t>(j)];
  }

  Tensor x = Tensor::from({n, d}, std::vector<float>(data), true);
  Tensor pen = speaker_mean_penalty(x);
  CHECK(pen.item() == doctest::Approx(expect).epsilon(1e-5));

  pen.backward();
  // analytic gradient: (2/n) * centroid for every row; cross-check against
  // double-precision finite differences of the oracle
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      const double closed = 2.0 / n * centroid[static_cast<size_t>(j)];
      auto f = [&](double xv) {
        double cj = 0.0;
        for (int r = 0; r < n; ++r)
          cj += (r == i) ? xv : data[static_cast<size_t>(r) * d + j];
        cj /= n;
        double s = 0.0;
        for (int jj = 0; jj < d; ++jj)
          s += jj == j ? cj * cj : centroid[static_cast<size_t>(jj)] * centroid[static_cast<size_t>(jj)];
        return s;
      };
      const double h = 1e-5;
      const double x0 = data[static_cast<size_t>(i) * d + j];
      const double fd = (f(x0 + h) - f(x0 - h)) / (2 * h);
      const double got = x.grad()[static_cast<size_t>(i) * d + j];
      CHECK(std::fabs(fd - closed) < 1e-7);
      CHECK(std::fabs(got - fd) / std::max(1.0, std::fabs(fd)) < 1e-4);
    }
  }
}

TEST_CASE("encode_text: empty, language injection, pad masking") {
  TtsModel model(tiny_config(), two_speakers());

  auto empty = model.encode_text({}, Lang::ko);
  CHECK(empty.t_text == 0);
  CHECK(empty.hidden.dim(0) == 0);
  CHECK(empty.mask.numel() == 0);

  // same ids, two languages -> different hidden
  const std::vector<int> ids = {5, 6, 7, 8};
  auto enc_ko = model.encode_text(ids, Lang::ko);
  auto enc_en = model.encode_text(ids, Lang::en);
  double delta = 0.0;
  for (size_t i = 0; i < enc_ko.hidden.data().size(); ++i)
    delta += std::fabs(double(enc_ko.hidden.data()[i]) - enc_en.hidden.data()[i]);
  CHECK(delta > 1e-3);

  // trailing pads leave unmasked rows untouched
  auto plain = model.encode_text({5, 6, 7}, Lang::ko);
  auto padded = model.encode_text({5, 6, 7, 0, 0}, Lang::ko);
  for (int t = 0; t < 3; ++t)
    for (int c = 0; c < model.config().hidden_dim; ++c)
      REQUIRE(padded.hidden.data()[static_cast<size_t>(t) * model.config().hidden_dim + c] ==
              plain.hidden.data()[static_cast<size_t>(t) * model.config().hidden_dim + c]);
  // padded rows are zero
  for (int t = 3; t < 5; ++t)
    for (int c = 0; c < model.config().hidden_dim; ++c)
      REQUIRE(padded.hidden.data()[static_cast<size_t>(t) * model.config().hidden_dim + c] == 0.0f);
}

TEST_CASE("predict_durations: positive, deterministic, empty") {
  TtsModel model(tiny_config(), two_speakers());
  auto enc = model.encode_text({4, 5, 6, 7, 8}, Lang::ja);
  Tensor spk = Tensor::zeros({1, model.config().hidden_dim});
  Tensor d1 = model.predict_durations(enc, Lang::ja, spk);
  Tensor d2 = model.predict_durations(enc, Lang::ja, spk);
  REQUIRE(d1.numel() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(d1.data()[static_cast<size_t>(i)] > 0.0f);
    CHECK(d1.data()[static_cast<size_t>(i)] == d2.data()[static_cast<size_t>(i)]);
  }
  auto empty = model.encode_text({}, Lang::ja);
  CHECK(model.predict_durations(empty, Lang::ja, spk).numel() == 0);
}

TEST_CASE("speaker_classifier: single-speaker softmax, pad invariance, reversed gradient") {
  TtsConfig cfg = tiny_config();
  SpeakerProfile solo;
  solo.speaker_id = "only";
  solo.native_language = Lang::ko;
  TtsModel one(cfg, {solo});
  auto enc1 = one.encode_text({5, 6}, Lang::ko);
  Tensor logits1 = one.speaker_classifier(enc1, 0.5f);
  REQUIRE(logits1.numel() == 1);  // softmax over one logit is identically 1

  TtsModel model(cfg, two_speakers());
  auto plain = model.encode_text({5, 6, 7}, Lang::ko);
  auto padded = model.encode_text({5, 6, 7, 0}, Lang::ko);
  Tensor lp = model.speaker_classifier(plain, 0.3f);
  Tensor lq = model.speaker_classifier(padded, 0.3f);
  for (int i = 0; i < lp.numel(); ++i)
    CHECK(lp.data()[static_cast<size_t>(i)] == doctest::Approx(lq.data()[static_cast<size_t>(i)]).epsilon(1e-6));

  // gradient reaching an encoder parameter equals -lambda x unreversed gradient
  auto grad_of = [&](float lambda_val) {
    auto enc = model.encode_text({5, 6, 7}, Lang::ko);
    Tensor loss = nn::cross_entropy_logits(model.speaker_classifier(enc, lambda_val), 0);
    Tensor emb = model.language_embeddings();
    emb.zero_grad();
    loss.backward();
    return emb.grad();
  };
  // lambda = 0 severs the path entirely
  auto g0 = grad_of(0.0f);
  double n0 = 0.0;
  for (float v : g0) n0 += std::fabs(v);
  CHECK(n0 == 0.0);
  auto g1 = grad_of(1.0f);
  auto gh = grad_of(0.5f);
  double ref = 0.0;
  for (size_t i = 0; i < g1.size(); ++i) ref += std::fabs(g1[i]);
  REQUIRE(ref > 0.0);
  for (size_t i = 0; i < g1.size(); ++i)
    CHECK(std::fabs(gh[i] - 0.5 * g1[i]) <= 1e-4 * std::max(1.0, std::fabs(double(g1[i]))));
}

TEST_CASE("synthesize: substitution rule, length contract, determinism") {
  TtsModel model(tiny_config(), two_speakers());
  auto seq = textfront::phonemes_to_ids(
      textfront::grapheme_to_phoneme("안녕", Lang::ko), textfront::inventory(Lang::ko));

  InferenceTrace trace;
  auto wav = model.synthesize(seq, Lang::ko, model.speaker(0), &trace);
  CHECK_FALSE(trace.substitution);  // ko text, ko-native speaker
  long long total = 0;
  for (int d : trace.durations) {
    CHECK(d >= 1);
    total += d;
  }
  CHECK(static_cast<long long>(wav.samples.size()) ==
        total * model.config().hop_length);
  for (float s : wav.samples) {
    REQUIRE(std::isfinite(s));
    REQUIRE(s >= -1.0f);
    REQUIRE(s <= 1.0f);
  }

  // non-native speaker -> zero-vector substitution
  InferenceTrace trace2;
  auto wav2 = model.synthesize(seq, Lang::ko, model.speaker(1), &trace2);
  CHECK(trace2.substitution);
  CHECK(wav2.samples.size() == static_cast<size_t>(trace2.t_mel) *
                                   static_cast<size_t>(model.config().hop_length));

  // determinism
  InferenceTrace trace3;
  auto wav3 = model.synthesize(seq, Lang::ko, model.speaker(0), &trace3);
  REQUIRE(wav3.samples == wav.samples);

  // empty sequence
  textfront::PhonemeSequence empty;
  empty.language = Lang::ko;
  auto none = model.synthesize(empty, Lang::ko, model.speaker(0));
  CHECK(none.samples.empty());
}

TEST_CASE("training_step: additive decomposition and finite terms") {
  TtsConfig cfg = tiny_config();
  cfg.reg_weight = 0.0f;
  cfg.adv_weight = 0.0f;
  TtsModel model(cfg, two_speakers());
  std::vector<Utterance> batch = {
      make_utt(model, "가나다", Lang::ko, 0, 0.45, 150.0),
      make_utt(model, "hello", Lang::en, 1, 0.45, 220.0),
  };
  auto lb = model.training_step(batch, 0.0f);
  CHECK(std::isfinite(lb.total));
  CHECK(lb.total == doctest::Approx(cfg.mel_loss_weight * lb.recon_mel + lb.kl +
                                    lb.duration)
                        .epsilon(1e-4));

  // a couple more steps run and stay finite
  for (int i = 0; i < 3; ++i) {
    auto l2 = model.training_step(batch, static_cast<float>(i) / 3.0f);
    CHECK(std::isfinite(l2.total));
  }
}

TEST_CASE("training_step: non-finite input reports the diverging term") {
  TtsModel model(tiny_config(), two_speakers());
  auto utt = make_utt(model, "가나", Lang::ko, 0, 0.4, 180.0);
  for (auto& s : utt.wave.samples) s = std::numeric_limits<float>::quiet_NaN();
  utt.mel = audio::mel_spectrogram(utt.wave, model.mel_basis());
  try {
    model.training_step({utt}, 0.0f);
    FAIL("expected NonFiniteLoss");
  } catch (const NonFiniteLoss& e) {
    CHECK(e.term == "recon_mel");
  }
}

TEST_CASE("checkpoint round trip preserves synthesis") {
  TtsModel model(tiny_config(), two_speakers());
  auto seq = textfront::phonemes_to_ids(
      textfront::grapheme_to_phoneme("hello", Lang::en), textfront::inventory(Lang::en));
  auto before = model.synthesize(seq, Lang::en, model.speaker(1));

  const char* path = "test_tts_ckpt.bin";
  model.save(path);
  auto loaded = TtsModel::load(path);
  auto after = loaded->synthesize(seq, Lang::en, loaded->speaker(1));
  REQUIRE(after.samples == before.samples);
  CHECK(loaded->n_speakers() == 2);
  CHECK(loaded->speaker(0).speaker_id == "spk_ko");
  std::remove(path);
}
