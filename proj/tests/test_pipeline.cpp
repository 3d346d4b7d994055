#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include <httplib.h>
#include <json.hpp>

#include "polydub/pipeline/service.hpp"
#include "polydub/pipeline/workflows.hpp"

using namespace polydub;
using namespace polydub::pipeline;
using textfront::Lang;
namespace fs = std::filesystem;

namespace {

// Small models keep these tests quick; dimensions are shared across the
// tts/facegen pair so the mel stream lines up.
std::unique_ptr<tts::TtsModel> tiny_tts() {
  tts::TtsConfig cfg;
  cfg.hidden_dim = 32;
  cfg.latent_dim = 8;
  cfg.mel_bins = 24;
  cfg.n_fft = 256;
  cfg.win_length = 256;
  cfg.segment_frames = 8;
  cfg.seed = 3;
  tts::SpeakerProfile ko, en;
  ko.speaker_id = "spk_ko";
  ko.native_language = Lang::ko;
  en.speaker_id = "spk_en";
  en.native_language = Lang::en;
  return std::make_unique<tts::TtsModel>(cfg, std::vector<tts::SpeakerProfile>{ko, en});
}

std::unique_ptr<facegen::FacegenModel> tiny_facegen() {
  facegen::FacegenConfig cfg;
  cfg.base_channels = 4;
  cfg.audio_dim = 16;
  cfg.mel_bins = 24;
  cfg.disc_channels = 6;
  cfg.seed = 4;
  return std::make_unique<facegen::FacegenModel>(cfg);
}

std::vector<image::Image> toy_source_frames(int n) {
  audio::Waveform w;
  w.sample_rate = 22050;
  w.samples.assign(static_cast<size_t>(n) * 882, 0.0f);
  auto clip = toydata::render_face_clip(w, 77);
  return clip.frames;
}

std::unique_ptr<DubPipeline> make_pipeline() {
  auto p = std::make_unique<DubPipeline>();
  p->set_tts(tiny_tts());
  p->set_facegen(tiny_facegen());
  p->register_source_video("clip", toy_source_frames(50), 25);
  return p;
}

}  // namespace

TEST_CASE("pingpong looping avoids jumps at the ends") {
  CHECK(pingpong_index(0, 4) == 0);
  CHECK(pingpong_index(3, 4) == 3);
  CHECK(pingpong_index(4, 4) == 2);
  CHECK(pingpong_index(6, 4) == 0);
  CHECK(pingpong_index(7, 4) == 1);
  CHECK(pingpong_index(5, 1) == 0);
  for (int t = 1; t < 40; ++t)
    CHECK(std::abs(pingpong_index(t, 7) - pingpong_index(t - 1, 7)) <= 1);
}

TEST_CASE("kv config parsing") {
  auto kv = KvConfig::parse("a = 1\n# comment\nb= hello world \nc =2.5\nbad line\n");
  CHECK(kv.get_int("a", 0) == 1);
  CHECK(kv.get("b", "") == "hello world");
  CHECK(kv.get_float("c", 0.0) == doctest::Approx(2.5));
  CHECK(kv.get("missing", "fallback") == "fallback");
}

TEST_CASE("register_source_video caches geometry deterministically") {
  auto p = std::make_unique<DubPipeline>();
  auto frames = toy_source_frames(50);
  const auto& entry = p->register_source_video("a", frames, 25);
  CHECK(entry.geometry.size() == 50);
  const uint64_t checksum = entry.geometry_checksum();
  const auto& again = p->register_source_video("a2", frames, 25);
  CHECK(again.geometry_checksum() == checksum);

  // a blank frame reports its index
  frames[7] = image::Image(frames[7].h, frames[7].w, 3);
  try {
    p->register_source_video("bad", frames, 25);
    FAIL("expected NoFaceFound");
  } catch (const facecrop::NoFaceFound& e) {
    CHECK(std::string(e.what()).find("frame 7") != std::string::npos);
  }
}

TEST_CASE("encode_video: image sequence contract and mp4 adapter") {
  DubPipeline p;
  audio::Waveform wave;
  wave.sample_rate = 22050;
  wave.samples.assign(22050, 0.1f);  // 1 s
  std::vector<image::Image> frames(25, image::Image(32, 32, 3));

  fs::remove_all("enc_test");
  const std::string out = p.encode_video(frames, wave, "image_sequence", "enc_test", 25);
  CHECK(out == "enc_test");
  int n_ppm = 0;
  for (const auto& e : fs::directory_iterator("enc_test/frames"))
    if (e.path().extension() == ".ppm") ++n_ppm;
  CHECK(n_ppm == 25);
  auto readback = audio::read_wav("enc_test/audio.wav");
  CHECK(readback.samples.size() == 22050);
  // durations equal: 25 frames / 25 fps == 1 s of audio
  CHECK(static_cast<double>(n_ppm) / 25.0 ==
        doctest::Approx(readback.seconds()).epsilon(1e-9));

  CHECK_THROWS_AS(p.encode_video(frames, wave, "mp4", "enc_test2", 25),
                  EncoderUnavailable);

  // stub encoder records the exact argument expansion
  std::vector<std::string> seen;
  p.set_mp4_encoder({"ffmpeg", "-framerate", "{fps}", "-i", "{frame_pattern}", "-i",
                     "{audio}", "-y", "{out}"},
                    [&](const std::vector<std::string>& args) {
                      seen = args;
                      return 0;
                    });
  const std::string mp4 = p.encode_video(frames, wave, "mp4", "enc_test3", 25);
  REQUIRE(seen.size() == 9);
  CHECK(seen[0] == "ffmpeg");
  CHECK(seen[2] == "25");
  CHECK(seen[4] == "enc_test3/frames/%06d.ppm");
  CHECK(seen[6] == "enc_test3/audio.wav");
  CHECK(seen[8] == "enc_test3/video.mp4");
  CHECK(mp4 == "enc_test3/video.mp4");
  fs::remove_all("enc_test");
  fs::remove_all("enc_test2");
  fs::remove_all("enc_test3");
}

TEST_CASE("dub: validation, substitution flag, report structure, duration agreement") {
  auto p = make_pipeline();

  DubRequest bad;
  bad.text = "   ";
  bad.language = Lang::ko;
  bad.speaker_id = "spk_ko";
  bad.source_video_id = "clip";
  fs::remove_all("dub_test");
  CHECK_THROWS_AS(p->dub(bad, "dub_test/a"), InvalidRequest);

  DubRequest unknown_spk = bad;
  unknown_spk.text = "안녕";
  unknown_spk.speaker_id = "nobody";
  CHECK_THROWS_AS(p->dub(unknown_spk, "dub_test/b"), InvalidRequest);

  // Japanese text with a Korean-native speaker: zero-vector substitution
  DubRequest req;
  req.text = "さくら やま かわ うみ そら";
  req.language = Lang::ja;
  req.speaker_id = "spk_ko";
  req.source_video_id = "clip";
  auto res = p->dub(req, "dub_test/c");
  CHECK(res.substitution);
  REQUIRE(res.report.stages.size() == 5);
  CHECK(res.report.stages[0].stage == "preprocess");
  CHECK(res.report.stages[1].stage == "tts");
  CHECK(res.report.stages[2].stage == "facegen");
  CHECK(res.report.stages[3].stage == "merge");
  CHECK(res.report.stages[4].stage == "encode");
  for (const auto& s : res.report.stages) CHECK(s.rtf >= 0.0);
  CHECK(std::fabs(res.audio_seconds - res.n_frames / 25.0) < 1.0 / 25.0);

  // native language: no substitution
  DubRequest native = req;
  native.text = "안녕 바다";
  native.language = Lang::ko;
  auto res2 = p->dub(native, "dub_test/d");
  CHECK_FALSE(res2.substitution);
  CHECK(res2.substitution == (p->tts_model()->speaker(0).native_language != native.language));

  // report serialization: header plus the five ordered stage rows
  auto tsv = res.report.to_tsv();
  CHECK(tsv.rfind("stage\tseconds_per_second\trtf\n", 0) == 0);
  CHECK(tsv.find("preprocess\t") != std::string::npos);
  fs::remove_all("dub_test");
}

TEST_CASE("dub determinism: identical invocations produce bit-identical artifacts") {
  auto p = make_pipeline();
  DubRequest req;
  req.text = "안녕 바다 하늘";
  req.language = Lang::ko;
  req.speaker_id = "spk_ko";
  req.source_video_id = "clip";
  fs::remove_all("det_a");
  fs::remove_all("det_b");
  auto a = p->dub(req, "det_a");
  auto b = p->dub(req, "det_b");
  REQUIRE(a.n_frames == b.n_frames);
  for (int t = 0; t < a.n_frames; ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "/frames/%06d.ppm", t);
    const auto fa = read_binary_file("det_a" + std::string(name));
    const auto fb = read_binary_file("det_b" + std::string(name));
    REQUIRE(fa == fb);
  }
  const auto wa = read_binary_file("det_a/audio.wav");
  const auto wb = read_binary_file("det_b/audio.wav");
  REQUIRE(wa == wb);
  fs::remove_all("det_a");
  fs::remove_all("det_b");
}

TEST_CASE("bench: injected fake timers give exact medians") {
  auto p = make_pipeline();

  // scripted clock: every call advances by the programmed step for the
  // current dub run (12 clock reads per dub)
  auto t = std::make_shared<double>(0.0);
  auto call = std::make_shared<int>(0);
  p->set_clock([t, call]() {
    const int run = *call / 12;
    const double dt = run == 0 ? 0.01 : (run == 1 ? 0.2 : 0.4);
    ++*call;
    *t += dt;
    return *t;
  });

  DubRequest req;
  req.text = "안녕 바다";
  req.language = Lang::ko;
  req.speaker_id = "spk_ko";
  req.source_video_id = "clip";
  fs::remove_all("bench_test");
  auto report = p->bench({req}, 2, "bench_test");
  // stage wall seconds were 0.2 then 0.4; the median of the two is 0.3
  const double out_sec = report.output_seconds;
  REQUIRE(out_sec > 0.0);
  for (const auto& s : report.stages)
    CHECK(s.rtf == doctest::Approx(0.3 / out_sec).epsilon(1e-6));

  // repetitions = 1 equals the single run
  auto single = p->bench({req}, 1, "bench_test2");
  CHECK(single.stages.size() == 5);
  fs::remove_all("bench_test");
  fs::remove_all("bench_test2");
}

TEST_CASE("service: health, dub round trip, bad request") {
  ServiceConfig scfg;
  scfg.workers = 2;
  scfg.artifact_root = "svc_artifacts";
  fs::remove_all("svc_artifacts");
  DubService service(scfg, [] { return make_pipeline(); });
  service.start();
  REQUIRE(service.port() > 0);

  httplib::Client client("127.0.0.1", service.port());
  auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(nlohmann::json::parse(health->body)["status"] == "ok");

  nlohmann::json body{{"text", "안녕 바다"},
                      {"language", "ko"},
                      {"speaker_id", "spk_ko"},
                      {"source_video_id", "clip"}};
  auto res = client.Post("/dub", body.dump(), "application/json");
  REQUIRE(res);
  REQUIRE(res->status == 200);
  auto out = nlohmann::json::parse(res->body);
  CHECK(out["substitution"] == false);
  CHECK(out["report"].size() == 5);
  CHECK(fs::exists(out["artifact"].get<std::string>()));

  auto bad = client.Post("/dub", "{\"text\": \"x\"}", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);

  auto unknown = client.Post(
      "/dub",
      nlohmann::json{{"text", "hi"}, {"language", "en"}, {"speaker_id", "spk_en"},
                     {"source_video_id", "nope"}}
          .dump(),
      "application/json");
  REQUIRE(unknown);
  CHECK(unknown->status == 400);

  service.stop();
  fs::remove_all("svc_artifacts");
}

TEST_CASE("prepared clips and workflow sampler") {
  fs::remove_all("wf_corpus");
  toydata::ToySpec spec;
  spec.n_speakers = 1;
  spec.languages = {Lang::ko};
  spec.utterances_per_speaker = 2;
  spec.seed = 31;
  auto rows = toydata::build_corpus(spec, "wf_corpus");
  REQUIRE(rows.size() == 2);

  audio::MelConfig mc;
  mc.n_mels = 24;
  audio::MelBasis basis(mc);
  auto clips = prepare_clips("wf_corpus", rows, 64, basis);
  REQUIRE(clips.size() == 2);
  CHECK(clips[0].crops[0].h == 64);
  CHECK(clips[0].mel.bins == 24);

  Rng rng(5);
  auto window = sample_training_window(clips[0], 5, rng);
  CHECK(window.inputs.size() == 5);
  CHECK(window.targets.size() == 5);
  // reference lower halves are masked to zero
  for (const auto& in : window.inputs)
    for (int y = 32; y < 64; ++y)
      for (int x = 0; x < 64; ++x) REQUIRE(in.reference.at(y, x, 0) == 0.0f);

  auto speakers = speakers_from_manifest(rows);
  REQUIRE(speakers.size() == 1);
  CHECK(speakers[0].speaker_id == "spk00");
  CHECK(speakers[0].native_language == Lang::ko);
  fs::remove_all("wf_corpus");
}
