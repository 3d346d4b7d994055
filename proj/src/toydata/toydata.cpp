#include "polydub/toydata/toydata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "polydub/common.hpp"

namespace polydub::toydata {

namespace fs = std::filesystem;
using textfront::Lang;

void ToySpec::validate() const {
  if (fps != 25) throw std::invalid_argument("ToySpec: fps is fixed at 25");
  if (sample_rate != 22050)
    throw std::invalid_argument("ToySpec: sample_rate is fixed at 22050");
  if (n_speakers < 1) throw std::invalid_argument("ToySpec: n_speakers must be >= 1");
  if (languages.empty()) throw std::invalid_argument("ToySpec: need languages");
  if (utterances_per_speaker < 0)
    throw std::invalid_argument("ToySpec: negative utterances_per_speaker");
  std::set<Lang> uniq(languages.begin(), languages.end());
  if (uniq.size() != languages.size())
    throw std::invalid_argument("ToySpec: duplicate languages");
  if (frame_h < 48 || frame_w < 48)
    throw std::invalid_argument("ToySpec: frames too small for a face");
}

namespace {

constexpr int kSampleRate = 22050;
constexpr int kFps = 25;
constexpr int kSamplesPerFrame = kSampleRate / kFps;  // 882
constexpr int kPhonemeSamples = 2 * kSamplesPerFrame; // 80 ms per phoneme
constexpr int kSilenceSamples = kSamplesPerFrame;     // 40 ms per boundary

bool silent_symbol(const std::string& s) {
  return s == textfront::kWordSepSymbol || s == textfront::kSilenceSymbol ||
         s == textfront::kPadSymbol || s == textfront::kBosSymbol ||
         s == textfront::kEosSymbol;
}

struct FaceGeom {
  float cx, cy, rx, ry;
  float skin_r, skin_g, skin_b;
  float bg_r, bg_g, bg_b;
};

FaceGeom face_geom(uint64_t identity_seed, int frame_h, int frame_w) {
  const uint64_t h = fnv1a64(&identity_seed, sizeof(identity_seed));
  auto u = [&](int k) {  // deterministic [0,1) stream from the hash
    return static_cast<float>((h >> (k * 7)) % 1009) / 1009.0f;
  };
  FaceGeom g;
  g.cx = frame_w * 0.5f + (u(0) - 0.5f) * 12.0f;
  g.cy = frame_h * 0.47f + (u(1) - 0.5f) * 10.0f;
  g.rx = frame_w * 0.21f + (u(2) - 0.5f) * 6.0f;
  g.ry = frame_h * 0.34f + (u(3) - 0.5f) * 6.0f;
  g.skin_r = 0.80f + 0.10f * u(4);
  g.skin_g = 0.60f + 0.10f * u(5);
  g.skin_b = 0.45f + 0.08f * u(6);
  g.bg_r = 0.52f + 0.08f * u(7);
  g.bg_g = 0.62f + 0.08f * u(8);
  g.bg_b = 0.85f;
  return g;
}

// Landmark ratios shared by the renderer and the synthetic detector.
constexpr float kEyeDx = 0.38f, kEyeDy = -0.30f;
constexpr float kNoseDy = 0.08f;
constexpr float kMouthDy = 0.48f, kMouthDx = 0.30f;

void fill_circle(image::Image& img, float cx, float cy, float r, float cr, float cg,
                 float cb) {
  const int y0 = std::max(0, static_cast<int>(cy - r - 1));
  const int y1 = std::min(img.h - 1, static_cast<int>(cy + r + 1));
  const int x0 = std::max(0, static_cast<int>(cx - r - 1));
  const int x1 = std::min(img.w - 1, static_cast<int>(cx + r + 1));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const float dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy <= r * r) {
        img.at(y, x, 0) = cr;
        img.at(y, x, 1) = cg;
        img.at(y, x, 2) = cb;
      }
    }
}

}  // namespace

audio::Waveform render_voice(const textfront::PhonemeSequence& phonemes,
                             uint64_t speaker_seed) {
  audio::Waveform out;
  out.sample_rate = kSampleRate;
  const double f0 = 100.0 + static_cast<double>(speaker_seed % 12) * 12.0;

  for (const auto& sym : phonemes.symbols) {
    if (silent_symbol(sym)) {
      out.samples.insert(out.samples.end(), kSilenceSamples, 0.0f);
      continue;
    }
    const uint64_t h = fnv1a64(sym);
    double amp[5];
    double norm = 0.0;
    for (int k = 0; k < 5; ++k) {
      amp[k] = 0.2 + 0.8 * static_cast<double>((h >> (8 * k)) & 0xFF) / 255.0;
      norm += amp[k];
    }
    // per-phoneme loudness spread keeps mouth heights distinguishable
    const double loudness = 0.45 + 0.55 * static_cast<double>((h >> 40) & 0xFF) / 255.0;
    for (int k = 0; k < 5; ++k) amp[k] *= loudness / norm;

    const size_t base = out.samples.size();
    out.samples.resize(base + kPhonemeSamples);
    constexpr int kRamp = 200;
    for (int i = 0; i < kPhonemeSamples; ++i) {
      double s = 0.0;
      for (int k = 0; k < 5; ++k)
        s += amp[k] * std::sin(2.0 * M_PI * (k + 1) * f0 * i / kSampleRate);
      double env = 1.0;
      if (i < kRamp) env = static_cast<double>(i) / kRamp;
      const int tail = kPhonemeSamples - 1 - i;
      if (tail < kRamp) env = std::min(env, static_cast<double>(tail) / kRamp);
      out.samples[base + static_cast<size_t>(i)] = static_cast<float>(0.45 * env * s);
    }
  }
  return out;
}

FaceClip render_face_clip(const audio::Waveform& audio, uint64_t identity_seed,
                          int frame_h, int frame_w) {
  for (float s : audio.samples)
    if (!std::isfinite(s)) throw std::invalid_argument("render_face_clip: non-finite audio");

  FaceClip clip;
  clip.fps = kFps;
  const int n_frames = static_cast<int>(
      std::llround(static_cast<double>(audio.samples.size()) * kFps / audio.sample_rate));
  const FaceGeom g = face_geom(identity_seed, frame_h, frame_w);
  const int spf = audio.sample_rate / kFps;

  for (int t = 0; t < n_frames; ++t) {
    double acc = 0.0;
    int count = 0;
    for (size_t i = static_cast<size_t>(t) * spf;
         i < std::min(audio.samples.size(), static_cast<size_t>(t + 1) * spf); ++i) {
      acc += double(audio.samples[i]) * audio.samples[i];
      ++count;
    }
    const float rms = count ? static_cast<float>(std::sqrt(acc / count)) : 0.0f;
    // headroom above the loudest toy phoneme keeps height affine in rms
    const float mouth_h = 2.0f + 36.0f * std::min(1.0f, rms / 0.5f);
    clip.mouth_heights.push_back(mouth_h);

    image::Image img(frame_h, frame_w, 3);
    for (int y = 0; y < frame_h; ++y)
      for (int x = 0; x < frame_w; ++x) {
        img.at(y, x, 0) = g.bg_r;
        img.at(y, x, 1) = g.bg_g;
        img.at(y, x, 2) = g.bg_b;
      }
    for (int y = 0; y < frame_h; ++y)
      for (int x = 0; x < frame_w; ++x) {
        const float dx = (x - g.cx) / g.rx, dy = (y - g.cy) / g.ry;
        if (dx * dx + dy * dy <= 1.0f) {
          img.at(y, x, 0) = g.skin_r;
          img.at(y, x, 1) = g.skin_g;
          img.at(y, x, 2) = g.skin_b;
        }
      }
    const float eye_r = std::max(2.0f, g.rx * 0.12f);
    fill_circle(img, g.cx - kEyeDx * g.rx, g.cy + kEyeDy * g.ry, eye_r, 0.15f, 0.15f,
                0.18f);
    fill_circle(img, g.cx + kEyeDx * g.rx, g.cy + kEyeDy * g.ry, eye_r, 0.15f, 0.15f,
                0.18f);
    fill_circle(img, g.cx, g.cy + kNoseDy * g.ry, std::max(1.5f, g.rx * 0.06f), 0.55f,
                0.38f, 0.30f);
    // mouth: filled box whose height tracks the audio
    const float my = g.cy + kMouthDy * g.ry;
    const float half_w = kMouthDx * g.rx;
    const float half_h = mouth_h * 0.5f;
    for (int y = std::max(0, static_cast<int>(my - half_h));
         y <= std::min(frame_h - 1, static_cast<int>(my + half_h)); ++y)
      for (int x = std::max(0, static_cast<int>(g.cx - half_w));
           x <= std::min(frame_w - 1, static_cast<int>(g.cx + half_w)); ++x) {
        img.at(y, x, 0) = 0.45f;
        img.at(y, x, 1) = 0.15f;
        img.at(y, x, 2) = 0.15f;
      }

    facecrop::LandmarkSet lm;
    lm.provider_id = "renderer";
    lm.points = {
        {g.cx - kEyeDx * g.rx, g.cy + kEyeDy * g.ry},
        {g.cx + kEyeDx * g.rx, g.cy + kEyeDy * g.ry},
        {g.cx, g.cy + kNoseDy * g.ry},
        {g.cx - kMouthDx * g.rx, my},
        {g.cx + kMouthDx * g.rx, my},
        {g.cx, my},
    };
    clip.landmarks.push_back(std::move(lm));
    clip.frames.push_back(std::move(img));
  }
  return clip;
}

facecrop::LandmarkSet synthetic_landmarks(const image::Image& frame) {
  int x_min = frame.w, x_max = -1, y_min = frame.h, y_max = -1;
  int warm = 0;
  for (int y = 0; y < frame.h; ++y)
    for (int x = 0; x < frame.w; ++x) {
      if (frame.at(y, x, 0) - frame.at(y, x, 2) > 0.15f) {
        ++warm;
        x_min = std::min(x_min, x);
        x_max = std::max(x_max, x);
        y_min = std::min(y_min, y);
        y_max = std::max(y_max, y);
      }
    }
  if (warm < 50) throw facecrop::NoFaceFound("no toy face in frame");
  const float cx = 0.5f * (x_min + x_max);
  const float cy = 0.5f * (y_min + y_max);
  const float rx = 0.5f * (x_max - x_min);
  const float ry = 0.5f * (y_max - y_min);

  facecrop::LandmarkSet lm;
  lm.provider_id = "synthetic";
  lm.points = {
      {cx - kEyeDx * rx, cy + kEyeDy * ry},
      {cx + kEyeDx * rx, cy + kEyeDy * ry},
      {cx, cy + kNoseDy * ry},
      {cx - kMouthDx * rx, cy + kMouthDy * ry},
      {cx + kMouthDx * rx, cy + kMouthDy * ry},
      {cx, cy + kMouthDy * ry},
  };
  for (auto& [x, y] : lm.points) {
    x = std::clamp(x, 0.0f, static_cast<float>(frame.w - 1));
    y = std::clamp(y, 0.0f, static_cast<float>(frame.h - 1));
  }
  return lm;
}

void register_builtin_landmark_provider() {
  facecrop::register_landmark_provider("synthetic", synthetic_landmarks);
}

namespace {
const bool kProviderRegistered = [] {
  register_builtin_landmark_provider();
  return true;
}();
}

std::string sample_text(Lang lang, Rng& rng) {
  static const std::vector<std::string> ko = {
      "안녕", "바다", "하늘", "노래", "사랑", "아침", "저녁", "구름", "나무", "친구",
      "학교", "시간", "세상", "소리", "바람", "겨울", "여름", "마음", "고향", "행복"};
  static const std::vector<std::string> en = {
      "hello", "world", "good",  "morning", "water", "fire",  "sun",   "moon",
      "star",  "tree",  "bird",  "fish",    "house", "time",  "music", "river",
      "ocean", "light", "dream", "voice"};
  static const std::vector<std::string> ja = {
      "さくら", "やま", "かわ", "うみ", "そら", "ほし", "つき", "はな", "とり", "ねこ",
      "いぬ",   "みず", "ゆき", "かぜ", "あさ", "よる", "うた", "こえ", "ゆめ", "ひかり"};
  static const std::vector<std::string> zh = {
      "你好", "山", "水", "天", "星", "月", "花", "鸟", "鱼", "猫",
      "狗",   "家", "国", "心", "早", "晚", "来", "去", "大", "小"};
  const std::vector<std::string>* pool = nullptr;
  switch (lang) {
    case Lang::ko: pool = &ko; break;
    case Lang::en: pool = &en; break;
    case Lang::ja: pool = &ja; break;
    case Lang::zh: pool = &zh; break;
  }
  const int n_words = rng.uniform_int(2, 4);
  std::string out;
  for (int i = 0; i < n_words; ++i) {
    if (i) out += " ";
    out += (*pool)[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(pool->size()) - 1))];
  }
  return out;
}

void save_clip_frames(const std::vector<image::Image>& frames, int fps,
                      const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoFailure("cannot create clip directory " + dir);
  write_text_file(dir + "/fps.txt", std::to_string(fps) + "\n");
  char name[32];
  for (size_t i = 0; i < frames.size(); ++i) {
    std::snprintf(name, sizeof(name), "%06zu.ppm", i);
    image::write_ppm(dir + "/" + name, frames[i]);
  }
}

std::pair<std::vector<image::Image>, int> load_clip_frames(const std::string& dir) {
  const std::string fps_str = read_text_file(dir + "/fps.txt");
  const int fps = std::stoi(fps_str);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".ppm") names.push_back(e.path().string());
  }
  std::sort(names.begin(), names.end());
  std::vector<image::Image> frames;
  frames.reserve(names.size());
  for (const auto& n : names) frames.push_back(image::read_ppm(n));
  return {std::move(frames), fps};
}

std::vector<ManifestRow> build_corpus(const ToySpec& spec, const std::string& out_dir) {
  spec.validate();
  std::error_code ec;
  fs::create_directories(out_dir + "/audio", ec);
  fs::create_directories(out_dir + "/video", ec);
  if (!fs::exists(out_dir + "/audio") || !fs::exists(out_dir + "/video"))
    throw IoFailure("cannot create corpus directories under " + out_dir);

  Rng rng(spec.seed);
  std::vector<ManifestRow> rows;
  const int n_lang = static_cast<int>(spec.languages.size());
  for (int li = 0; li < n_lang; ++li) {
    const Lang lang = spec.languages[static_cast<size_t>(li)];
    for (int si = 0; si < spec.n_speakers; ++si) {
      const int spk_index = li * spec.n_speakers + si;
      char spk_id[16];
      std::snprintf(spk_id, sizeof(spk_id), "spk%02d", spk_index);
      uint64_t mix[3] = {spec.seed, static_cast<uint64_t>(spk_index), 0x51CA};
      const uint64_t speaker_seed = fnv1a64(mix, sizeof(mix));
      const uint64_t identity_seed = speaker_seed ^ 0xFACEFACEull;

      for (int ui = 0; ui < spec.utterances_per_speaker; ++ui) {
        const std::string text = sample_text(lang, rng);
        char utt_id[32];
        std::snprintf(utt_id, sizeof(utt_id), "%s_%03d", spk_id, ui);

        auto seq = textfront::text_to_ids(text, lang);
        audio::Waveform voice = render_voice(seq, speaker_seed);
        FaceClip clip = render_face_clip(voice, identity_seed, spec.frame_h, spec.frame_w);

        const std::string audio_rel = std::string("audio/") + utt_id + ".wav";
        const std::string video_rel = std::string("video/") + utt_id;
        try {
          audio::write_wav(out_dir + "/" + audio_rel, voice);
          save_clip_frames(clip.frames, clip.fps, out_dir + "/" + video_rel);
        } catch (const std::runtime_error& e) {
          throw IoFailure(e.what());
        }

        ManifestRow row;
        row.utt_id = utt_id;
        row.audio_path = audio_rel;
        row.video_path = video_rel;
        row.text = text;
        row.speaker_id = spk_id;
        row.language = textfront::to_string(lang);
        rows.push_back(std::move(row));
      }
    }
  }
  save_manifest(rows, out_dir + "/manifest.tsv");
  return rows;
}

void save_manifest(const std::vector<ManifestRow>& rows, const std::string& path) {
  std::string out;
  for (const auto& r : rows) {
    out += r.utt_id + "\t" + r.audio_path + "\t" + r.video_path + "\t" + r.text + "\t" +
           r.speaker_id + "\t" + r.language + "\n";
  }
  try {
    write_text_file(path, out);
  } catch (const std::runtime_error& e) {
    throw IoFailure(e.what());
  }
}

std::vector<ManifestRow> load_manifest(const std::string& manifest_path) {
  std::istringstream in(read_text_file(manifest_path));
  std::vector<ManifestRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    size_t pos = 0;
    while (true) {
      const size_t tab = line.find('\t', pos);
      cols.push_back(line.substr(pos, tab == std::string::npos ? tab : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (cols.size() != 6)
      throw std::runtime_error("manifest row needs 6 columns: " + line);
    rows.push_back({cols[0], cols[1], cols[2], cols[3], cols[4], cols[5]});
  }
  return rows;
}

}  // namespace polydub::toydata
