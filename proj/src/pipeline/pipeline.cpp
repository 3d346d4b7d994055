#include "polydub/pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "polydub/common.hpp"

namespace polydub::pipeline {

namespace fs = std::filesystem;
using textfront::Lang;

namespace {

double steady_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  if (n == 0) return 0.0;
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string StageTimingReport::to_tsv() const {
  std::ostringstream os;
  os << "stage\tseconds_per_second\trtf\n";
  for (const auto& s : stages)
    os << s.stage << "\t" << s.seconds_per_second << "\t" << s.rtf << "\n";
  return os.str();
}

double StageTimingReport::stage_rtf(const std::string& name) const {
  for (const auto& s : stages)
    if (s.stage == name) return s.rtf;
  throw std::out_of_range("no stage named " + name);
}

uint64_t SourceVideoEntry::geometry_checksum() const {
  std::string blob;
  for (const auto& g : geometry) {
    blob += std::to_string(g.x0) + "," + std::to_string(g.y0) + "," +
            std::to_string(g.side) + "," + (g.clamped ? "c" : "-") + ";";
  }
  return fnv1a64(blob);
}

int pingpong_index(int t, int n) {
  if (n <= 1) return 0;
  const int period = 2 * (n - 1);
  const int m = t % period;
  return m < n ? m : period - m;
}

DubPipeline::DubPipeline(PipelineConfig cfg)
    : cfg_(std::move(cfg)), clock_(steady_seconds) {
  toydata::register_builtin_landmark_provider();
}

void DubPipeline::set_tts(std::unique_ptr<tts::TtsModel> model) {
  tts_ = std::move(model);
}

void DubPipeline::set_facegen(std::unique_ptr<facegen::FacegenModel> model) {
  facegen_ = std::move(model);
}

const SourceVideoEntry& DubPipeline::register_source_video(
    const std::string& video_id, std::vector<image::Image> frames, int fps) {
  if (fps != 25)
    throw std::invalid_argument("register_source_video: frames must be 25 fps");
  if (frames.empty())
    throw std::invalid_argument("register_source_video: empty clip");
  SourceVideoEntry entry;
  entry.video_id = video_id;
  entry.fps = fps;
  std::vector<facecrop::CropGeometry> raw;
  for (size_t i = 0; i < frames.size(); ++i) {
    try {
      auto lm = facecrop::detect_landmarks(frames[i], cfg_.landmark_provider);
      raw.push_back(facecrop::expand_region(lm, frames[i].w, frames[i].h, cfg_.crop));
    } catch (const facecrop::NoFaceFound& e) {
      throw facecrop::NoFaceFound("no face found in frame " + std::to_string(i) +
                                  " of source video " + video_id);
    }
  }
  entry.geometry = cfg_.crop.smooth_geometry
                       ? facecrop::smooth_geometries(raw, cfg_.crop.smooth_alpha)
                       : raw;
  entry.frames = std::move(frames);
  auto [it, _] = sources_.insert_or_assign(video_id, std::move(entry));
  return it->second;
}

const SourceVideoEntry& DubPipeline::register_source_video_dir(
    const std::string& video_id, const std::string& clip_dir) {
  auto [frames, fps] = toydata::load_clip_frames(clip_dir);
  return register_source_video(video_id, std::move(frames), fps);
}

const SourceVideoEntry* DubPipeline::find_source(const std::string& video_id) const {
  auto it = sources_.find(video_id);
  return it == sources_.end() ? nullptr : &it->second;
}

void DubPipeline::set_mp4_encoder(std::vector<std::string> arg_template,
                                  EncoderInvoker invoker) {
  mp4_template_ = std::move(arg_template);
  mp4_invoker_ = std::move(invoker);
}

std::string DubPipeline::encode_video(const std::vector<image::Image>& frames,
                                      const audio::Waveform& wave,
                                      const std::string& container,
                                      const std::string& out_dir, int fps) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  const std::string frames_dir = out_dir + "/frames";
  fs::create_directories(frames_dir, ec);
  toydata::save_clip_frames(frames, fps, frames_dir);
  const std::string wav_path = out_dir + "/audio.wav";
  audio::write_wav(wav_path, wave);

  if (container == "image_sequence") return out_dir;
  if (container != "mp4")
    throw std::invalid_argument("unknown container: " + container);
  if (!mp4_invoker_) throw EncoderUnavailable();

  const std::string out_path = out_dir + "/video.mp4";
  std::vector<std::string> args;
  for (const auto& a : mp4_template_) {
    std::string arg = a;
    auto sub = [&](const std::string& key, const std::string& value) {
      size_t pos;
      while ((pos = arg.find(key)) != std::string::npos)
        arg.replace(pos, key.size(), value);
    };
    sub("{frames_dir}", frames_dir);
    sub("{frame_pattern}", frames_dir + "/%06d.ppm");
    sub("{fps}", std::to_string(fps));
    sub("{audio}", wav_path);
    sub("{out}", out_path);
    args.push_back(std::move(arg));
  }
  const int rc = mp4_invoker_(args);
  if (rc != 0)
    throw std::runtime_error("external encoder failed with status " + std::to_string(rc));
  return out_path;
}

DubResult DubPipeline::dub(const DubRequest& req, const std::string& out_dir) {
  if (!tts_ || !facegen_) throw tts::ModelNotLoaded();
  const SourceVideoEntry* source = find_source(req.source_video_id);
  if (!source) throw InvalidRequest("unknown source video: " + req.source_video_id);
  const int spk = tts_->speaker_index(req.speaker_id);
  if (spk < 0) throw InvalidRequest("unknown speaker: " + req.speaker_id);

  DubResult result;
  StageTimingReport& report = result.report;
  const double t_begin = clock_();

  // --- preprocess ---
  double t0 = clock_();
  textfront::PhonemeSequence seq;
  try {
    std::string text = req.text;
    if (req.translate_from && *req.translate_from != req.language)
      text = textfront::translate(text, *req.translate_from, req.language);
    const std::string cleaned = textfront::clean_text(text, req.language);
    if (cleaned.empty())
      throw InvalidRequest("request text is empty after cleaning");
    seq = textfront::text_to_ids(text, req.language);
  } catch (const InvalidRequest&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("preprocess", e.what());
  }
  const double t_preprocess = clock_() - t0;

  // --- tts ---
  t0 = clock_();
  audio::Waveform wave;
  tts::InferenceTrace trace;
  try {
    wave = tts_->synthesize(seq, req.language, tts_->speaker(spk), &trace);
  } catch (const std::exception& e) {
    throw StageError("tts", e.what());
  }
  if (wave.samples.empty()) throw InvalidRequest("synthesized audio is empty");
  const double t_tts = clock_() - t0;
  result.substitution = trace.substitution;
  result.audio_seconds = wave.seconds();

  // --- facegen ---
  t0 = clock_();
  std::vector<image::Image> faces;
  std::vector<int> src_indices;
  const int S = facegen_->config().face_size;
  try {
    const int n_frames = static_cast<int>(std::llround(result.audio_seconds * 25.0));
    // duration rounding can ask for one more frame than the raw mel covers;
    // trailing silence in the analysis copy keeps the final window defined
    const int hop = tts_->config().hop_length;
    const double mel_per_video =
        static_cast<double>(tts_->config().sample_rate) / 25.0 / hop;
    const size_t needed_samples = static_cast<size_t>(
        std::max<long long>(0, (static_cast<long long>(
                                    std::ceil(n_frames * mel_per_video)) -
                                1) *
                                   hop));
    audio::Waveform analysis = wave;
    if (analysis.samples.size() < needed_samples)
      analysis.samples.resize(needed_samples, 0.0f);
    const auto mel = audio::mel_spectrogram(analysis, tts_->mel_basis());
    const int n_src = static_cast<int>(source->frames.size());
    std::vector<facegen::GenInput> inputs;
    for (int t = 0; t < n_frames; ++t) {
      const int si = pingpong_index(t, n_src);
      src_indices.push_back(si);
      facegen::GenInput in;
      in.reference =
          facecrop::crop(source->frames[static_cast<size_t>(si)],
                         source->geometry[static_cast<size_t>(si)], S);
      const int ii = pingpong_index(t + n_src / 2 + 3, n_src);
      in.identity = facecrop::crop(source->frames[static_cast<size_t>(ii)],
                                   source->geometry[static_cast<size_t>(ii)], S);
      inputs.push_back(std::move(in));
    }
    faces = facegen_->generate_frames(inputs, mel);
  } catch (const std::exception& e) {
    throw StageError("facegen", e.what());
  }
  result.n_frames = static_cast<int>(faces.size());
  const double t_facegen = clock_() - t0;

  // --- merge ---
  t0 = clock_();
  std::vector<image::Image> merged;
  try {
    merged.reserve(faces.size());
    for (size_t t = 0; t < faces.size(); ++t) {
      const int si = src_indices[t];
      image::Image frame = source->frames[static_cast<size_t>(si)];
      facecrop::paste_back(frame, faces[t], source->geometry[static_cast<size_t>(si)],
                           cfg_.blend_margin);
      merged.push_back(std::move(frame));
    }
  } catch (const std::exception& e) {
    throw StageError("merge", e.what());
  }
  const double t_merge = clock_() - t0;

  // --- encode ---
  t0 = clock_();
  try {
    result.artifact_path = encode_video(merged, wave, cfg_.container, out_dir, 25);
  } catch (const EncoderUnavailable&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("encode", e.what());
  }
  const double t_encode = clock_() - t0;
  const double t_total = clock_() - t_begin;

  const double out_sec = std::max(result.audio_seconds, 1e-9);
  report.output_seconds = result.audio_seconds;
  report.stages = {
      {"preprocess", t_preprocess / out_sec, t_preprocess / out_sec},
      {"tts", t_tts / out_sec, t_tts / out_sec},
      {"facegen", t_facegen / out_sec, t_facegen / out_sec},
      {"merge", t_merge / out_sec, t_merge / out_sec},
      {"encode", t_encode / out_sec, t_encode / out_sec},
  };
  report.end_to_end_rtf = t_total / out_sec;

  write_text_file(out_dir + "/report.tsv", report.to_tsv());
  return result;
}

StageTimingReport DubPipeline::bench(const std::vector<DubRequest>& reqs,
                                     int repetitions, const std::string& work_dir) {
  if (reqs.empty()) throw std::invalid_argument("bench: no requests");
  if (repetitions < 1) throw std::invalid_argument("bench: repetitions must be >= 1");

  // one discarded warm-up run
  dub(reqs[0], work_dir + "/warmup");

  static const char* kStages[] = {"preprocess", "tts", "facegen", "merge", "encode"};
  std::map<std::string, std::vector<double>> samples;
  std::vector<double> e2e;
  double out_seconds = 0.0;
  for (int rep = 0; rep < repetitions; ++rep) {
    for (size_t r = 0; r < reqs.size(); ++r) {
      auto res = dub(reqs[r], work_dir + "/rep" + std::to_string(rep) + "_" +
                                  std::to_string(r));
      for (const auto& s : res.report.stages) samples[s.stage].push_back(s.rtf);
      e2e.push_back(res.report.end_to_end_rtf);
      out_seconds = res.report.output_seconds;
    }
  }
  StageTimingReport agg;
  agg.output_seconds = out_seconds;
  for (const char* name : kStages) {
    const double m = median(samples[name]);
    agg.stages.push_back({name, m, m});
  }
  agg.end_to_end_rtf = median(e2e);
  return agg;
}

KvConfig KvConfig::parse(const std::string& text) {
  KvConfig cfg;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.erase(s.begin());
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.pop_back();
      return s;
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) cfg.values_[key] = value;
  }
  return cfg;
}

KvConfig KvConfig::load(const std::string& path) {
  return parse(read_text_file(path));
}

std::string KvConfig::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

long long KvConfig::get_int(const std::string& key, long long fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : std::stoll(it->second);
}

double KvConfig::get_float(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : std::stod(it->second);
}

}  // namespace polydub::pipeline
