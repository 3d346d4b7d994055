#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "polydub/facecrop/facecrop.hpp"
#include "polydub/facegen/facegen.hpp"
#include "polydub/syncexpert/syncexpert.hpp"
#include "polydub/toydata/toydata.hpp"
#include "polydub/tts/tts.hpp"

namespace polydub::pipeline {

struct InvalidRequest : std::runtime_error {
  explicit InvalidRequest(const std::string& what) : std::runtime_error(what) {}
};

struct EncoderUnavailable : std::runtime_error {
  EncoderUnavailable()
      : std::runtime_error("mp4 requested but no external encoder is registered") {}
};

// Module errors crossing a stage boundary are rethrown with the stage name.
struct StageError : std::runtime_error {
  std::string stage;
  StageError(const std::string& stage_, const std::string& what)
      : std::runtime_error("[" + stage_ + "] " + what), stage(stage_) {}
};

struct DubRequest {
  std::string text;
  textfront::Lang language = textfront::Lang::ko;
  std::string speaker_id;
  std::string source_video_id;
  std::optional<textfront::Lang> translate_from;
};

struct StageTiming {
  std::string stage;
  double seconds_per_second = 0.0;  // wall seconds per 1 s of output
  double rtf = 0.0;                 // == seconds_per_second
};

struct StageTimingReport {
  std::vector<StageTiming> stages;  // preprocess, tts, facegen, merge, encode
  double output_seconds = 0.0;
  double end_to_end_rtf = 0.0;

  std::string to_tsv() const;
  double stage_rtf(const std::string& name) const;
};

struct SourceVideoEntry {
  std::string video_id;
  std::vector<image::Image> frames;
  std::vector<facecrop::CropGeometry> geometry;  // precomputed at registration
  int fps = 25;

  uint64_t geometry_checksum() const;
};

struct DubResult {
  std::string artifact_path;  // directory (image_sequence) or file (mp4)
  bool substitution = false;
  double audio_seconds = 0.0;
  int n_frames = 0;
  StageTimingReport report;
};

struct PipelineConfig {
  facecrop::CropConfig crop;
  std::string landmark_provider = "synthetic";
  std::string container = "image_sequence";  // or "mp4"
  int blend_margin = 4;
};

using Clock = std::function<double()>;
using EncoderInvoker = std::function<int(const std::vector<std::string>&)>;

class DubPipeline {
 public:
  explicit DubPipeline(PipelineConfig cfg = {});

  void set_tts(std::unique_ptr<tts::TtsModel> model);
  void set_facegen(std::unique_ptr<facegen::FacegenModel> model);
  const tts::TtsModel* tts_model() const { return tts_.get(); }
  const facegen::FacegenModel* facegen_model() const { return facegen_.get(); }
  const PipelineConfig& config() const { return cfg_; }

  // Landmarks and crop geometry are computed and cached per frame.
  const SourceVideoEntry& register_source_video(const std::string& video_id,
                                                std::vector<image::Image> frames,
                                                int fps);
  const SourceVideoEntry& register_source_video_dir(const std::string& video_id,
                                                    const std::string& clip_dir);
  const SourceVideoEntry* find_source(const std::string& video_id) const;

  DubResult dub(const DubRequest& req, const std::string& out_dir);

  // Median-of-repetitions per stage after one discarded warm-up run.
  StageTimingReport bench(const std::vector<DubRequest>& reqs, int repetitions,
                          const std::string& work_dir);

  // External media encoder adapter. Template placeholders: {frames_dir},
  // {frame_pattern}, {fps}, {audio}, {out}.
  void set_mp4_encoder(std::vector<std::string> arg_template, EncoderInvoker invoker);
  bool mp4_encoder_registered() const { return static_cast<bool>(mp4_invoker_); }

  void set_clock(Clock clock) { clock_ = std::move(clock); }

  std::string encode_video(const std::vector<image::Image>& frames,
                           const audio::Waveform& wave, const std::string& container,
                           const std::string& out_dir, int fps);

 private:
  PipelineConfig cfg_;
  std::unique_ptr<tts::TtsModel> tts_;
  std::unique_ptr<facegen::FacegenModel> facegen_;
  std::map<std::string, SourceVideoEntry> sources_;
  std::vector<std::string> mp4_template_;
  EncoderInvoker mp4_invoker_;
  Clock clock_;
};

// Ping-pong (forward-backward) index for looping source frames.
int pingpong_index(int t, int n);

// Key-value config file: one `key = value` per line, '#' comments.
class KvConfig {
 public:
  static KvConfig load(const std::string& path);
  static KvConfig parse(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_float(const std::string& key, double fallback) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace polydub::pipeline
