#pragma once

#include <string>
#include <vector>

#include "polydub/audio/audio.hpp"
#include "polydub/facecrop/facecrop.hpp"
#include "polydub/image.hpp"
#include "polydub/textfront/textfront.hpp"

namespace polydub::toydata {

struct IoFailure : std::runtime_error {
  explicit IoFailure(const std::string& what) : std::runtime_error(what) {}
};

struct ToySpec {
  int n_speakers = 4;
  std::vector<textfront::Lang> languages = {textfront::Lang::ko, textfront::Lang::en};
  int utterances_per_speaker = 5;
  uint64_t seed = 1;
  int fps = 25;            // fixed by contract
  int sample_rate = 22050; // fixed by contract
  int frame_h = 120;
  int frame_w = 160;

  void validate() const;
};

// One rendered talking-head clip plus its analytic annotations.
struct FaceClip {
  std::vector<image::Image> frames;
  std::vector<facecrop::LandmarkSet> landmarks;
  std::vector<float> mouth_heights;  // pixels, one per frame
  int fps = 25;
};

struct ManifestRow {
  std::string utt_id;
  std::string audio_path;  // relative to the manifest directory
  std::string video_path;
  std::string text;
  std::string speaker_id;
  std::string language;
};

// Fixed-duration harmonic tone per phoneme; pitch keyed by speaker_seed,
// harmonic pattern keyed by the phoneme symbol. Boundary/silence symbols
// render as silence. Every phoneme spans a whole number of video frames.
audio::Waveform render_voice(const textfront::PhonemeSequence& phonemes,
                             uint64_t speaker_seed);

// Stylized face whose mouth opening tracks per-frame audio RMS; landmarks are
// returned analytically.
FaceClip render_face_clip(const audio::Waveform& audio, uint64_t identity_seed,
                          int frame_h = 120, int frame_w = 160);

std::vector<ManifestRow> build_corpus(const ToySpec& spec, const std::string& out_dir);

std::vector<ManifestRow> load_manifest(const std::string& manifest_path);
void save_manifest(const std::vector<ManifestRow>& rows, const std::string& path);

// Frame-store helpers: numbered PPM frames plus an fps sidecar.
void save_clip_frames(const std::vector<image::Image>& frames, int fps,
                      const std::string& dir);
std::pair<std::vector<image::Image>, int> load_clip_frames(const std::string& dir);

// Landmark detection for toy-rendered frames (the renderer's inverse).
// Registered in the facecrop provider registry as "synthetic".
facecrop::LandmarkSet synthetic_landmarks(const image::Image& frame);
void register_builtin_landmark_provider();

// Deterministic per-language text pool used by the corpus builder.
std::string sample_text(textfront::Lang lang, Rng& rng);

}  // namespace polydub::toydata
