#pragma once

#include <memory>
#include <string>
#include <vector>

#include "polydub/pipeline/pipeline.hpp"

namespace polydub::pipeline {

// A corpus utterance prepared for the visual trainers: face crops at model
// resolution plus the utterance audio and mel.
struct PreparedClip {
  std::vector<image::Image> crops;
  audio::Waveform wave;
  audio::MelSpectrogram mel;
  toydata::ManifestRow row;
};

std::vector<PreparedClip> prepare_clips(const std::string& corpus_dir,
                                        const std::vector<toydata::ManifestRow>& rows,
                                        int face_size, const audio::MelBasis& basis,
                                        const facecrop::CropConfig& crop_cfg = {});

// Speakers appearing in a corpus manifest, native language from the rows.
std::vector<tts::SpeakerProfile> speakers_from_manifest(
    const std::vector<toydata::ManifestRow>& rows);

struct TtsTrainOptions {
  int steps = 500;
  int batch_size = 2;
  bool verbose = false;
};

// Deterministic round-robin training over the corpus manifest.
std::unique_ptr<tts::TtsModel> train_tts_from_corpus(const std::string& corpus_dir,
                                                     const tts::TtsConfig& cfg,
                                                     const TtsTrainOptions& opt,
                                                     std::vector<tts::LossBreakdown>* history = nullptr);

std::unique_ptr<syncexpert::SyncExpert> train_sync_from_corpus(
    const std::string& corpus_dir, const syncexpert::SyncConfig& cfg, int steps,
    int batch_size, uint64_t seed);

struct FacegenTrainOptions {
  int steps = 2000;
  uint64_t seed = 7;
  bool verbose = false;
  // restrict training to manifest row indices (empty = all)
  std::vector<int> clip_indices;
};

std::unique_ptr<facegen::FacegenModel> train_facegen_from_corpus(
    const std::string& corpus_dir, const facegen::FacegenConfig& cfg,
    const syncexpert::SyncExpert& expert, const FacegenTrainOptions& opt,
    std::vector<facegen::FacegenLosses>* history = nullptr);

// Deterministic training-window sampler shared by trainers and tests.
facegen::TrainingWindow sample_training_window(const PreparedClip& clip,
                                               int window_frames, Rng& rng);

}  // namespace polydub::pipeline
