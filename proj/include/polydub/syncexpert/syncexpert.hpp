#pragma once

#include <memory>
#include <string>
#include <vector>

#include "polydub/audio/audio.hpp"
#include "polydub/image.hpp"
#include "polydub/nn/adam.hpp"
#include "polydub/nn/layers.hpp"

namespace polydub::syncexpert {

struct ShapeMismatch : std::runtime_error {
  explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidNegativeOffset : std::runtime_error {
  explicit InvalidNegativeOffset(int shift)
      : std::runtime_error("negative must shift audio by at least 4 frames, got " +
                           std::to_string(shift)) {}
};

struct SyncConfig {
  int face_size = 64;     // S; visual input is the lower half, S/2 x S
  int window_frames = 5;  // 0.2 s at 25 fps
  int mel_frames = 17;    // the mel span of 0.2 s (hop 256 at 22050 Hz)
  int mel_bins = 40;
  int embed_dim = 64;
  float lr = 2e-3f;
  uint64_t seed = 31;
};

// Five consecutive lower-half face crops and the time-aligned mel chunk.
struct SyncWindow {
  std::vector<image::Image> frames;  // window_frames images, (S/2) x S x 3
  std::vector<float> mel;            // row-major [mel_frames x mel_bins]
};

class SyncExpert {
 public:
  explicit SyncExpert(SyncConfig cfg);

  const SyncConfig& config() const { return cfg_; }

  // Both embeddings are L2-normalized.
  std::pair<nn::Tensor, nn::Tensor> embed_pair(const SyncWindow& w) const;
  float cosine(const SyncWindow& w) const;

  // Differentiable towers for generator supervision; stacked is
  // [window_frames*3, S/2, S], mel_chunk is [mel_frames, mel_bins].
  nn::Tensor vis_embed(const nn::Tensor& stacked) const;
  nn::Tensor aud_embed(const nn::Tensor& mel_chunk) const;

  // Frozen experts pass no gradient into their own parameters.
  void set_frozen(bool frozen);
  bool frozen() const { return frozen_; }

  std::vector<nn::Tensor> parameters() const { return params_.tensors(); }

  void save(const std::string& path) const;
  static std::unique_ptr<SyncExpert> load(const std::string& path);

 private:
  SyncConfig cfg_;
  bool frozen_ = false;
  nn::ParamStore params_;
  nn::Conv2d vis1_, vis2_, vis3_;
  nn::Linear vis_out_;
  nn::Conv1d aud1_, aud2_;
  nn::Linear aud_out_;
};

// Binary cross-entropy on s = (cos(v, a) + 1) / 2.
nn::Tensor sync_loss(const nn::Tensor& v_emb, const nn::Tensor& a_emb, bool in_sync);

// Mel rows spanning the window that starts at video frame `video_frame`,
// with the audio shifted by `shift_frames` video frames (0 for positives).
std::vector<float> mel_chunk_for_window(const audio::MelSpectrogram& mel,
                                        int video_frame, int shift_frames,
                                        const SyncConfig& cfg);

// Builds a window from full face crops (S x S); audio shift must be 0 for a
// positive pair and |shift| >= 4 for a negative.
SyncWindow make_window(const std::vector<image::Image>& face_crops,
                       const audio::MelSpectrogram& mel, int start_frame,
                       int shift_frames, const SyncConfig& cfg);

struct TrainStats {
  float loss = 0.0f;
  int steps = 0;
};

// Clip = full face crops plus the utterance mel.
struct SyncClip {
  std::vector<image::Image> crops;  // S x S face crops, 25 fps
  audio::MelSpectrogram mel;
};

// Trains on positives (shift 0) and negatives (|shift| >= 4) sampled from the
// clips; returns the mean loss of the final 50 steps.
TrainStats train_expert(SyncExpert& expert, const std::vector<SyncClip>& clips,
                        int steps, int batch_size, uint64_t seed);

// Mean cos(in-sync) - mean cos(off-sync) over sampled evaluation pairs.
float separation(const SyncExpert& expert, const std::vector<SyncClip>& clips,
                 int n_pairs, uint64_t seed);

}  // namespace polydub::syncexpert
