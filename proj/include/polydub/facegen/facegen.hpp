#pragma once

#include <memory>
#include <string>
#include <vector>

#include "polydub/audio/audio.hpp"
#include "polydub/image.hpp"
#include "polydub/nn/adam.hpp"
#include "polydub/nn/layers.hpp"
#include "polydub/syncexpert/syncexpert.hpp"

namespace polydub::facegen {

struct ShapeMismatch : std::runtime_error {
  explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct ParamOutOfRange : std::runtime_error {
  explicit ParamOutOfRange(const std::string& what) : std::runtime_error(what) {}
};

struct ClipTooShort : std::runtime_error {
  explicit ClipTooShort(const std::string& what) : std::runtime_error(what) {}
};

struct InsufficientAudio : std::runtime_error {
  explicit InsufficientAudio(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteLoss : std::runtime_error {
  std::string term;
  explicit NonFiniteLoss(const std::string& which)
      : std::runtime_error("non-finite facegen loss term: " + which), term(which) {}
};

struct FacegenConfig {
  int face_size = 64;  // S
  int base_channels = 10;
  int audio_dim = 32;
  int mel_bins = 40;
  int mel_window = 17;  // mel frames feeding each video frame
  int disc_channels = 12;
  int n_disc_scales = 2;  // must be 3 when face_size >= 256
  float w_sync = 0.03f;
  float w_adv = 0.07f;
  float lr = 2e-3f;
  uint64_t seed = 99;

  void validate() const;
};

// Pose source (lower half masked) plus an identity frame from elsewhere.
struct GenInput {
  image::Image reference;
  image::Image identity;
};

struct AugmentParams {
  float dx = 0.0f, dy = 0.0f;  // pixels
  float angle = 0.0f;          // degrees
  float zoom = 1.0f;
};

// Affine warp with border replication; identity parameters return the input
// bit-exactly. Bounds: |dx|,|dy| <= 0.1*S, |angle| <= 15, zoom in [0.85,1.15].
image::Image augment(const image::Image& frame, const AugmentParams& p);

// Index of a frame usable as an out-of-sync negative: differs from
// target_index by at least 5 frames. Throws ClipTooShort when none exists.
int sample_negative_index(int clip_len, int target_index, Rng& rng);
image::Image sample_negative(const std::vector<image::Image>& clip, int target_index,
                             Rng& rng);

// Zeroes the lower half (rows S/2..S).
image::Image mask_lower_half(const image::Image& frame);

struct FacegenLosses {
  float l1 = 0.0f;
  float sync = 0.0f;
  float adv_g = 0.0f;
  float adv_d = 0.0f;
  float total_g = 0.0f;
};

// One training sample: a window of consecutive target frames with their
// generator inputs, plus the utterance mel.
struct TrainingWindow {
  std::vector<GenInput> inputs;
  std::vector<image::Image> targets;
  audio::MelSpectrogram mel;
  int start_frame = 0;
};

class FacegenModel {
 public:
  explicit FacegenModel(FacegenConfig cfg);

  const FacegenConfig& config() const { return cfg_; }

  // How many video frames a mel of t frames can drive.
  int frames_for_mel(int mel_t) const;

  // One causal feature row per video frame.
  nn::Tensor audio_encode(const audio::MelSpectrogram& mel) const;

  std::vector<image::Image> generate_frames(const std::vector<GenInput>& inputs,
                                            const audio::MelSpectrogram& mel) const;

  // Differentiable single-frame path used by training.
  nn::Tensor generate_frame_tensor(const nn::Tensor& ref, const nn::Tensor& ident,
                                   const nn::Tensor& audio_feat_row) const;

  // Patch score maps at each scale (1x, then average-pooled halvings).
  std::vector<nn::Tensor> multiscale_disc(const nn::Tensor& frame) const;

  // Builds the generator loss graph without updating parameters; exposed so
  // gradients can be checked against finite differences.
  nn::Tensor training_loss(const TrainingWindow& window,
                           const syncexpert::SyncExpert& expert,
                           const AugmentParams& aug, FacegenLosses* breakdown) const;

  FacegenLosses training_step(const TrainingWindow& window,
                              const syncexpert::SyncExpert& expert);

  std::vector<nn::Tensor> generator_parameters() const;
  std::vector<nn::Tensor> discriminator_parameters() const;

  void save(const std::string& path) const;
  static std::unique_ptr<FacegenModel> load(const std::string& path);

 private:
  nn::Tensor build_generator_graph(const TrainingWindow& window,
                                   const syncexpert::SyncExpert& expert,
                                   const AugmentParams& aug, FacegenLosses* breakdown,
                                   std::vector<nn::Tensor>* out_gens,
                                   std::vector<image::Image>* out_reals) const;
  nn::Tensor disc_loss(const std::vector<image::Image>& reals,
                       const std::vector<nn::Tensor>& fakes) const;

  FacegenConfig cfg_;
  nn::ParamStore gen_params_;
  nn::ParamStore disc_params_;

  nn::Conv1d aud_conv1_, aud_conv2_;
  nn::Linear aud_proj_;
  nn::GruCell aud_gru_;

  nn::Conv2d enc1_, enc2_, enc3_, enc4_;
  nn::Conv2d fuse_;
  nn::ConvT2d dec1_, dec2_, dec3_, dec4_;
  nn::Conv2d out_conv_;

  struct Disc {
    nn::Conv2d c1, c2, c3, head;
  };
  std::vector<Disc> discs_;

  std::unique_ptr<nn::Adam> opt_g_, opt_d_;
  mutable Rng train_rng_;
};

}  // namespace polydub::facegen
