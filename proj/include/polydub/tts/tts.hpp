#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "polydub/audio/audio.hpp"
#include "polydub/checkpoint.hpp"
#include "polydub/nn/adam.hpp"
#include "polydub/nn/layers.hpp"
#include "polydub/textfront/textfront.hpp"
#include "polydub/tts/align.hpp"

namespace polydub::tts {

struct TtsConfig {
  int hidden_dim = 64;
  int n_text_layers = 2;
  int n_flow_steps = 2;
  int mel_bins = 40;
  int sample_rate = 22050;
  int hop_length = 256;
  float lambda_gamma = 10.0f;  // gradient-reversal lambda schedule steepness
  float reg_weight = 1e-3f;    // speaker-mean penalty weight
  float adv_weight = 0.02f;    // speaker-classifier loss weight
  // extra classifier-only refits per step; keeps the adversary near-optimal
  // so reversed gradients push toward merging rather than fleeing
  int adv_inner_steps = 4;

  int latent_dim = 16;
  int n_fft = 512;
  int win_length = 512;
  int segment_frames = 16;  // decoder training segment, in mel frames
  float mel_loss_weight = 45.0f;
  float lr = 2e-3f;
  uint64_t seed = 1234;

  void validate() const;
  audio::MelConfig mel_config() const;
};

// lambda(p) = 2 / (1 + exp(-gamma * p)) - 1, monotone on [0, 1].
float lambda_schedule(float progress, float gamma);

// Squared norm of the embedding centroid; gradient w.r.t. each row is
// (2/n) * centroid.
nn::Tensor speaker_mean_penalty(const nn::Tensor& all_embeddings);

struct SpeakerProfile {
  std::string speaker_id;
  std::vector<float> embedding;
  textfront::Lang native_language = textfront::Lang::ko;
};

struct TextEncoding {
  nn::Tensor hidden;  // [T, hidden_dim], masked rows are zero
  nn::Tensor mask;    // [T] of 0/1
  nn::Tensor mu_p;    // [T, latent]
  nn::Tensor logs_p;  // [T, latent]
  int t_text = 0;
};

struct InferenceTrace {
  bool substitution = false;  // zero vector replaced the speaker embedding
  std::vector<int> durations;
  int t_mel = 0;
};

struct Utterance {
  std::vector<int> ids;  // per-language inventory ids
  textfront::Lang lang = textfront::Lang::ko;
  int speaker_index = 0;
  audio::Waveform wave;
  audio::MelSpectrogram mel;
};

struct LossBreakdown {
  float recon_mel = 0.0f;
  float kl = 0.0f;
  float duration = 0.0f;
  float adversarial_speaker = 0.0f;
  float speaker_mean_reg = 0.0f;
  float total = 0.0f;
};

struct NonFiniteLoss : std::runtime_error {
  std::string term;
  explicit NonFiniteLoss(const std::string& which)
      : std::runtime_error("non-finite loss term: " + which), term(which) {}
};

struct ModelNotLoaded : std::runtime_error {
  ModelNotLoaded() : std::runtime_error("tts model not loaded") {}
};

class TtsModel {
 public:
  TtsModel(TtsConfig cfg, std::vector<SpeakerProfile> speakers);

  const TtsConfig& config() const { return cfg_; }
  int n_speakers() const { return static_cast<int>(speakers_.size()); }
  SpeakerProfile speaker(int index) const;
  int speaker_index(const std::string& id) const;  // -1 if absent
  const audio::MelBasis& mel_basis() const { return *mel_basis_; }

  TextEncoding encode_text(const std::vector<int>& ids, textfront::Lang lang) const;
  // Positive per-phoneme durations in mel frames; spk may be a zero vector.
  nn::Tensor predict_durations(const TextEncoding& enc, textfront::Lang lang,
                               const nn::Tensor& spk) const;
  // Logits over speakers from the masked mean of enc.hidden, behind a
  // gradient reversal scaled by lambda_val.
  nn::Tensor speaker_classifier(const TextEncoding& enc, float lambda_val) const;

  LossBreakdown training_step(const std::vector<Utterance>& batch, float progress);

  audio::Waveform synthesize(const textfront::PhonemeSequence& seq, textfront::Lang lang,
                             const SpeakerProfile& speaker, InferenceTrace* trace = nullptr) const;

  void save(const std::string& path) const;
  static std::unique_ptr<TtsModel> load(const std::string& path);

  nn::Tensor speaker_embeddings() const { return spk_emb_; }
  nn::Tensor language_embeddings() const { return lang_emb_; }

 private:
  nn::Tensor speaker_vector(int index) const;        // [1, hidden]
  nn::Tensor zero_speaker_vector() const;            // [1, hidden]
  std::pair<nn::Tensor, nn::Tensor> posterior(const audio::MelSpectrogram& mel) const;
  nn::Tensor flow_forward(const nn::Tensor& z, const nn::Tensor& g) const;
  nn::Tensor flow_inverse(const nn::Tensor& zp, const nn::Tensor& g) const;
  nn::Tensor decode(const nn::Tensor& z, const nn::Tensor& g) const;  // [M,L] -> wave
  nn::Tensor duration_log(const TextEncoding& enc, textfront::Lang lang,
                          const nn::Tensor& spk) const;  // [T] log-durations

  TtsConfig cfg_;
  std::vector<std::pair<std::string, textfront::Lang>> speakers_;
  std::vector<int> inv_offsets_;  // per language, into the shared embedding table
  int total_symbols_ = 0;

  nn::ParamStore params_;
  nn::Tensor phoneme_emb_;  // [V_total, hidden]
  nn::Tensor lang_emb_;     // [4, hidden]
  nn::Tensor spk_emb_;      // [n_speakers, hidden]

  std::vector<nn::Conv1d> enc_convs_;
  std::vector<nn::LayerNorm> enc_norms_;
  nn::Linear enc_proj_;  // hidden -> 2*latent

  nn::Linear dur_lang_proj_, dur_spk_proj_;
  nn::Conv1d dur_conv1_, dur_conv2_;
  nn::Linear dur_out_;

  nn::Conv1d post_conv1_, post_conv2_, post_proj_;

  struct Coupling {
    nn::Conv1d net1;
    nn::Conv1d net2;
    nn::Linear g_proj;
    bool swap_halves = false;
  };
  std::vector<Coupling> flow_;

  nn::Conv1d dec_pre_;
  nn::Linear dec_g_proj_;
  std::vector<nn::ConvT1d> dec_ups_;
  nn::Conv1d dec_post_;

  nn::Linear cls_hidden_, cls_out_, cls_linear_;

  std::unique_ptr<audio::MelBasis> mel_basis_;
  std::unique_ptr<nn::Adam> opt_;
  std::unique_ptr<nn::Adam> cls_opt_;
  mutable Rng train_rng_;
};

// Reconstructs utterances from a toy-corpus manifest (audio paths resolved
// relative to the manifest's directory).
std::vector<Utterance> load_training_manifest(const std::string& manifest_path,
                                              const TtsModel& model);

}  // namespace polydub::tts
