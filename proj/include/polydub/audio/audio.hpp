#pragma once

#include <string>
#include <vector>

#include "polydub/nn/ops.hpp"

namespace polydub::audio {

struct Waveform {
  std::vector<float> samples;  // [-1, 1]
  int sample_rate = 22050;

  double seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// 16-bit mono PCM.
void write_wav(const std::string& path, const Waveform& w);
Waveform read_wav(const std::string& path);

struct MelConfig {
  int sample_rate = 22050;
  int n_fft = 512;
  int win_length = 512;
  int hop_length = 256;
  int n_mels = 40;
  float fmin = 0.0f;
  float fmax = 0.0f;  // 0 -> sample_rate / 2
};

// Precomputed analysis constants: Hann window, DFT bases, mel filterbank.
// Shared by the plain and the autodiff mel paths so they agree.
class MelBasis {
 public:
  explicit MelBasis(const MelConfig& cfg);

  const MelConfig& config() const { return cfg_; }
  int n_freqs() const { return n_freqs_; }

  // Log-mel frames [T, n_mels], T = floor(N/hop)+1 (centered framing).
  std::vector<float> compute(const std::vector<float>& samples, int* out_frames) const;

  // Same computation as a differentiable graph over a 1-D wave tensor.
  nn::Tensor compute_graph(const nn::Tensor& wave) const;

 private:
  MelConfig cfg_;
  int n_freqs_;
  nn::Tensor window_;    // [win]
  nn::Tensor dft_cos_;   // [win, F]
  nn::Tensor dft_sin_;   // [win, F]
  nn::Tensor mel_fb_;    // [F, n_mels]
};

struct MelSpectrogram {
  std::vector<float> data;  // row-major [t, bins]
  int t = 0;
  int bins = 0;
  int sample_rate = 22050;
  int hop_length = 256;

  float at(int frame, int bin) const {
    return data[static_cast<size_t>(frame) * bins + bin];
  }
};

MelSpectrogram mel_spectrogram(const Waveform& w, const MelBasis& basis);

}  // namespace polydub::audio
