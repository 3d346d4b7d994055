#include "polydub/audio/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "polydub/common.hpp"

namespace polydub::audio {

namespace {

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  b.push_back(v & 0xFF);
  b.push_back((v >> 8) & 0xFF);
  b.push_back((v >> 16) & 0xFF);
  b.push_back((v >> 24) & 0xFF);
}

void put_u16(std::vector<uint8_t>& b, uint16_t v) {
  b.push_back(v & 0xFF);
  b.push_back((v >> 8) & 0xFF);
}

uint32_t get_u32(const std::vector<uint8_t>& b, size_t off) {
  return static_cast<uint32_t>(b[off]) | (static_cast<uint32_t>(b[off + 1]) << 8) |
         (static_cast<uint32_t>(b[off + 2]) << 16) |
         (static_cast<uint32_t>(b[off + 3]) << 24);
}

uint16_t get_u16(const std::vector<uint8_t>& b, size_t off) {
  return static_cast<uint16_t>(b[off]) | (static_cast<uint16_t>(b[off + 1]) << 8);
}

}  // namespace

void write_wav(const std::string& path, const Waveform& w) {
  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  const uint32_t data_bytes = n * 2;
  std::vector<uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<uint32_t>(w.sample_rate));
  put_u32(out, static_cast<uint32_t>(w.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (float s : w.samples) {
    const float c = std::clamp(s, -1.0f, 1.0f);
    const int16_t q = static_cast<int16_t>(std::lrint(c * 32767.0f));
    out.push_back(static_cast<uint8_t>(q & 0xFF));
    out.push_back(static_cast<uint8_t>((q >> 8) & 0xFF));
  }
  write_binary_file(path, out);
}

Waveform read_wav(const std::string& path) {
  auto b = read_binary_file(path);
  if (b.size() < 44 || std::memcmp(b.data(), "RIFF", 4) != 0 ||
      std::memcmp(b.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error("not a WAV file: " + path);
  Waveform w;
  size_t pos = 12;
  uint16_t channels = 1, bits = 16;
  bool got_fmt = false;
  while (pos + 8 <= b.size()) {
    const char* id = reinterpret_cast<const char*>(b.data() + pos);
    const uint32_t len = get_u32(b, pos + 4);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      channels = get_u16(b, pos + 10);
      w.sample_rate = static_cast<int>(get_u32(b, pos + 12));
      bits = get_u16(b, pos + 22);
      got_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!got_fmt || channels != 1 || bits != 16)
        throw std::runtime_error("unsupported WAV layout (need 16-bit mono): " + path);
      const size_t n = len / 2;
      w.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        const int16_t q = static_cast<int16_t>(
            static_cast<uint16_t>(b[pos + 8 + 2 * i]) |
            (static_cast<uint16_t>(b[pos + 8 + 2 * i + 1]) << 8));
        w.samples[i] = static_cast<float>(q) / 32767.0f;
      }
      return w;
    }
    pos += 8 + len + (len & 1);
  }
  throw std::runtime_error("WAV data chunk missing: " + path);
}

namespace {

float hz_to_mel(float hz) { return 2595.0f * std::log10(1.0f + hz / 700.0f); }
float mel_to_hz(float mel) { return 700.0f * (std::pow(10.0f, mel / 2595.0f) - 1.0f); }

}  // namespace

MelBasis::MelBasis(const MelConfig& cfg) : cfg_(cfg) {
  if (cfg_.fmax <= 0.0f) cfg_.fmax = static_cast<float>(cfg_.sample_rate) / 2.0f;
  n_freqs_ = cfg_.n_fft / 2 + 1;
  const int win = cfg_.win_length;

  window_ = nn::Tensor::zeros({win});
  for (int i = 0; i < win; ++i)
    window_.data()[static_cast<size_t>(i)] =
        0.5f * (1.0f - std::cos(2.0f * static_cast<float>(M_PI) * i / win));

  dft_cos_ = nn::Tensor::zeros({win, n_freqs_});
  dft_sin_ = nn::Tensor::zeros({win, n_freqs_});
  for (int i = 0; i < win; ++i) {
    for (int k = 0; k < n_freqs_; ++k) {
      const double ang = 2.0 * M_PI * i * k / cfg_.n_fft;
      dft_cos_.data()[static_cast<size_t>(i) * n_freqs_ + k] = static_cast<float>(std::cos(ang));
      dft_sin_.data()[static_cast<size_t>(i) * n_freqs_ + k] = static_cast<float>(-std::sin(ang));
    }
  }

  mel_fb_ = nn::Tensor::zeros({n_freqs_, cfg_.n_mels});
  const float mel_lo = hz_to_mel(cfg_.fmin), mel_hi = hz_to_mel(cfg_.fmax);
  std::vector<float> pts(static_cast<size_t>(cfg_.n_mels) + 2);
  for (int m = 0; m < cfg_.n_mels + 2; ++m)
    pts[static_cast<size_t>(m)] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (cfg_.n_mels + 1));
  for (int k = 0; k < n_freqs_; ++k) {
    const float hz = static_cast<float>(k) * cfg_.sample_rate / cfg_.n_fft;
    for (int m = 0; m < cfg_.n_mels; ++m) {
      const float lo = pts[static_cast<size_t>(m)], c = pts[static_cast<size_t>(m) + 1],
                  hi = pts[static_cast<size_t>(m) + 2];
      float v = 0.0f;
      if (hz > lo && hz < hi) v = hz <= c ? (hz - lo) / (c - lo) : (hi - hz) / (hi - c);
      mel_fb_.data()[static_cast<size_t>(k) * cfg_.n_mels + m] = v;
    }
  }
}

nn::Tensor MelBasis::compute_graph(const nn::Tensor& wave) const {
  using namespace nn;
  Tensor frames = frame_signal(wave, cfg_.win_length, cfg_.hop_length);  // [T, win]
  Tensor windows = mul(frames, window_);                                 // row-vec bcast
  Tensor re = matmul(windows, dft_cos_);                                 // [T, F]
  Tensor im = matmul(windows, dft_sin_);
  Tensor power = add(mul(re, re), mul(im, im));
  Tensor mel = matmul(power, mel_fb_);  // [T, n_mels]
  return log_(clamp_min(mel, 1e-5f));
}

std::vector<float> MelBasis::compute(const std::vector<float>& samples,
                                     int* out_frames) const {
  nn::Tensor wave = nn::Tensor::from({static_cast<int>(samples.size())},
                                     std::vector<float>(samples));
  nn::Tensor mel = compute_graph(wave);
  if (out_frames) *out_frames = mel.dim(0);
  return mel.data();
}

MelSpectrogram mel_spectrogram(const Waveform& w, const MelBasis& basis) {
  MelSpectrogram m;
  m.bins = basis.config().n_mels;
  m.sample_rate = w.sample_rate;
  m.hop_length = basis.config().hop_length;
  m.data = basis.compute(w.samples, &m.t);
  return m;
}

}  // namespace polydub::audio
