#include "polydub/syncexpert/syncexpert.hpp"

#include <algorithm>
#include <cmath>

#include "polydub/checkpoint.hpp"

namespace polydub::syncexpert {

using nn::Tensor;

SyncExpert::SyncExpert(SyncConfig cfg) : cfg_(cfg) {
  if (cfg_.face_size % 2 != 0 || cfg_.face_size < 16)
    throw std::invalid_argument("SyncConfig: bad face_size");
  Rng rng(cfg_.seed);
  const int vis_in = cfg_.window_frames * 3;
  vis1_ = nn::Conv2d(params_, "vis1", vis_in, 16, 3, 2, 1, rng);
  vis2_ = nn::Conv2d(params_, "vis2", 16, 32, 3, 2, 1, rng);
  vis3_ = nn::Conv2d(params_, "vis3", 32, 32, 3, 2, 1, rng);
  const int vh = cfg_.face_size / 2 / 8, vw = cfg_.face_size / 8;
  vis_out_ = nn::Linear(params_, "vis_out", 32 * vh * vw, cfg_.embed_dim, rng);
  aud1_ = nn::Conv1d(params_, "aud1", cfg_.mel_bins, 32, 3, 2, 1, rng);
  aud2_ = nn::Conv1d(params_, "aud2", 32, 32, 3, 2, 1, rng);
  const int at = (cfg_.mel_frames + 1) / 2;       // after stride 2
  const int at2 = (at + 1) / 2;                   // after second stride 2
  aud_out_ = nn::Linear(params_, "aud_out", 32 * at2, cfg_.embed_dim, rng);
}

void SyncExpert::set_frozen(bool frozen) {
  frozen_ = frozen;
  for (auto& t : params_.tensors()) t.set_requires_grad(!frozen);
}

Tensor SyncExpert::vis_embed(const Tensor& stacked) const {
  const int want_c = cfg_.window_frames * 3;
  if (stacked.ndim() != 3 || stacked.dim(0) != want_c ||
      stacked.dim(1) != cfg_.face_size / 2 || stacked.dim(2) != cfg_.face_size)
    throw ShapeMismatch("vis_embed: expected [" + std::to_string(want_c) + "," +
                        std::to_string(cfg_.face_size / 2) + "," +
                        std::to_string(cfg_.face_size) + "]");
  // Anchor frame plus amplified frame-to-frame deltas: the static face cancels
  // out and mouth motion carries the sync cue. Constant brightness offsets
  // vanish in both the mean-subtracted anchor and the deltas.
  const int half = cfg_.face_size / 2;
  const int plane = half * cfg_.face_size;
  Tensor chans = nn::reshape(stacked, {want_c, plane});
  Tensor anchor = nn::reshape(nn::slice_rows(chans, 0, 3), {3, half, cfg_.face_size});
  Tensor x = nn::add_channels(anchor, nn::neg(nn::channel_means(anchor)));
  for (int f = 1; f < cfg_.window_frames; ++f) {
    Tensor delta = nn::sub(nn::slice_rows(chans, 3 * f, 3),
                           nn::slice_rows(chans, 3 * (f - 1), 3));
    x = nn::cat_channels(
        x, nn::reshape(nn::scale(delta, 4.0f), {3, half, cfg_.face_size}));
  }
  x = nn::leaky_relu(vis1_(x), 0.2f);
  x = nn::leaky_relu(vis2_(x), 0.2f);
  x = nn::leaky_relu(vis3_(x), 0.2f);
  Tensor flat = nn::reshape(x, {1, static_cast<int>(x.numel())});
  return nn::l2_normalize(nn::reshape(vis_out_(flat), {cfg_.embed_dim}));
}

Tensor SyncExpert::aud_embed(const Tensor& mel_chunk) const {
  if (mel_chunk.ndim() != 2 || mel_chunk.dim(0) != cfg_.mel_frames ||
      mel_chunk.dim(1) != cfg_.mel_bins)
    throw ShapeMismatch("aud_embed: expected [" + std::to_string(cfg_.mel_frames) +
                        "," + std::to_string(cfg_.mel_bins) + "]");
  // log-mel sits around [-11.5, 2]; rescale to a unit-ish range
  Tensor x = nn::transpose(nn::scale(nn::add_scalar(mel_chunk, 6.0f), 0.25f));
  x = nn::leaky_relu(aud1_(x), 0.2f);
  x = nn::leaky_relu(aud2_(x), 0.2f);
  Tensor flat = nn::reshape(x, {1, static_cast<int>(x.numel())});
  return nn::l2_normalize(nn::reshape(aud_out_(flat), {cfg_.embed_dim}));
}

std::pair<Tensor, Tensor> SyncExpert::embed_pair(const SyncWindow& w) const {
  if (static_cast<int>(w.frames.size()) != cfg_.window_frames)
    throw ShapeMismatch("embed_pair: wrong frame count");
  const int half = cfg_.face_size / 2;
  Tensor stacked = Tensor::zeros({cfg_.window_frames * 3, half, cfg_.face_size});
  for (int f = 0; f < cfg_.window_frames; ++f) {
    const auto& img = w.frames[static_cast<size_t>(f)];
    if (img.h != half || img.w != cfg_.face_size || img.c != 3)
      throw ShapeMismatch("embed_pair: frame has wrong shape");
    for (int ch = 0; ch < 3; ++ch)
      for (int y = 0; y < half; ++y)
        for (int x = 0; x < cfg_.face_size; ++x)
          stacked.data()[((static_cast<size_t>(f) * 3 + ch) * half + y) * cfg_.face_size +
                         x] = img.at(y, x, ch);
  }
  if (static_cast<int>(w.mel.size()) != cfg_.mel_frames * cfg_.mel_bins)
    throw ShapeMismatch("embed_pair: mel chunk has wrong shape");
  Tensor mel = Tensor::from({cfg_.mel_frames, cfg_.mel_bins},
                            std::vector<float>(w.mel));
  return {vis_embed(stacked), aud_embed(mel)};
}

float SyncExpert::cosine(const SyncWindow& w) const {
  auto [v, a] = embed_pair(w);
  return nn::dot(v, a).item();
}

Tensor sync_loss(const Tensor& v_emb, const Tensor& a_emb, bool in_sync) {
  Tensor s = nn::scale(nn::add_scalar(nn::dot(v_emb, a_emb), 1.0f), 0.5f);
  return nn::bce_on_prob(s, in_sync ? 1.0f : 0.0f);
}

std::vector<float> mel_chunk_for_window(const audio::MelSpectrogram& mel,
                                        int video_frame, int shift_frames,
                                        const SyncConfig& cfg) {
  // mel frames per video frame at 22050/25/hop=256: 3.4453125
  const double mel_per_video =
      static_cast<double>(mel.sample_rate) / 25.0 / mel.hop_length;
  const int start =
      static_cast<int>(std::llround((video_frame + shift_frames) * mel_per_video));
  std::vector<float> out(static_cast<size_t>(cfg.mel_frames) * cfg.mel_bins, 0.0f);
  for (int r = 0; r < cfg.mel_frames; ++r) {
    const int src = start + r;
    if (src < 0 || src >= mel.t) continue;
    for (int b = 0; b < cfg.mel_bins; ++b)
      out[static_cast<size_t>(r) * cfg.mel_bins + b] = mel.at(src, b);
  }
  return out;
}

SyncWindow make_window(const std::vector<image::Image>& face_crops,
                       const audio::MelSpectrogram& mel, int start_frame,
                       int shift_frames, const SyncConfig& cfg) {
  if (shift_frames != 0 && std::abs(shift_frames) < 4)
    throw InvalidNegativeOffset(shift_frames);
  if (start_frame < 0 ||
      start_frame + cfg.window_frames > static_cast<int>(face_crops.size()))
    throw ShapeMismatch("make_window: window outside clip");
  if (mel.bins != cfg.mel_bins) throw ShapeMismatch("make_window: mel bins mismatch");
  SyncWindow w;
  const int half = cfg.face_size / 2;
  for (int f = 0; f < cfg.window_frames; ++f) {
    const auto& src = face_crops[static_cast<size_t>(start_frame + f)];
    if (src.h != cfg.face_size || src.w != cfg.face_size)
      throw ShapeMismatch("make_window: face crop has wrong size");
    image::Image lower(half, cfg.face_size, 3);
    for (int y = 0; y < half; ++y)
      for (int x = 0; x < cfg.face_size; ++x)
        for (int ch = 0; ch < 3; ++ch) lower.at(y, x, ch) = src.at(half + y, x, ch);
    w.frames.push_back(std::move(lower));
  }
  w.mel = mel_chunk_for_window(mel, start_frame, shift_frames, cfg);
  return w;
}

namespace {

struct Draw {
  int clip;
  int start;
  int shift;  // 0 = positive
};

Draw draw_sample(Rng& rng, const std::vector<SyncClip>& clips, const SyncConfig& cfg,
                 bool positive) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    const int ci = rng.uniform_int(0, static_cast<int>(clips.size()) - 1);
    const int n = static_cast<int>(clips[static_cast<size_t>(ci)].crops.size());
    if (n < cfg.window_frames + 5) continue;
    const int start = rng.uniform_int(0, n - cfg.window_frames);
    if (positive) return {ci, start, 0};
    // audio shifted by at least +-4 frames, window kept inside the clip
    std::vector<int> options;
    for (int s = -n; s <= n; ++s) {
      if (std::abs(s) < 4) continue;
      const double mpv = 3.4453125;
      const int mstart = static_cast<int>(std::llround((start + s) * mpv));
      if (mstart >= 0 && mstart + cfg.mel_frames <= clips[static_cast<size_t>(ci)].mel.t)
        options.push_back(s);
    }
    if (options.empty()) continue;
    return {ci, start, options[static_cast<size_t>(
                      rng.uniform_int(0, static_cast<int>(options.size()) - 1))]};
  }
  throw std::runtime_error("could not draw a sync training sample; clips too short");
}

}  // namespace

TrainStats train_expert(SyncExpert& expert, const std::vector<SyncClip>& clips,
                        int steps, int batch_size, uint64_t seed) {
  if (clips.empty()) throw std::invalid_argument("train_expert: no clips");
  expert.set_frozen(false);
  nn::Adam opt(expert.parameters(), expert.config().lr);
  Rng rng(seed);
  TrainStats stats;
  double tail = 0.0;
  int tail_n = 0;
  constexpr float kInvTemp = 10.0f;
  for (int step = 0; step < steps; ++step) {
    opt.zero_grad();

    // Aligned pairs with in-batch contrast (both directions), which locks the
    // two towers onto the shared signal far faster than lone pair losses.
    std::vector<Tensor> vs, as;
    for (int b = 0; b < batch_size; ++b) {
      Draw d = draw_sample(rng, clips, expert.config(), true);
      SyncWindow w = make_window(clips[static_cast<size_t>(d.clip)].crops,
                                 clips[static_cast<size_t>(d.clip)].mel, d.start, 0,
                                 expert.config());
      auto [v, a] = expert.embed_pair(w);
      vs.push_back(v);
      as.push_back(a);
    }
    Tensor nce;
    for (int i = 0; i < batch_size; ++i) {
      std::vector<Tensor> row_v, row_a;
      for (int j = 0; j < batch_size; ++j) {
        row_v.push_back(nn::scale(nn::dot(vs[static_cast<size_t>(i)], as[static_cast<size_t>(j)]), kInvTemp));
        row_a.push_back(nn::scale(nn::dot(vs[static_cast<size_t>(j)], as[static_cast<size_t>(i)]), kInvTemp));
      }
      Tensor lv = nn::cross_entropy_logits(
          nn::reshape(nn::cat_rows(row_v), {batch_size}), i);
      Tensor la = nn::cross_entropy_logits(
          nn::reshape(nn::cat_rows(row_a), {batch_size}), i);
      Tensor both = nn::add(lv, la);
      nce = nce.defined() ? nn::add(nce, both) : both;
    }
    nce = nn::scale(nce, 0.5f / static_cast<float>(batch_size));

    // Explicit shifted negatives and positives calibrate the absolute cosine.
    Tensor bce;
    for (int b = 0; b < batch_size; ++b) {
      const bool positive = b % 2 == 0;
      Draw d = draw_sample(rng, clips, expert.config(), positive);
      SyncWindow w = make_window(clips[static_cast<size_t>(d.clip)].crops,
                                 clips[static_cast<size_t>(d.clip)].mel, d.start,
                                 d.shift, expert.config());
      auto [v, a] = expert.embed_pair(w);
      Tensor loss = sync_loss(v, a, positive);
      bce = bce.defined() ? nn::add(bce, loss) : loss;
    }
    bce = nn::scale(bce, 1.0f / static_cast<float>(batch_size));

    Tensor total = nn::add(nce, bce);
    const float lv = total.item();
    if (!std::isfinite(lv)) throw std::runtime_error("sync training loss diverged");
    total.backward();
    opt.step();
    ++stats.steps;
    stats.loss = lv;
    if (step >= steps - 50) {
      tail += lv;
      ++tail_n;
    }
  }
  if (tail_n) stats.loss = static_cast<float>(tail / tail_n);
  return stats;
}

float separation(const SyncExpert& expert, const std::vector<SyncClip>& clips,
                 int n_pairs, uint64_t seed) {
  Rng rng(seed);
  double pos = 0.0, neg = 0.0;
  for (int i = 0; i < n_pairs; ++i) {
    Draw dp = draw_sample(rng, clips, expert.config(), true);
    pos += expert.cosine(make_window(clips[static_cast<size_t>(dp.clip)].crops,
                                     clips[static_cast<size_t>(dp.clip)].mel, dp.start,
                                     0, expert.config()));
    Draw dn = draw_sample(rng, clips, expert.config(), false);
    neg += expert.cosine(make_window(clips[static_cast<size_t>(dn.clip)].crops,
                                     clips[static_cast<size_t>(dn.clip)].mel, dn.start,
                                     dn.shift, expert.config()));
  }
  return static_cast<float>((pos - neg) / n_pairs);
}

void SyncExpert::save(const std::string& path) const {
  ckpt::Container c;
  c.config["kind"] = "sync";
  c.config["face_size"] = std::to_string(cfg_.face_size);
  c.config["window_frames"] = std::to_string(cfg_.window_frames);
  c.config["mel_frames"] = std::to_string(cfg_.mel_frames);
  c.config["mel_bins"] = std::to_string(cfg_.mel_bins);
  c.config["embed_dim"] = std::to_string(cfg_.embed_dim);
  c.config["lr"] = std::to_string(cfg_.lr);
  c.config["seed"] = std::to_string(cfg_.seed);
  for (const auto& [name, t] : params_.items()) c.tensors.emplace_back(name, t);
  ckpt::save_container(c, path);
}

std::unique_ptr<SyncExpert> SyncExpert::load(const std::string& path) {
  ckpt::Container c = ckpt::load_container(path);
  if (c.config.at("kind") != "sync") throw ckpt::BadCheckpoint("not a sync checkpoint");
  SyncConfig cfg;
  cfg.face_size = std::stoi(c.config.at("face_size"));
  cfg.window_frames = std::stoi(c.config.at("window_frames"));
  cfg.mel_frames = std::stoi(c.config.at("mel_frames"));
  cfg.mel_bins = std::stoi(c.config.at("mel_bins"));
  cfg.embed_dim = std::stoi(c.config.at("embed_dim"));
  cfg.lr = std::stof(c.config.at("lr"));
  cfg.seed = std::stoull(c.config.at("seed"));
  auto expert = std::make_unique<SyncExpert>(cfg);
  for (const auto& [name, tensor] : c.tensors) {
    nn::Tensor dst = expert->params_.find(name);
    if (dst.shape() != tensor.shape())
      throw ckpt::BadCheckpoint("tensor shape mismatch: " + name);
    dst.data() = tensor.data();
  }
  return expert;
}

}  // namespace polydub::syncexpert
