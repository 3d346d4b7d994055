#include "polydub/facegen/facegen.hpp"

#include <algorithm>
#include <cmath>

#include "polydub/checkpoint.hpp"

namespace polydub::facegen {

using nn::Tensor;

void FacegenConfig::validate() const {
  const int allowed[] = {64, 96, 128, 256, 512};
  if (std::find(std::begin(allowed), std::end(allowed), face_size) == std::end(allowed))
    throw std::invalid_argument("FacegenConfig: face_size must be one of 64/96/128/256/512");
  if (face_size % 16 != 0)
    throw std::invalid_argument("FacegenConfig: face_size must be divisible by 16");
  if (face_size >= 256 && n_disc_scales != 3)
    throw std::invalid_argument("FacegenConfig: 3 discriminator scales required at >=256");
  if (n_disc_scales < 1 || n_disc_scales > 3)
    throw std::invalid_argument("FacegenConfig: n_disc_scales in 1..3");
  if (base_channels < 4) throw std::invalid_argument("FacegenConfig: base_channels >= 4");
}

image::Image mask_lower_half(const image::Image& frame) {
  image::Image out = frame;
  for (int y = frame.h / 2; y < frame.h; ++y)
    for (int x = 0; x < frame.w; ++x)
      for (int c = 0; c < frame.c; ++c) out.at(y, x, c) = 0.0f;
  return out;
}

image::Image augment(const image::Image& frame, const AugmentParams& p) {
  const float limit = 0.1f * static_cast<float>(frame.w);
  if (std::fabs(p.dx) > limit || std::fabs(p.dy) > limit)
    throw ParamOutOfRange("augment: |dx|,|dy| must be <= 0.1*S");
  if (std::fabs(p.angle) > 15.0f)
    throw ParamOutOfRange("augment: |angle| must be <= 15 degrees");
  if (p.zoom < 0.85f || p.zoom > 1.15f)
    throw ParamOutOfRange("augment: zoom must be in [0.85, 1.15]");

  if (p.dx == 0.0f && p.dy == 0.0f && p.angle == 0.0f && p.zoom == 1.0f) return frame;

  image::Image out(frame.h, frame.w, frame.c);
  const float cx = (static_cast<float>(frame.w) - 1.0f) * 0.5f;
  const float cy = (static_cast<float>(frame.h) - 1.0f) * 0.5f;
  const float rad = p.angle * static_cast<float>(M_PI) / 180.0f;
  const float cosr = std::cos(rad), sinr = std::sin(rad);
  for (int y = 0; y < frame.h; ++y) {
    for (int x = 0; x < frame.w; ++x) {
      // invert: translate back, then rotate/zoom about the center
      const float ux = static_cast<float>(x) - p.dx - cx;
      const float uy = static_cast<float>(y) - p.dy - cy;
      const float sx = (cosr * ux + sinr * uy) / p.zoom + cx;
      const float sy = (-sinr * ux + cosr * uy) / p.zoom + cy;
      const float qx = std::clamp(sx, 0.0f, static_cast<float>(frame.w - 1));
      const float qy = std::clamp(sy, 0.0f, static_cast<float>(frame.h - 1));
      for (int c = 0; c < frame.c; ++c)
        out.at(y, x, c) = image::sample_bilinear(frame, qy, qx, c);
    }
  }
  return out;
}

int sample_negative_index(int clip_len, int target_index, Rng& rng) {
  std::vector<int> options;
  for (int i = 0; i < clip_len; ++i)
    if (std::abs(i - target_index) >= 5) options.push_back(i);
  if (options.empty())
    throw ClipTooShort("no frame at least 5 away from target in a clip of " +
                       std::to_string(clip_len));
  return options[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(options.size()) - 1))];
}

image::Image sample_negative(const std::vector<image::Image>& clip, int target_index,
                             Rng& rng) {
  return clip[static_cast<size_t>(
      sample_negative_index(static_cast<int>(clip.size()), target_index, rng))];
}

FacegenModel::FacegenModel(FacegenConfig cfg)
    : cfg_(cfg), train_rng_(cfg.seed ^ 0xFACE5EEDull) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  const int C = cfg_.base_channels;
  const int A = cfg_.audio_dim;

  aud_conv1_ = nn::Conv1d(gen_params_, "aud.conv1", cfg_.mel_bins, A, 3, 2, 1, rng);
  aud_conv2_ = nn::Conv1d(gen_params_, "aud.conv2", A, A, 3, 2, 1, rng);
  const int at = (cfg_.mel_window + 1) / 2;
  const int at2 = (at + 1) / 2;
  aud_proj_ = nn::Linear(gen_params_, "aud.proj", A * at2, A, rng);
  aud_gru_ = nn::GruCell(gen_params_, "aud.gru", A, A, rng);

  enc1_ = nn::Conv2d(gen_params_, "enc1", 6, C, 3, 2, 1, rng);
  enc2_ = nn::Conv2d(gen_params_, "enc2", C, 2 * C, 3, 2, 1, rng);
  enc3_ = nn::Conv2d(gen_params_, "enc3", 2 * C, 4 * C, 3, 2, 1, rng);
  enc4_ = nn::Conv2d(gen_params_, "enc4", 4 * C, 4 * C, 3, 2, 1, rng);
  fuse_ = nn::Conv2d(gen_params_, "fuse", 4 * C + A, 4 * C, 1, 1, 0, rng);
  dec1_ = nn::ConvT2d(gen_params_, "dec1", 4 * C, 4 * C, 4, 2, 1, rng);
  dec2_ = nn::ConvT2d(gen_params_, "dec2", 4 * C, 2 * C, 4, 2, 1, rng);
  dec3_ = nn::ConvT2d(gen_params_, "dec3", 2 * C, C, 4, 2, 1, rng);
  dec4_ = nn::ConvT2d(gen_params_, "dec4", C, 6, 4, 2, 1, rng);
  out_conv_ = nn::Conv2d(gen_params_, "out", 6, 3, 3, 1, 1, rng);

  const int D = cfg_.disc_channels;
  for (int s = 0; s < cfg_.n_disc_scales; ++s) {
    Disc d;
    const std::string base = "disc" + std::to_string(s);
    d.c1 = nn::Conv2d(disc_params_, base + ".c1", 3, D, 4, 2, 1, rng);
    d.c2 = nn::Conv2d(disc_params_, base + ".c2", D, 2 * D, 4, 2, 1, rng);
    d.c3 = nn::Conv2d(disc_params_, base + ".c3", 2 * D, 2 * D, 4, 2, 1, rng);
    d.head = nn::Conv2d(disc_params_, base + ".head", 2 * D, 1, 3, 1, 1, rng);
    discs_.push_back(std::move(d));
  }
}

int FacegenModel::frames_for_mel(int mel_t) const {
  // mel frames per video frame: sample_rate / fps / hop = 3.4453125
  return static_cast<int>(std::floor(static_cast<double>(mel_t) / 3.4453125));
}

nn::Tensor FacegenModel::audio_encode(const audio::MelSpectrogram& mel) const {
  const int n_frames = frames_for_mel(mel.t);
  if (n_frames < 1)
    throw InsufficientAudio("mel of " + std::to_string(mel.t) +
                            " frames does not cover one video frame");
  const int A = cfg_.audio_dim;
  const int M = cfg_.mel_window;
  std::vector<Tensor> rows;
  Tensor h = Tensor::zeros({1, A});
  for (int t = 0; t < n_frames; ++t) {
    // chunk of M mel frames ending at this video frame (causal look-back)
    const int end = static_cast<int>(std::llround((t + 1) * 3.4453125));
    Tensor chunk = Tensor::zeros({M, cfg_.mel_bins});
    for (int r = 0; r < M; ++r) {
      const int src = end - M + r;
      if (src < 0 || src >= mel.t) continue;
      for (int b = 0; b < cfg_.mel_bins; ++b)
        chunk.data()[static_cast<size_t>(r) * cfg_.mel_bins + b] = mel.at(src, b);
    }
    Tensor x = nn::leaky_relu(aud_conv1_(nn::transpose(chunk)), 0.2f);
    x = nn::leaky_relu(aud_conv2_(x), 0.2f);
    Tensor feat = aud_proj_(nn::reshape(x, {1, static_cast<int>(x.numel())}));
    h = aud_gru_.step(feat, h);
    rows.push_back(h);
  }
  return nn::cat_rows(rows);  // [n_frames, A]
}

nn::Tensor FacegenModel::generate_frame_tensor(const Tensor& ref, const Tensor& ident,
                                               const Tensor& audio_feat_row) const {
  const int S = cfg_.face_size;
  if (ref.ndim() != 3 || ref.dim(0) != 3 || ref.dim(1) != S || ref.dim(2) != S ||
      ident.ndim() != 3 || ident.dim(0) != 3 || ident.dim(1) != S || ident.dim(2) != S)
    throw ShapeMismatch("generate_frame_tensor: frames must be [3,S,S]");
  if (audio_feat_row.numel() != cfg_.audio_dim)
    throw ShapeMismatch("generate_frame_tensor: bad audio feature size");

  Tensor x = nn::cat_channels(ref, ident);  // [6,S,S]
  Tensor e1 = nn::leaky_relu(enc1_(x), 0.2f);
  Tensor e2 = nn::leaky_relu(enc2_(e1), 0.2f);
  Tensor e3 = nn::leaky_relu(enc3_(e2), 0.2f);
  Tensor e4 = nn::leaky_relu(enc4_(e3), 0.2f);

  const int bh = e4.dim(1), bw = e4.dim(2);
  Tensor afeat = nn::reshape(audio_feat_row, {cfg_.audio_dim});
  Tensor fused = nn::leaky_relu(
      fuse_(nn::cat_channels(e4, nn::tile_channels(afeat, bh, bw))), 0.2f);

  Tensor d1 = nn::leaky_relu(nn::add(dec1_(fused), e3), 0.2f);
  Tensor d2 = nn::leaky_relu(nn::add(dec2_(d1), e2), 0.2f);
  Tensor d3 = nn::leaky_relu(nn::add(dec3_(d2), e1), 0.2f);
  Tensor d4 = nn::leaky_relu(dec4_(d3), 0.2f);
  return nn::sigmoid_(out_conv_(d4));  // [3,S,S], range (0,1)
}

std::vector<image::Image> FacegenModel::generate_frames(
    const std::vector<GenInput>& inputs, const audio::MelSpectrogram& mel) const {
  Tensor feats = audio_encode(mel);
  if (feats.dim(0) < static_cast<int>(inputs.size()))
    throw InsufficientAudio("audio covers " + std::to_string(feats.dim(0)) +
                            " frames, need " + std::to_string(inputs.size()));
  std::vector<image::Image> out;
  out.reserve(inputs.size());
  for (size_t i = 0; i < inputs.size(); ++i) {
    const auto& in = inputs[i];
    if (in.reference.h != cfg_.face_size || in.reference.w != cfg_.face_size ||
        in.identity.h != cfg_.face_size || in.identity.w != cfg_.face_size)
      throw ShapeMismatch("generate_frames: inputs must be S x S");
    Tensor ref = image::to_tensor(mask_lower_half(in.reference));
    Tensor ident = image::to_tensor(in.identity);
    Tensor row = nn::reshape(nn::slice_rows(feats, static_cast<int>(i), 1),
                             {cfg_.audio_dim});
    out.push_back(image::from_tensor(generate_frame_tensor(ref, ident, row)));
  }
  return out;
}

std::vector<nn::Tensor> FacegenModel::multiscale_disc(const Tensor& frame) const {
  std::vector<Tensor> maps;
  Tensor x = frame;
  for (size_t s = 0; s < discs_.size(); ++s) {
    if (s > 0) x = nn::avg_pool2d(x, 2);
    const auto& d = discs_[s];
    Tensor h = nn::leaky_relu(d.c1(x), 0.2f);
    h = nn::leaky_relu(d.c2(h), 0.2f);
    h = nn::leaky_relu(d.c3(h), 0.2f);
    maps.push_back(d.head(h));
  }
  return maps;
}

std::vector<nn::Tensor> FacegenModel::generator_parameters() const {
  return gen_params_.tensors();
}

std::vector<nn::Tensor> FacegenModel::discriminator_parameters() const {
  return disc_params_.tensors();
}

nn::Tensor FacegenModel::build_generator_graph(const TrainingWindow& window,
                                               const syncexpert::SyncExpert& expert,
                                               const AugmentParams& aug,
                                               FacegenLosses* breakdown,
                                               std::vector<Tensor>* out_gens,
                                               std::vector<image::Image>* out_reals) const {
  const int S = cfg_.face_size;
  const int W = static_cast<int>(window.inputs.size());
  if (W == 0 || window.targets.size() != window.inputs.size())
    throw ShapeMismatch("training_loss: inputs/targets mismatch");

  Tensor feats = audio_encode(window.mel);
  if (feats.dim(0) < window.start_frame + W)
    throw InsufficientAudio("training window extends past the audio");

  std::vector<Tensor> gens;
  Tensor l1_sum;
  for (int f = 0; f < W; ++f) {
    const auto& in = window.inputs[static_cast<size_t>(f)];
    // the same augmentation parameters apply to every frame of the sample
    Tensor ref = image::to_tensor(mask_lower_half(augment(in.reference, aug)));
    Tensor ident = image::to_tensor(augment(in.identity, aug));
    image::Image target_img = augment(window.targets[static_cast<size_t>(f)], aug);
    if (out_reals) out_reals->push_back(target_img);
    Tensor target = image::to_tensor(target_img);
    Tensor row = nn::reshape(
        nn::slice_rows(feats, window.start_frame + f, 1), {cfg_.audio_dim});
    Tensor gen = generate_frame_tensor(ref, ident, row);
    Tensor l1 = nn::l1_loss(gen, target);
    l1_sum = l1_sum.defined() ? nn::add(l1_sum, l1) : l1;
    gens.push_back(gen);
  }
  Tensor l1 = nn::scale(l1_sum, 1.0f / static_cast<float>(W));

  // sync supervision on the generated lower halves
  Tensor sync;
  if (cfg_.w_sync != 0.0f) {
    const auto& scfg = expert.config();
    if (W != scfg.window_frames || S != scfg.face_size)
      throw ShapeMismatch("training window does not match the sync expert window");
    Tensor stacked;
    for (int f = 0; f < W; ++f) {
      Tensor lower = nn::slice_height(gens[static_cast<size_t>(f)], S / 2, S / 2);
      stacked = f == 0 ? lower : nn::cat_channels(stacked, lower);
    }
    Tensor v = expert.vis_embed(stacked);
    std::vector<float> chunk = syncexpert::mel_chunk_for_window(
        window.mel, window.start_frame, 0, scfg);
    Tensor a = expert.aud_embed(
        Tensor::from({scfg.mel_frames, scfg.mel_bins}, std::move(chunk)));
    sync = syncexpert::sync_loss(v, a, true);
  } else {
    sync = Tensor::scalar(0.0f);
  }

  // hinge generator loss against the multi-scale critics
  Tensor adv_g;
  if (cfg_.w_adv != 0.0f) {
    Tensor acc;
    for (const auto& gen : gens) {
      for (const auto& m : multiscale_disc(gen)) {
        Tensor term = nn::neg(nn::mean_all(m));
        acc = acc.defined() ? nn::add(acc, term) : term;
      }
    }
    adv_g = nn::scale(acc, 1.0f / static_cast<float>(W));
  } else {
    adv_g = Tensor::scalar(0.0f);
  }

  Tensor total = l1;
  if (cfg_.w_sync != 0.0f) total = nn::add(total, nn::scale(sync, cfg_.w_sync));
  if (cfg_.w_adv != 0.0f) total = nn::add(total, nn::scale(adv_g, cfg_.w_adv));

  if (breakdown) {
    breakdown->l1 = l1.item();
    breakdown->sync = sync.item();
    breakdown->adv_g = adv_g.item();
    breakdown->total_g = total.item();
  }
  if (out_gens) *out_gens = std::move(gens);
  return total;
}

nn::Tensor FacegenModel::training_loss(const TrainingWindow& window,
                                       const syncexpert::SyncExpert& expert,
                                       const AugmentParams& aug,
                                       FacegenLosses* breakdown) const {
  return build_generator_graph(window, expert, aug, breakdown, nullptr, nullptr);
}

nn::Tensor FacegenModel::disc_loss(const std::vector<image::Image>& reals,
                                   const std::vector<nn::Tensor>& fakes) const {
  Tensor acc;
  auto add_term = [&](Tensor t) { acc = acc.defined() ? nn::add(acc, t) : t; };
  for (const auto& real : reals) {
    for (const auto& m : multiscale_disc(image::to_tensor(real))) {
      // hinge: relu(1 - D(real))
      add_term(nn::mean_all(nn::relu(nn::add_scalar(nn::neg(m), 1.0f))));
    }
  }
  for (const auto& fake : fakes) {
    for (const auto& m : multiscale_disc(nn::detach(fake))) {
      // hinge: relu(1 + D(fake))
      add_term(nn::mean_all(nn::relu(nn::add_scalar(m, 1.0f))));
    }
  }
  return nn::scale(acc, 1.0f / static_cast<float>(reals.size()));
}

FacegenLosses FacegenModel::training_step(const TrainingWindow& window,
                                          const syncexpert::SyncExpert& expert) {
  if (!opt_g_)
    opt_g_ = std::make_unique<nn::Adam>(generator_parameters(), cfg_.lr);
  if (!opt_d_ && cfg_.w_adv != 0.0f)
    opt_d_ = std::make_unique<nn::Adam>(discriminator_parameters(), cfg_.lr);

  AugmentParams aug;
  const float limit = 0.1f * static_cast<float>(cfg_.face_size);
  aug.dx = static_cast<float>((train_rng_.uniform() * 2.0 - 1.0) * limit);
  aug.dy = static_cast<float>((train_rng_.uniform() * 2.0 - 1.0) * limit);
  aug.angle = static_cast<float>((train_rng_.uniform() * 2.0 - 1.0) * 15.0);
  aug.zoom = static_cast<float>(0.85 + train_rng_.uniform() * 0.30);

  FacegenLosses out;
  std::vector<Tensor> fakes;
  std::vector<image::Image> reals;
  Tensor total_g = build_generator_graph(window, expert, aug, &out, &fakes, &reals);
  auto check = [](float v, const char* term) {
    if (!std::isfinite(v)) throw NonFiniteLoss(term);
  };
  check(out.l1, "l1");
  check(out.sync, "sync");
  check(out.adv_g, "adv_g");
  check(out.total_g, "total_g");

  opt_g_->zero_grad();
  if (opt_d_) {
    for (auto& p : discriminator_parameters()) p.zero_grad();
  }
  total_g.backward();
  opt_g_->step();

  if (cfg_.w_adv != 0.0f) {
    Tensor d_loss = disc_loss(reals, fakes);
    out.adv_d = d_loss.item();
    check(out.adv_d, "adv_d");
    opt_d_->zero_grad();
    d_loss.backward();
    opt_d_->step();
  }
  return out;
}

void FacegenModel::save(const std::string& path) const {
  ckpt::Container c;
  c.config["kind"] = "facegen";
  c.config["face_size"] = std::to_string(cfg_.face_size);
  c.config["base_channels"] = std::to_string(cfg_.base_channels);
  c.config["audio_dim"] = std::to_string(cfg_.audio_dim);
  c.config["mel_bins"] = std::to_string(cfg_.mel_bins);
  c.config["mel_window"] = std::to_string(cfg_.mel_window);
  c.config["disc_channels"] = std::to_string(cfg_.disc_channels);
  c.config["n_disc_scales"] = std::to_string(cfg_.n_disc_scales);
  c.config["w_sync"] = std::to_string(cfg_.w_sync);
  c.config["w_adv"] = std::to_string(cfg_.w_adv);
  c.config["lr"] = std::to_string(cfg_.lr);
  c.config["seed"] = std::to_string(cfg_.seed);
  for (const auto& [name, t] : gen_params_.items())
    c.tensors.emplace_back("g." + name, t);
  for (const auto& [name, t] : disc_params_.items())
    c.tensors.emplace_back("d." + name, t);
  ckpt::save_container(c, path);
}

std::unique_ptr<FacegenModel> FacegenModel::load(const std::string& path) {
  ckpt::Container c = ckpt::load_container(path);
  if (c.config.at("kind") != "facegen")
    throw ckpt::BadCheckpoint("not a facegen checkpoint");
  FacegenConfig cfg;
  cfg.face_size = std::stoi(c.config.at("face_size"));
  cfg.base_channels = std::stoi(c.config.at("base_channels"));
  cfg.audio_dim = std::stoi(c.config.at("audio_dim"));
  cfg.mel_bins = std::stoi(c.config.at("mel_bins"));
  cfg.mel_window = std::stoi(c.config.at("mel_window"));
  cfg.disc_channels = std::stoi(c.config.at("disc_channels"));
  cfg.n_disc_scales = std::stoi(c.config.at("n_disc_scales"));
  cfg.w_sync = std::stof(c.config.at("w_sync"));
  cfg.w_adv = std::stof(c.config.at("w_adv"));
  cfg.lr = std::stof(c.config.at("lr"));
  cfg.seed = std::stoull(c.config.at("seed"));
  auto model = std::make_unique<FacegenModel>(cfg);
  for (const auto& [name, tensor] : c.tensors) {
    nn::Tensor dst = name.rfind("g.", 0) == 0
                         ? model->gen_params_.find(name.substr(2))
                         : model->disc_params_.find(name.substr(2));
    if (dst.shape() != tensor.shape())
      throw ckpt::BadCheckpoint("tensor shape mismatch: " + name);
    dst.data() = tensor.data();
  }
  return model;
}

}  // namespace polydub::facegen
