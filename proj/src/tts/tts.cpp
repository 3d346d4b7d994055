#include "polydub/tts/tts.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

namespace polydub::tts {

using nn::Tensor;
using textfront::Lang;

void TtsConfig::validate() const {
  if (hidden_dim <= 0 || n_text_layers <= 0 || n_flow_steps <= 0 || mel_bins <= 0 ||
      latent_dim <= 0 || sample_rate <= 0 || hop_length <= 0 || segment_frames <= 0)
    throw std::invalid_argument("TtsConfig: dimensions must be positive");
  if (latent_dim % 2 != 0)
    throw std::invalid_argument("TtsConfig: latent_dim must be even");
  // decoder upsamples by 4 per stage; hop must be a power of 4
  int h = hop_length;
  while (h % 4 == 0) h /= 4;
  if (h != 1 || hop_length < 64)
    throw std::invalid_argument("TtsConfig: hop_length must be a power of 4, >= 64");
  if (lambda_gamma <= 0.0f)
    throw std::invalid_argument("TtsConfig: lambda_gamma must be positive");
}

audio::MelConfig TtsConfig::mel_config() const {
  audio::MelConfig mc;
  mc.sample_rate = sample_rate;
  mc.n_fft = n_fft;
  mc.win_length = win_length;
  mc.hop_length = hop_length;
  mc.n_mels = mel_bins;
  return mc;
}

float lambda_schedule(float progress, float gamma) {
  if (progress < 0.0f || progress > 1.0f)
    throw std::invalid_argument("lambda_schedule: progress outside [0,1]");
  if (gamma <= 0.0f) throw std::invalid_argument("lambda_schedule: gamma must be > 0");
  const double p = progress;
  return static_cast<float>(2.0 / (1.0 + std::exp(-double(gamma) * p)) - 1.0);
}

Tensor speaker_mean_penalty(const Tensor& all_embeddings) {
  if (all_embeddings.ndim() != 2 || all_embeddings.dim(0) < 1)
    throw std::invalid_argument("speaker_mean_penalty: need [n_speakers, dim]");
  const float inv_n = 1.0f / static_cast<float>(all_embeddings.dim(0));
  Tensor centroid = nn::scale(nn::sum_axis0(all_embeddings), inv_n);
  return nn::dot(centroid, centroid);
}

namespace {

constexpr int kDecChannels = 32;
constexpr int kFlowHidden = 16;
constexpr int kDurChannels = 32;
constexpr int kClsHidden = 32;

int upsample_stages(int hop) {
  int stages = 0;
  while (hop > 1) {
    hop /= 4;
    ++stages;
  }
  return stages;
}

}  // namespace

TtsModel::TtsModel(TtsConfig cfg, std::vector<SpeakerProfile> speakers)
    : cfg_(cfg), train_rng_(cfg.seed ^ 0x9E3779B97F4A7C15ull) {
  cfg_.validate();
  if (speakers.empty()) throw std::invalid_argument("TtsModel: need at least one speaker");

  inv_offsets_.resize(4);
  int total = 0;
  for (Lang lang : textfront::kAllLangs) {
    inv_offsets_[static_cast<size_t>(textfront::lang_index(lang))] = total;
    total += textfront::inventory(lang).size();
  }
  total_symbols_ = total;

  Rng init_rng(cfg_.seed);
  const int H = cfg_.hidden_dim;
  const int L = cfg_.latent_dim;

  phoneme_emb_ = params_.create("phoneme_emb", {total_symbols_, H}, init_rng,
                                nn::fan_in_stdev(H));
  lang_emb_ = params_.create("lang_emb", {4, H}, init_rng, nn::fan_in_stdev(H));
  spk_emb_ = params_.create("spk_emb", {static_cast<int>(speakers.size()), H}, init_rng,
                            0.5f * nn::fan_in_stdev(1));

  for (const auto& p : speakers) {
    speakers_.emplace_back(p.speaker_id, p.native_language);
    if (!p.embedding.empty()) {
      if (static_cast<int>(p.embedding.size()) != H)
        throw std::invalid_argument("SpeakerProfile embedding has wrong size");
      const int row = static_cast<int>(speakers_.size()) - 1;
      std::copy(p.embedding.begin(), p.embedding.end(),
                spk_emb_.data().begin() + static_cast<size_t>(row) * H);
    }
  }

  for (int l = 0; l < cfg_.n_text_layers; ++l) {
    enc_convs_.emplace_back(params_, "enc.conv" + std::to_string(l), H, H, 5, 1, 2,
                            init_rng);
    enc_norms_.emplace_back(params_, "enc.norm" + std::to_string(l), H, init_rng);
  }
  enc_proj_ = nn::Linear(params_, "enc.proj", H, 2 * L, init_rng);

  dur_lang_proj_ = nn::Linear(params_, "dur.lang", H, H, init_rng);
  dur_spk_proj_ = nn::Linear(params_, "dur.spk", H, H, init_rng);
  dur_conv1_ = nn::Conv1d(params_, "dur.conv1", H, kDurChannels, 3, 1, 1, init_rng);
  dur_conv2_ = nn::Conv1d(params_, "dur.conv2", kDurChannels, kDurChannels, 3, 1, 1,
                          init_rng);
  dur_out_ = nn::Linear(params_, "dur.out", kDurChannels, 1, init_rng);

  post_conv1_ = nn::Conv1d(params_, "post.conv1", cfg_.mel_bins, 32, 5, 1, 2, init_rng);
  post_conv2_ = nn::Conv1d(params_, "post.conv2", 32, 32, 5, 1, 2, init_rng);
  post_proj_ = nn::Conv1d(params_, "post.proj", 32, 2 * L, 1, 1, 0, init_rng);

  const int half = L / 2;
  for (int s = 0; s < cfg_.n_flow_steps; ++s) {
    Coupling c;
    const std::string base = "flow" + std::to_string(s);
    c.net1 = nn::Conv1d(params_, base + ".net1", half, kFlowHidden, 3, 1, 1, init_rng);
    c.net2 = nn::Conv1d(params_, base + ".net2", kFlowHidden, half, 3, 1, 1, init_rng);
    c.g_proj = nn::Linear(params_, base + ".g", H, kFlowHidden, init_rng);
    c.swap_halves = (s % 2) == 1;
    flow_.push_back(std::move(c));
  }

  dec_pre_ = nn::Conv1d(params_, "dec.pre", L, kDecChannels, 1, 1, 0, init_rng);
  dec_g_proj_ = nn::Linear(params_, "dec.g", H, kDecChannels, init_rng);
  int ch = kDecChannels;
  const int stages = upsample_stages(cfg_.hop_length);
  for (int s = 0; s < stages; ++s) {
    const int out_ch = std::max(2, ch / 2);
    dec_ups_.emplace_back(params_, "dec.up" + std::to_string(s), ch, out_ch, 8, 4, 2,
                          init_rng);
    ch = out_ch;
  }
  dec_post_ = nn::Conv1d(params_, "dec.post", ch, 1, 7, 1, 3, init_rng);

  cls_hidden_ = nn::Linear(params_, "cls.hidden", H, kClsHidden, init_rng);
  cls_linear_ = nn::Linear(params_, "cls.linear", H, static_cast<int>(speakers_.size()), init_rng);
  cls_out_ = nn::Linear(params_, "cls.out", kClsHidden,
                        static_cast<int>(speakers_.size()), init_rng);

  mel_basis_ = std::make_unique<audio::MelBasis>(cfg_.mel_config());
}

SpeakerProfile TtsModel::speaker(int index) const {
  if (index < 0 || index >= n_speakers())
    throw std::out_of_range("speaker index out of range");
  SpeakerProfile p;
  p.speaker_id = speakers_[static_cast<size_t>(index)].first;
  p.native_language = speakers_[static_cast<size_t>(index)].second;
  const int H = cfg_.hidden_dim;
  p.embedding.assign(spk_emb_.data().begin() + static_cast<size_t>(index) * H,
                     spk_emb_.data().begin() + static_cast<size_t>(index + 1) * H);
  return p;
}

int TtsModel::speaker_index(const std::string& id) const {
  for (size_t i = 0; i < speakers_.size(); ++i)
    if (speakers_[i].first == id) return static_cast<int>(i);
  return -1;
}

Tensor TtsModel::speaker_vector(int index) const {
  return nn::gather_rows(spk_emb_, {index});
}

Tensor TtsModel::zero_speaker_vector() const {
  return Tensor::zeros({1, cfg_.hidden_dim});
}

TextEncoding TtsModel::encode_text(const std::vector<int>& ids, Lang lang) const {
  const int H = cfg_.hidden_dim;
  const int L = cfg_.latent_dim;
  TextEncoding enc;
  enc.t_text = static_cast<int>(ids.size());
  if (ids.empty()) {
    enc.hidden = Tensor::zeros({0, H});
    enc.mask = Tensor::zeros({0});
    enc.mu_p = Tensor::zeros({0, L});
    enc.logs_p = Tensor::zeros({0, L});
    return enc;
  }
  const int li = textfront::lang_index(lang);
  const int inv_size = textfront::inventory(lang).size();
  std::vector<int> global_ids;
  global_ids.reserve(ids.size());
  Tensor mask = Tensor::zeros({enc.t_text});
  for (size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || ids[t] >= inv_size)
      throw std::out_of_range("phoneme id outside inventory");
    global_ids.push_back(inv_offsets_[static_cast<size_t>(li)] + ids[t]);
    mask.data()[t] = ids[t] == 0 ? 0.0f : 1.0f;  // inventory id 0 is <pad>
  }

  Tensor lang_row = nn::reshape(nn::gather_rows(lang_emb_, {li}), {H});
  Tensor x = nn::add(nn::gather_rows(phoneme_emb_, global_ids), lang_row);
  x = nn::mul_rows(x, mask);
  for (size_t l = 0; l < enc_convs_.size(); ++l) {
    Tensor y = nn::transpose(nn::relu(enc_convs_[l](nn::transpose(x))));
    x = nn::mul_rows(enc_norms_[l](y), mask);
  }
  enc.hidden = x;
  enc.mask = mask;
  Tensor stats = nn::mul_rows(enc_proj_(x), mask);
  enc.mu_p = nn::slice_cols(stats, 0, L);
  enc.logs_p = nn::slice_cols(stats, L, L);
  return enc;
}

Tensor TtsModel::duration_log(const TextEncoding& enc, Lang lang,
                              const Tensor& spk) const {
  const int H = cfg_.hidden_dim;
  Tensor x = nn::detach(enc.hidden);
  Tensor lang_row = nn::reshape(nn::gather_rows(lang_emb_, {textfront::lang_index(lang)}),
                                {H});
  Tensor lang_bias = nn::reshape(dur_lang_proj_(nn::reshape(lang_row, {1, H})), {H});
  Tensor spk_bias = nn::reshape(dur_spk_proj_(spk), {H});
  x = nn::add(nn::add(x, lang_bias), spk_bias);
  x = nn::mul_rows(x, enc.mask);
  Tensor h = nn::relu(dur_conv1_(nn::transpose(x)));
  h = nn::relu(dur_conv2_(h));
  Tensor logd = dur_out_(nn::transpose(h));  // [T,1]
  return nn::reshape(logd, {enc.t_text});
}

Tensor TtsModel::predict_durations(const TextEncoding& enc, Lang lang,
                                   const Tensor& spk) const {
  if (enc.t_text == 0) return Tensor::zeros({0});
  return nn::exp_(duration_log(enc, lang, spk));
}

Tensor TtsModel::speaker_classifier(const TextEncoding& enc, float lambda_val) const {
  const int H = cfg_.hidden_dim;
  double count = 0.0;
  for (float m : enc.mask.data()) count += m;
  Tensor pooled;
  if (count == 0.0) {
    pooled = Tensor::zeros({1, H});
  } else {
    // hidden rows are already masked to zero
    pooled = nn::reshape(nn::scale(nn::sum_axis0(enc.hidden),
                                   static_cast<float>(1.0 / count)),
                         {1, H});
  }
  Tensor rev = nn::grad_reverse(pooled, lambda_val);
  Tensor logits = nn::add(cls_out_(nn::relu(cls_hidden_(rev))), cls_linear_(rev));
  return nn::reshape(logits, {n_speakers()});
}

std::pair<Tensor, Tensor> TtsModel::posterior(const audio::MelSpectrogram& mel) const {
  const int L = cfg_.latent_dim;
  Tensor m = Tensor::from({mel.t, mel.bins}, std::vector<float>(mel.data));
  // log-mel sits around [-11.5, 2]; rescale before the encoder stack
  m = nn::scale(nn::add_scalar(m, 6.0f), 0.25f);
  Tensor h = nn::relu(post_conv1_(nn::transpose(m)));
  h = nn::relu(post_conv2_(h));
  Tensor stats = nn::transpose(post_proj_(h));  // [M, 2L]
  return {nn::slice_cols(stats, 0, L), nn::slice_cols(stats, L, L)};
}

Tensor TtsModel::flow_forward(const Tensor& z, const Tensor& g) const {
  const int half = cfg_.latent_dim / 2;
  Tensor zt = nn::transpose(z);  // [L, M]
  for (const auto& c : flow_) {
    Tensor first = nn::slice_rows(zt, 0, half);
    Tensor second = nn::slice_rows(zt, half, half);
    const Tensor& cond = c.swap_halves ? second : first;
    const Tensor& moved = c.swap_halves ? first : second;
    Tensor h = c.net1(cond);
    h = nn::add_channels(h, nn::reshape(c.g_proj(g), {kFlowHidden}));
    Tensor t = c.net2(nn::relu(h));
    Tensor moved2 = nn::add(moved, t);
    zt = c.swap_halves ? nn::cat_rows({moved2, cond}) : nn::cat_rows({cond, moved2});
  }
  return nn::transpose(zt);
}

Tensor TtsModel::flow_inverse(const Tensor& zp, const Tensor& g) const {
  const int half = cfg_.latent_dim / 2;
  Tensor zt = nn::transpose(zp);
  for (auto it = flow_.rbegin(); it != flow_.rend(); ++it) {
    const auto& c = *it;
    Tensor first = nn::slice_rows(zt, 0, half);
    Tensor second = nn::slice_rows(zt, half, half);
    const Tensor& cond = c.swap_halves ? second : first;
    const Tensor& moved = c.swap_halves ? first : second;
    Tensor h = c.net1(cond);
    h = nn::add_channels(h, nn::reshape(c.g_proj(g), {kFlowHidden}));
    Tensor t = c.net2(nn::relu(h));
    Tensor moved2 = nn::sub(moved, t);
    zt = c.swap_halves ? nn::cat_rows({moved2, cond}) : nn::cat_rows({cond, moved2});
  }
  return nn::transpose(zt);
}

Tensor TtsModel::decode(const Tensor& z, const Tensor& g) const {
  Tensor h = dec_pre_(nn::transpose(z));
  h = nn::add_channels(h, nn::reshape(dec_g_proj_(g), {kDecChannels}));
  h = nn::leaky_relu(h, 0.1f);
  for (const auto& up : dec_ups_) h = nn::leaky_relu(up(h), 0.1f);
  Tensor wave = nn::tanh_(dec_post_(h));  // [1, hop*M]
  return nn::reshape(wave, {wave.dim(1)});
}

LossBreakdown TtsModel::training_step(const std::vector<Utterance>& batch,
                                      float progress) {
  if (batch.empty()) throw std::invalid_argument("training_step: empty batch");
  if (!opt_) opt_ = std::make_unique<nn::Adam>(params_.tensors(), cfg_.lr);

  const float lambda_val = lambda_schedule(progress, cfg_.lambda_gamma);
  const int hop = cfg_.hop_length;
  const float inv_b = 1.0f / static_cast<float>(batch.size());

  Tensor recon_sum, kl_sum, dur_sum, adv_sum;
  auto acc = [](Tensor& slot, Tensor v) {
    slot = slot.defined() ? nn::add(slot, v) : v;
  };

  for (const auto& utt : batch) {
    TextEncoding enc = encode_text(utt.ids, utt.lang);
    if (enc.t_text == 0) throw std::invalid_argument("training_step: empty utterance");
    auto [mu_q, logs_q] = posterior(utt.mel);
    const int M = utt.mel.t;
    const int L = cfg_.latent_dim;

    Tensor eps = Tensor::randn({M, L}, train_rng_, 1.0f);
    Tensor z_q = nn::add(mu_q, nn::mul(nn::exp_(logs_q), eps));
    Tensor g = speaker_vector(utt.speaker_index);
    Tensor z_p = flow_forward(z_q, g);

    // alignment search runs on values only
    const int T = enc.t_text;
    if (T > M) throw InfeasibleAlignment(T, M);
    std::vector<float> ll(static_cast<size_t>(T) * M);
    {
      const auto& mu = enc.mu_p.data();
      const auto& ls = enc.logs_p.data();
      const auto& zp = z_p.data();
      constexpr double kLog2Pi = 1.8378770664093453;
      for (int i = 0; i < T; ++i) {
        for (int j = 0; j < M; ++j) {
          double s = 0.0;
          for (int l = 0; l < L; ++l) {
            const double lsv = ls[static_cast<size_t>(i) * L + l];
            const double d = zp[static_cast<size_t>(j) * L + l] -
                             mu[static_cast<size_t>(i) * L + l];
            s += -0.5 * kLog2Pi - lsv - 0.5 * d * d * std::exp(-2.0 * lsv);
          }
          ll[static_cast<size_t>(i) * M + j] = static_cast<float>(s);
        }
      }
    }
    Alignment align = monotonic_align(ll, T, M);

    // duration loss on log durations
    std::vector<float> logd_target(static_cast<size_t>(T));
    for (int i = 0; i < T; ++i)
      logd_target[static_cast<size_t>(i)] =
          std::log(static_cast<float>(align.durations[static_cast<size_t>(i)]));
    Tensor dur_pred = duration_log(enc, utt.lang, g);
    acc(dur_sum, nn::mse_loss(dur_pred, Tensor::from({T}, std::move(logd_target))));

    // KL between posterior and aligned prior
    Tensor mu_e = nn::gather_rows(enc.mu_p, align.frame_to_phoneme);
    Tensor logs_e = nn::gather_rows(enc.logs_p, align.frame_to_phoneme);
    Tensor diff = nn::sub(z_p, mu_e);
    Tensor var_term = nn::mul(nn::mul(diff, diff), nn::exp_(nn::scale(logs_e, -2.0f)));
    Tensor kl_mat = nn::add(nn::sub(logs_e, logs_q),
                            nn::add_scalar(nn::scale(var_term, 0.5f), -0.5f));
    acc(kl_sum, nn::mean_all(kl_mat));

    // decoder segment reconstruction
    const int seg = std::min(cfg_.segment_frames, M);
    const int max_start = M - seg;
    const int start = max_start > 0 ? train_rng_.uniform_int(0, max_start) : 0;
    Tensor z_slice = nn::slice_rows(z_q, start, seg);
    Tensor wave_hat = decode(z_slice, g);
    std::vector<float> gt_seg(static_cast<size_t>(seg) * hop, 0.0f);
    for (int s = 0; s < seg * hop; ++s) {
      const size_t src = static_cast<size_t>(start) * hop + s;
      if (src < utt.wave.samples.size()) gt_seg[static_cast<size_t>(s)] = utt.wave.samples[src];
    }
    Tensor mel_hat = mel_basis_->compute_graph(wave_hat);
    int gt_frames = 0;
    std::vector<float> gt_mel = mel_basis_->compute(gt_seg, &gt_frames);
    acc(recon_sum,
        nn::l1_loss(mel_hat, Tensor::from({gt_frames, cfg_.mel_bins}, std::move(gt_mel))));

    // domain-adversarial speaker classification
    Tensor logits = speaker_classifier(enc, lambda_val);
    acc(adv_sum, nn::cross_entropy_logits(logits, utt.speaker_index));
  }

  Tensor recon = nn::scale(recon_sum, inv_b);
  Tensor kl = nn::scale(kl_sum, inv_b);
  Tensor dur = nn::scale(dur_sum, inv_b);
  Tensor adv = nn::scale(adv_sum, inv_b);
  Tensor reg = speaker_mean_penalty(spk_emb_);

  LossBreakdown out;
  out.recon_mel = recon.item();
  out.kl = kl.item();
  out.duration = dur.item();
  out.adversarial_speaker = adv.item();
  out.speaker_mean_reg = reg.item();

  auto check = [](float v, const char* term) {
    if (!std::isfinite(v)) throw NonFiniteLoss(term);
  };
  check(out.recon_mel, "recon_mel");
  check(out.kl, "kl");
  check(out.duration, "duration");
  check(out.adversarial_speaker, "adversarial_speaker");
  check(out.speaker_mean_reg, "speaker_mean_reg");

  Tensor total = nn::add(nn::scale(recon, cfg_.mel_loss_weight), nn::add(kl, dur));
  if (cfg_.adv_weight != 0.0f) total = nn::add(total, nn::scale(adv, cfg_.adv_weight));
  if (cfg_.reg_weight != 0.0f) total = nn::add(total, nn::scale(reg, cfg_.reg_weight));
  out.total = total.item();
  check(out.total, "total");

  opt_->zero_grad();
  total.backward();
  opt_->step();

  // classifier-only refits on detached encodings
  if (cfg_.adv_weight != 0.0f && cfg_.adv_inner_steps > 0) {
    if (!cls_opt_) {
      std::vector<Tensor> cls_params = {cls_hidden_.w, cls_hidden_.b, cls_out_.w,
                                        cls_out_.b, cls_linear_.w, cls_linear_.b};
      cls_opt_ = std::make_unique<nn::Adam>(cls_params, cfg_.lr);
    }
    for (int k = 0; k < cfg_.adv_inner_steps; ++k) {
      cls_opt_->zero_grad();
      Tensor cls_loss;
      for (const auto& utt : batch) {
        TextEncoding enc = encode_text(utt.ids, utt.lang);
        enc.hidden = nn::detach(enc.hidden);
        Tensor logits = speaker_classifier(enc, 0.0f);
        Tensor l = nn::cross_entropy_logits(logits, utt.speaker_index);
        cls_loss = cls_loss.defined() ? nn::add(cls_loss, l) : l;
      }
      cls_loss.backward();
      cls_opt_->step();
    }
  }
  return out;
}

audio::Waveform TtsModel::synthesize(const textfront::PhonemeSequence& seq, Lang lang,
                                     const SpeakerProfile& speaker,
                                     InferenceTrace* trace) const {
  if (seq.language != lang)
    throw std::invalid_argument("synthesize: sequence language mismatch");
  const bool native = speaker.native_language == lang;
  InferenceTrace local;
  local.substitution = !native;

  std::vector<int> ids = seq.ids;
  if (ids.empty() && !seq.symbols.empty())
    ids = textfront::phonemes_to_ids(seq, textfront::inventory(lang)).ids;

  audio::Waveform out;
  out.sample_rate = cfg_.sample_rate;
  if (ids.empty()) {
    if (trace) *trace = local;
    return out;
  }

  Tensor g;
  if (native) {
    if (static_cast<int>(speaker.embedding.size()) != cfg_.hidden_dim)
      throw std::invalid_argument("synthesize: speaker embedding size mismatch");
    g = Tensor::from({1, cfg_.hidden_dim}, std::vector<float>(speaker.embedding));
  } else {
    g = zero_speaker_vector();
  }

  TextEncoding enc = encode_text(ids, lang);
  Tensor durations = predict_durations(enc, lang, g);
  std::vector<int> rounded(static_cast<size_t>(enc.t_text));
  std::vector<int> expand_ids;
  for (int t = 0; t < enc.t_text; ++t) {
    const int d = std::max(1, static_cast<int>(std::llround(
                                  durations.data()[static_cast<size_t>(t)])));
    rounded[static_cast<size_t>(t)] = d;
    for (int k = 0; k < d; ++k) expand_ids.push_back(t);
  }
  local.durations = rounded;
  local.t_mel = static_cast<int>(expand_ids.size());

  Tensor mu_e = nn::gather_rows(enc.mu_p, expand_ids);  // noise scale 0: z_p = mu_p
  Tensor z = flow_inverse(mu_e, g);
  Tensor wave = decode(z, g);
  out.samples = wave.data();
  for (auto& s : out.samples) s = std::clamp(s, -1.0f, 1.0f);
  if (trace) *trace = local;
  return out;
}

void TtsModel::save(const std::string& path) const {
  ckpt::Container c;
  auto put = [&](const std::string& k, const std::string& v) { c.config[k] = v; };
  put("hidden_dim", std::to_string(cfg_.hidden_dim));
  put("n_text_layers", std::to_string(cfg_.n_text_layers));
  put("n_flow_steps", std::to_string(cfg_.n_flow_steps));
  put("mel_bins", std::to_string(cfg_.mel_bins));
  put("sample_rate", std::to_string(cfg_.sample_rate));
  put("hop_length", std::to_string(cfg_.hop_length));
  put("lambda_gamma", std::to_string(cfg_.lambda_gamma));
  put("reg_weight", std::to_string(cfg_.reg_weight));
  put("adv_weight", std::to_string(cfg_.adv_weight));
  put("latent_dim", std::to_string(cfg_.latent_dim));
  put("n_fft", std::to_string(cfg_.n_fft));
  put("win_length", std::to_string(cfg_.win_length));
  put("segment_frames", std::to_string(cfg_.segment_frames));
  put("mel_loss_weight", std::to_string(cfg_.mel_loss_weight));
  put("lr", std::to_string(cfg_.lr));
  put("seed", std::to_string(cfg_.seed));
  put("kind", "tts");
  for (const auto& [name, t] : params_.items()) c.tensors.emplace_back(name, t);
  for (const auto& [id, native] : speakers_)
    c.speakers.emplace_back(id, textfront::to_string(native));
  for (Lang lang : textfront::kAllLangs) {
    c.languages.push_back(textfront::to_string(lang));
    c.inventory_hashes.emplace_back(textfront::to_string(lang),
                                    textfront::inventory(lang).content_hash());
  }
  ckpt::save_container(c, path);
}

std::unique_ptr<TtsModel> TtsModel::load(const std::string& path) {
  ckpt::Container c = ckpt::load_container(path);
  auto get = [&](const std::string& k) -> std::string {
    auto it = c.config.find(k);
    if (it == c.config.end()) throw ckpt::BadCheckpoint("missing config key " + k);
    return it->second;
  };
  if (get("kind") != "tts") throw ckpt::BadCheckpoint("not a tts checkpoint");

  for (const auto& [lang_str, hash] : c.inventory_hashes) {
    const Lang lang = textfront::lang_from_string(lang_str);
    if (textfront::inventory(lang).content_hash() != hash)
      throw ckpt::BadCheckpoint("inventory hash mismatch for language " + lang_str);
  }

  TtsConfig cfg;
  cfg.hidden_dim = std::stoi(get("hidden_dim"));
  cfg.n_text_layers = std::stoi(get("n_text_layers"));
  cfg.n_flow_steps = std::stoi(get("n_flow_steps"));
  cfg.mel_bins = std::stoi(get("mel_bins"));
  cfg.sample_rate = std::stoi(get("sample_rate"));
  cfg.hop_length = std::stoi(get("hop_length"));
  cfg.lambda_gamma = std::stof(get("lambda_gamma"));
  cfg.reg_weight = std::stof(get("reg_weight"));
  cfg.adv_weight = std::stof(get("adv_weight"));
  cfg.latent_dim = std::stoi(get("latent_dim"));
  cfg.n_fft = std::stoi(get("n_fft"));
  cfg.win_length = std::stoi(get("win_length"));
  cfg.segment_frames = std::stoi(get("segment_frames"));
  cfg.mel_loss_weight = std::stof(get("mel_loss_weight"));
  cfg.lr = std::stof(get("lr"));
  cfg.seed = std::stoull(get("seed"));

  std::vector<SpeakerProfile> speakers;
  for (const auto& [id, native] : c.speakers) {
    SpeakerProfile p;
    p.speaker_id = id;
    p.native_language = textfront::lang_from_string(native);
    speakers.push_back(std::move(p));
  }

  auto model = std::make_unique<TtsModel>(cfg, speakers);
  for (const auto& [name, tensor] : c.tensors) {
    nn::Tensor dst = model->params_.find(name);
    if (dst.shape() != tensor.shape())
      throw ckpt::BadCheckpoint("tensor shape mismatch: " + name);
    dst.data() = tensor.data();
  }
  return model;
}

std::vector<Utterance> load_training_manifest(const std::string& manifest_path,
                                              const TtsModel& model) {
  namespace fs = std::filesystem;
  const fs::path base = fs::path(manifest_path).parent_path();
  std::istringstream in(read_text_file(manifest_path));
  std::vector<Utterance> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    size_t pos = 0;
    while (true) {
      const size_t tab = line.find('\t', pos);
      cols.push_back(line.substr(pos, tab == std::string::npos ? tab : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    std::string audio_path, text, speaker_id, lang_str;
    if (cols.size() == 6) {  // utt_id audio video text speaker language
      audio_path = cols[1];
      text = cols[3];
      speaker_id = cols[4];
      lang_str = cols[5];
    } else if (cols.size() == 4) {  // audio text speaker language
      audio_path = cols[0];
      text = cols[1];
      speaker_id = cols[2];
      lang_str = cols[3];
    } else {
      throw std::runtime_error("manifest row needs 4 or 6 tab-separated columns: " + line);
    }
    Utterance u;
    u.lang = textfront::lang_from_string(lang_str);
    u.speaker_index = model.speaker_index(speaker_id);
    if (u.speaker_index < 0)
      throw std::runtime_error("manifest speaker not in model: " + speaker_id);
    u.ids = textfront::text_to_ids(text, u.lang).ids;
    fs::path ap(audio_path);
    u.wave = audio::read_wav(ap.is_absolute() ? ap.string() : (base / ap).string());
    u.mel = audio::mel_spectrogram(u.wave, model.mel_basis());
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace polydub::tts
