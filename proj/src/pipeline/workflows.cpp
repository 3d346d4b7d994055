#include "polydub/pipeline/workflows.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace polydub::pipeline {

using textfront::Lang;

std::vector<PreparedClip> prepare_clips(const std::string& corpus_dir,
                                        const std::vector<toydata::ManifestRow>& rows,
                                        int face_size, const audio::MelBasis& basis,
                                        const facecrop::CropConfig& crop_cfg) {
  toydata::register_builtin_landmark_provider();
  std::vector<PreparedClip> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    PreparedClip pc;
    pc.row = row;
    pc.wave = audio::read_wav(corpus_dir + "/" + row.audio_path);
    pc.mel = audio::mel_spectrogram(pc.wave, basis);
    auto [frames, fps] = toydata::load_clip_frames(corpus_dir + "/" + row.video_path);
    if (fps != 25) throw std::runtime_error("clip is not 25 fps: " + row.video_path);
    std::vector<facecrop::CropGeometry> raw;
    for (const auto& f : frames) {
      auto lm = facecrop::detect_landmarks(f, "synthetic");
      raw.push_back(facecrop::expand_region(lm, f.w, f.h, crop_cfg));
    }
    auto geos = crop_cfg.smooth_geometry
                    ? facecrop::smooth_geometries(raw, crop_cfg.smooth_alpha)
                    : raw;
    for (size_t i = 0; i < frames.size(); ++i)
      pc.crops.push_back(facecrop::crop(frames[i], geos[i], face_size));
    out.push_back(std::move(pc));
  }
  return out;
}

std::vector<tts::SpeakerProfile> speakers_from_manifest(
    const std::vector<toydata::ManifestRow>& rows) {
  std::vector<tts::SpeakerProfile> speakers;
  std::set<std::string> seen;
  for (const auto& row : rows) {
    if (!seen.insert(row.speaker_id).second) continue;
    tts::SpeakerProfile p;
    p.speaker_id = row.speaker_id;
    p.native_language = textfront::lang_from_string(row.language);
    speakers.push_back(std::move(p));
  }
  std::sort(speakers.begin(), speakers.end(),
            [](const auto& a, const auto& b) { return a.speaker_id < b.speaker_id; });
  return speakers;
}

std::unique_ptr<tts::TtsModel> train_tts_from_corpus(
    const std::string& corpus_dir, const tts::TtsConfig& cfg,
    const TtsTrainOptions& opt, std::vector<tts::LossBreakdown>* history) {
  auto rows = toydata::load_manifest(corpus_dir + "/manifest.tsv");
  if (rows.empty()) throw std::runtime_error("empty corpus manifest");
  auto model = std::make_unique<tts::TtsModel>(cfg, speakers_from_manifest(rows));
  auto utts = tts::load_training_manifest(corpus_dir + "/manifest.tsv", *model);

  const int B = std::max(1, opt.batch_size);
  size_t cursor = 0;
  for (int step = 0; step < opt.steps; ++step) {
    std::vector<tts::Utterance> batch;
    for (int b = 0; b < B; ++b) {
      batch.push_back(utts[cursor % utts.size()]);
      ++cursor;
    }
    const float progress =
        opt.steps > 1 ? static_cast<float>(step) / static_cast<float>(opt.steps - 1)
                      : 1.0f;
    auto lb = model->training_step(batch, progress);
    if (history) history->push_back(lb);
    if (opt.verbose && (step % 50 == 0 || step + 1 == opt.steps))
      std::printf("tts step %d/%d recon=%.4f kl=%.4f dur=%.4f adv=%.4f reg=%.6f\n",
                  step + 1, opt.steps, lb.recon_mel, lb.kl, lb.duration,
                  lb.adversarial_speaker, lb.speaker_mean_reg);
  }
  return model;
}

std::unique_ptr<syncexpert::SyncExpert> train_sync_from_corpus(
    const std::string& corpus_dir, const syncexpert::SyncConfig& cfg, int steps,
    int batch_size, uint64_t seed) {
  auto rows = toydata::load_manifest(corpus_dir + "/manifest.tsv");
  audio::MelConfig mc;
  mc.n_mels = cfg.mel_bins;
  audio::MelBasis basis(mc);
  auto prepared = prepare_clips(corpus_dir, rows, cfg.face_size, basis);
  std::vector<syncexpert::SyncClip> clips;
  for (auto& pc : prepared) clips.push_back({std::move(pc.crops), std::move(pc.mel)});
  auto expert = std::make_unique<syncexpert::SyncExpert>(cfg);
  syncexpert::train_expert(*expert, clips, steps, batch_size, seed);
  expert->set_frozen(true);
  return expert;
}

facegen::TrainingWindow sample_training_window(const PreparedClip& clip,
                                               int window_frames, Rng& rng) {
  const int n = static_cast<int>(clip.crops.size());
  if (n < window_frames + 5)
    throw facegen::ClipTooShort("clip too short for a training window");
  const int start = rng.uniform_int(0, n - window_frames);
  facegen::TrainingWindow w;
  w.mel = clip.mel;
  w.start_frame = start;
  for (int f = 0; f < window_frames; ++f) {
    const int t = start + f;
    facegen::GenInput in;
    in.reference = facegen::mask_lower_half(clip.crops[static_cast<size_t>(t)]);
    in.identity = facegen::sample_negative(clip.crops, t, rng);
    w.inputs.push_back(std::move(in));
    w.targets.push_back(clip.crops[static_cast<size_t>(t)]);
  }
  return w;
}

std::unique_ptr<facegen::FacegenModel> train_facegen_from_corpus(
    const std::string& corpus_dir, const facegen::FacegenConfig& cfg,
    const syncexpert::SyncExpert& expert, const FacegenTrainOptions& opt,
    std::vector<facegen::FacegenLosses>* history) {
  auto rows = toydata::load_manifest(corpus_dir + "/manifest.tsv");
  audio::MelConfig mc;
  mc.n_mels = cfg.mel_bins;
  audio::MelBasis basis(mc);
  std::vector<toydata::ManifestRow> selected;
  if (opt.clip_indices.empty()) {
    selected = rows;
  } else {
    for (int i : opt.clip_indices) selected.push_back(rows.at(static_cast<size_t>(i)));
  }
  auto clips = prepare_clips(corpus_dir, selected, cfg.face_size, basis);
  auto model = std::make_unique<facegen::FacegenModel>(cfg);
  Rng rng(opt.seed);
  const int W = expert.config().window_frames;
  for (int step = 0; step < opt.steps; ++step) {
    const auto& clip = clips[static_cast<size_t>(rng.uniform_int(
        0, static_cast<int>(clips.size()) - 1))];
    auto window = sample_training_window(clip, W, rng);
    auto lb = model->training_step(window, expert);
    if (history) history->push_back(lb);
    if (opt.verbose && (step % 100 == 0 || step + 1 == opt.steps))
      std::printf("facegen step %d/%d l1=%.4f sync=%.4f adv_g=%.4f adv_d=%.4f\n",
                  step + 1, opt.steps, lb.l1, lb.sync, lb.adv_g, lb.adv_d);
  }
  return model;
}

}  // namespace polydub::pipeline
