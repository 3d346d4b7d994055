#include <CLI11.hpp>
#include <thread>
#include <sstream>
#include <cstdio>
#include <filesystem>

#include "polydub/pipeline/service.hpp"
#include "polydub/pipeline/workflows.hpp"

using namespace polydub;
namespace fs = std::filesystem;

namespace {

tts::TtsConfig tts_config_from(const pipeline::KvConfig& kv) {
  tts::TtsConfig cfg;
  cfg.hidden_dim = static_cast<int>(kv.get_int("tts.hidden_dim", cfg.hidden_dim));
  cfg.n_text_layers = static_cast<int>(kv.get_int("tts.n_text_layers", cfg.n_text_layers));
  cfg.n_flow_steps = static_cast<int>(kv.get_int("tts.n_flow_steps", cfg.n_flow_steps));
  cfg.mel_bins = static_cast<int>(kv.get_int("tts.mel_bins", cfg.mel_bins));
  cfg.sample_rate = static_cast<int>(kv.get_int("tts.sample_rate", cfg.sample_rate));
  cfg.hop_length = static_cast<int>(kv.get_int("tts.hop_length", cfg.hop_length));
  cfg.lambda_gamma = static_cast<float>(kv.get_float("tts.lambda_gamma", cfg.lambda_gamma));
  cfg.reg_weight = static_cast<float>(kv.get_float("tts.reg_weight", cfg.reg_weight));
  cfg.adv_weight = static_cast<float>(kv.get_float("tts.adv_weight", cfg.adv_weight));
  cfg.latent_dim = static_cast<int>(kv.get_int("tts.latent_dim", cfg.latent_dim));
  cfg.segment_frames = static_cast<int>(kv.get_int("tts.segment_frames", cfg.segment_frames));
  cfg.mel_loss_weight = static_cast<float>(kv.get_float("tts.mel_loss_weight", cfg.mel_loss_weight));
  cfg.lr = static_cast<float>(kv.get_float("tts.lr", cfg.lr));
  cfg.seed = static_cast<uint64_t>(kv.get_int("tts.seed", static_cast<long long>(cfg.seed)));
  return cfg;
}

syncexpert::SyncConfig sync_config_from(const pipeline::KvConfig& kv) {
  syncexpert::SyncConfig cfg;
  cfg.face_size = static_cast<int>(kv.get_int("sync.face_size", cfg.face_size));
  cfg.embed_dim = static_cast<int>(kv.get_int("sync.embed_dim", cfg.embed_dim));
  cfg.mel_bins = static_cast<int>(kv.get_int("sync.mel_bins", cfg.mel_bins));
  cfg.lr = static_cast<float>(kv.get_float("sync.lr", cfg.lr));
  cfg.seed = static_cast<uint64_t>(kv.get_int("sync.seed", static_cast<long long>(cfg.seed)));
  return cfg;
}

facegen::FacegenConfig facegen_config_from(const pipeline::KvConfig& kv) {
  facegen::FacegenConfig cfg;
  cfg.face_size = static_cast<int>(kv.get_int("facegen.face_size", cfg.face_size));
  cfg.base_channels = static_cast<int>(kv.get_int("facegen.base_channels", cfg.base_channels));
  cfg.audio_dim = static_cast<int>(kv.get_int("facegen.audio_dim", cfg.audio_dim));
  cfg.mel_bins = static_cast<int>(kv.get_int("facegen.mel_bins", cfg.mel_bins));
  cfg.disc_channels = static_cast<int>(kv.get_int("facegen.disc_channels", cfg.disc_channels));
  cfg.n_disc_scales = static_cast<int>(kv.get_int("facegen.n_disc_scales", cfg.n_disc_scales));
  cfg.w_sync = static_cast<float>(kv.get_float("facegen.w_sync", cfg.w_sync));
  cfg.w_adv = static_cast<float>(kv.get_float("facegen.w_adv", cfg.w_adv));
  cfg.lr = static_cast<float>(kv.get_float("facegen.lr", cfg.lr));
  cfg.seed = static_cast<uint64_t>(kv.get_int("facegen.seed", static_cast<long long>(cfg.seed)));
  return cfg;
}

std::unique_ptr<pipeline::DubPipeline> build_pipeline(const std::string& tts_path,
                                                      const std::string& facegen_path,
                                                      const std::string& container) {
  pipeline::PipelineConfig pcfg;
  pcfg.container = container;
  auto p = std::make_unique<pipeline::DubPipeline>(pcfg);
  p->set_tts(tts::TtsModel::load(tts_path));
  p->set_facegen(facegen::FacegenModel::load(facegen_path));
  return p;
}

void print_report(const pipeline::StageTimingReport& report) {
  std::fputs(report.to_tsv().c_str(), stdout);
  std::printf("end_to_end_rtf\t%.6f\noutput_seconds\t%.6f\n", report.end_to_end_rtf,
              report.output_seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polydub: multilingual talking-face dubbing at desk scale"};
  app.require_subcommand(1);

  // --- dub ---
  std::string dub_text, dub_lang, dub_speaker, dub_source, dub_out;
  std::string dub_tts = "tts.ckpt", dub_facegen = "facegen.ckpt";
  std::string dub_container = "image_sequence", dub_translate_from;
  auto* dub_cmd = app.add_subcommand("dub", "synthesize a dubbed talking-face video");
  dub_cmd->add_option("--text", dub_text, "input text")->required();
  dub_cmd->add_option("--lang", dub_lang, "target language: ko|en|ja|zh")->required();
  dub_cmd->add_option("--speaker", dub_speaker, "speaker id")->required();
  dub_cmd->add_option("--source", dub_source, "source clip directory")->required();
  dub_cmd->add_option("--out", dub_out, "output directory")->required();
  dub_cmd->add_option("--tts", dub_tts, "tts checkpoint");
  dub_cmd->add_option("--facegen", dub_facegen, "facegen checkpoint");
  dub_cmd->add_option("--container", dub_container, "image_sequence|mp4");
  dub_cmd->add_option("--translate-from", dub_translate_from,
                      "translate the text from this language first");
  std::string dub_mp4_encoder;
  dub_cmd->add_option("--encoder-cmd", dub_mp4_encoder,
                      "external mp4 encoder executable (e.g. ffmpeg)");

  // --- bench ---
  std::string bench_manifest, bench_tts = "tts.ckpt", bench_facegen = "facegen.ckpt",
              bench_out = "bench_out";
  int bench_reps = 3;
  auto* bench_cmd = app.add_subcommand("bench", "per-stage throughput benchmark");
  bench_cmd->add_option("--manifest", bench_manifest,
                        "TSV: text <TAB> lang <TAB> speaker <TAB> source_clip_dir")
      ->required();
  bench_cmd->add_option("--reps", bench_reps, "repetitions (median reported)");
  bench_cmd->add_option("--tts", bench_tts, "tts checkpoint");
  bench_cmd->add_option("--facegen", bench_facegen, "facegen checkpoint");
  bench_cmd->add_option("--out", bench_out, "working directory");

  // --- train ---
  std::string train_what, train_config, train_corpus = "toy_corpus",
              train_out = "model.ckpt", train_sync_ckpt = "sync.ckpt";
  int train_steps = 0;
  auto* train_cmd = app.add_subcommand("train", "train tts|facegen|sync on a corpus");
  train_cmd->add_option("what", train_what, "tts|facegen|sync")->required();
  train_cmd->add_option("--config", train_config, "key-value config file");
  train_cmd->add_option("--corpus", train_corpus, "corpus directory (manifest.tsv)");
  train_cmd->add_option("--out", train_out, "checkpoint output path");
  train_cmd->add_option("--steps", train_steps, "override training steps");
  train_cmd->add_option("--sync-ckpt", train_sync_ckpt,
                        "frozen sync expert (facegen training)");

  // --- make-toydata ---
  std::string toy_out = "toy_corpus", toy_langs = "ko,en";
  int toy_speakers = 2, toy_utts = 5;
  uint64_t toy_seed = 1;
  auto* toy_cmd = app.add_subcommand("make-toydata", "build a synthetic corpus");
  toy_cmd->add_option("--out", toy_out, "corpus output directory");
  toy_cmd->add_option("--speakers", toy_speakers, "speakers per language");
  toy_cmd->add_option("--languages", toy_langs, "comma-separated language tags");
  toy_cmd->add_option("--utterances", toy_utts, "utterances per speaker");
  toy_cmd->add_option("--seed", toy_seed, "corpus seed");

  // --- serve ---
  std::string serve_tts = "tts.ckpt", serve_facegen = "facegen.ckpt", serve_sources,
              serve_artifacts = "artifacts";
  int serve_port = 8080, serve_workers = 1;
  auto* serve_cmd = app.add_subcommand("serve", "run the dubbing service");
  serve_cmd->add_option("--port", serve_port, "listen port");
  serve_cmd->add_option("--workers", serve_workers, "worker pool size");
  serve_cmd->add_option("--tts", serve_tts, "tts checkpoint");
  serve_cmd->add_option("--facegen", serve_facegen, "facegen checkpoint");
  serve_cmd->add_option("--sources", serve_sources,
                        "directory of source clips (one subdirectory per video id)")
      ->required();
  serve_cmd->add_option("--artifacts", serve_artifacts, "artifact output root");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dub_cmd) {
      auto p = build_pipeline(dub_tts, dub_facegen, dub_container);
      if (!dub_mp4_encoder.empty()) {
        p->set_mp4_encoder(
            {dub_mp4_encoder, "-framerate", "{fps}", "-i", "{frame_pattern}", "-i",
             "{audio}", "-y", "{out}"},
            [](const std::vector<std::string>& args) {
              std::string cmd;
              for (const auto& a : args) cmd += "'" + a + "' ";
              return std::system(cmd.c_str());
            });
      }
      p->register_source_video_dir("source", dub_source);
      pipeline::DubRequest req;
      req.text = dub_text;
      req.language = textfront::lang_from_string(dub_lang);
      req.speaker_id = dub_speaker;
      req.source_video_id = "source";
      if (!dub_translate_from.empty())
        req.translate_from = textfront::lang_from_string(dub_translate_from);
      auto result = p->dub(req, dub_out);
      std::printf("artifact\t%s\nsubstitution\t%s\naudio_seconds\t%.4f\nframes\t%d\n",
                  result.artifact_path.c_str(), result.substitution ? "true" : "false",
                  result.audio_seconds, result.n_frames);
      print_report(result.report);
    } else if (*bench_cmd) {
      auto p = build_pipeline(bench_tts, bench_facegen, "image_sequence");
      std::vector<pipeline::DubRequest> reqs;
      std::istringstream in(read_text_file(bench_manifest));
      std::string line;
      int source_counter = 0;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        size_t pos = 0;
        while (true) {
          const size_t tab = line.find('\t', pos);
          cols.push_back(line.substr(pos, tab == std::string::npos ? tab : tab - pos));
          if (tab == std::string::npos) break;
          pos = tab + 1;
        }
        if (cols.size() != 4)
          throw std::runtime_error("bench manifest row needs 4 columns: " + line);
        const std::string sid = "src" + std::to_string(source_counter++);
        p->register_source_video_dir(sid, cols[3]);
        pipeline::DubRequest req;
        req.text = cols[0];
        req.language = textfront::lang_from_string(cols[1]);
        req.speaker_id = cols[2];
        req.source_video_id = sid;
        reqs.push_back(std::move(req));
      }
      auto report = p->bench(reqs, bench_reps, bench_out);
      print_report(report);
    } else if (*train_cmd) {
      pipeline::KvConfig kv =
          train_config.empty() ? pipeline::KvConfig{} : pipeline::KvConfig::load(train_config);
      if (train_what == "tts") {
        auto cfg = tts_config_from(kv);
        pipeline::TtsTrainOptions opt;
        opt.steps = train_steps > 0
                        ? train_steps
                        : static_cast<int>(kv.get_int("tts.steps", 500));
        opt.batch_size = static_cast<int>(kv.get_int("tts.batch_size", 2));
        opt.verbose = true;
        auto model = pipeline::train_tts_from_corpus(train_corpus, cfg, opt);
        model->save(train_out);
        std::printf("saved tts checkpoint: %s\n", train_out.c_str());
      } else if (train_what == "sync") {
        auto cfg = sync_config_from(kv);
        const int steps = train_steps > 0
                              ? train_steps
                              : static_cast<int>(kv.get_int("sync.steps", 2000));
        auto expert = pipeline::train_sync_from_corpus(
            train_corpus, cfg, steps, static_cast<int>(kv.get_int("sync.batch_size", 8)),
            static_cast<uint64_t>(kv.get_int("sync.train_seed", 11)));
        expert->save(train_out);
        std::printf("saved sync checkpoint: %s\n", train_out.c_str());
      } else if (train_what == "facegen") {
        auto cfg = facegen_config_from(kv);
        auto expert = syncexpert::SyncExpert::load(train_sync_ckpt);
        expert->set_frozen(true);
        pipeline::FacegenTrainOptions opt;
        opt.steps = train_steps > 0
                        ? train_steps
                        : static_cast<int>(kv.get_int("facegen.steps", 2000));
        opt.seed = static_cast<uint64_t>(kv.get_int("facegen.train_seed", 7));
        opt.verbose = true;
        auto model = pipeline::train_facegen_from_corpus(train_corpus, cfg, *expert, opt);
        model->save(train_out);
        std::printf("saved facegen checkpoint: %s\n", train_out.c_str());
      } else {
        std::fprintf(stderr, "unknown train target: %s (expected tts|facegen|sync)\n",
                     train_what.c_str());
        return 2;
      }
    } else if (*toy_cmd) {
      toydata::ToySpec spec;
      spec.n_speakers = toy_speakers;
      spec.utterances_per_speaker = toy_utts;
      spec.seed = toy_seed;
      spec.languages.clear();
      std::istringstream langs(toy_langs);
      std::string tag;
      while (std::getline(langs, tag, ','))
        spec.languages.push_back(textfront::lang_from_string(tag));
      auto rows = toydata::build_corpus(spec, toy_out);
      std::printf("wrote %zu utterances under %s\n", rows.size(), toy_out.c_str());
    } else if (*serve_cmd) {
      pipeline::ServiceConfig scfg;
      scfg.port = serve_port;
      scfg.workers = serve_workers;
      scfg.artifact_root = serve_artifacts;
      auto factory = [&]() {
        auto p = build_pipeline(serve_tts, serve_facegen, "image_sequence");
        for (const auto& e : fs::directory_iterator(serve_sources))
          if (e.is_directory())
            p->register_source_video_dir(e.path().filename().string(), e.path().string());
        return p;
      };
      pipeline::DubService service(scfg, factory);
      service.start();
      std::printf("listening on 127.0.0.1:%d (POST /dub, GET /health)\n", service.port());
      while (true) std::this_thread::sleep_for(std::chrono::seconds(60));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
