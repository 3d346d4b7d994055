#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "polydub/facecrop/facecrop.hpp"
#include "polydub/facegen/facegen.hpp"
#include "polydub/pipeline/pipeline.hpp"
#include "polydub/syncexpert/syncexpert.hpp"
#include "polydub/toydata/toydata.hpp"
#include "polydub/tts/tts.hpp"

namespace py = pybind11;
using namespace polydub;

namespace {

image::Image image_from_array(const py::array_t<float, py::array::c_style>& a) {
  if (a.ndim() != 3) throw std::invalid_argument("image must be HxWxC float32");
  image::Image img(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                   static_cast<int>(a.shape(2)));
  std::copy(a.data(), a.data() + a.size(), img.px.begin());
  return img;
}

py::array_t<float> image_to_array(const image::Image& img) {
  py::array_t<float> out({img.h, img.w, img.c});
  std::copy(img.px.begin(), img.px.end(), out.mutable_data());
  return out;
}

textfront::Lang parse_lang(const std::string& tag) {
  return textfront::lang_from_string(tag);
}

}  // namespace

PYBIND11_MODULE(polydub, m) {
  m.doc() = "Multilingual talking-face dubbing toolkit: text front-end, "
            "alignment, crop/paste geometry, and the toy data generators.";

  // --- text front-end ---
  m.def("clean_text", [](const std::string& text, const std::string& lang) {
    return textfront::clean_text(text, parse_lang(lang));
  });
  m.def("normalize_text", [](const std::string& text, const std::string& lang) {
    return textfront::normalize_text(text, parse_lang(lang));
  });
  m.def("grapheme_to_phoneme", [](const std::string& text, const std::string& lang) {
    return textfront::grapheme_to_phoneme(text, parse_lang(lang)).symbols;
  });
  m.def("phoneme_ids", [](const std::string& text, const std::string& lang) {
    return textfront::text_to_ids(text, parse_lang(lang)).ids;
  });
  m.def("inventory_symbols", [](const std::string& lang) {
    return textfront::inventory(parse_lang(lang)).symbols;
  });

  // --- alignment / schedules / regularizers ---
  m.def("lambda_schedule", &tts::lambda_schedule, py::arg("progress"), py::arg("gamma"));
  m.def("monotonic_align",
        [](const py::array_t<float, py::array::c_style>& log_lik) {
          if (log_lik.ndim() != 2)
            throw std::invalid_argument("log_lik must be [t_text, t_mel]");
          const int t_text = static_cast<int>(log_lik.shape(0));
          const int t_mel = static_cast<int>(log_lik.shape(1));
          std::vector<float> ll(log_lik.data(), log_lik.data() + log_lik.size());
          auto a = tts::monotonic_align(ll, t_text, t_mel);
          py::array_t<int> path(t_mel);
          std::copy(a.frame_to_phoneme.begin(), a.frame_to_phoneme.end(),
                    path.mutable_data());
          return py::make_tuple(path, a.durations, a.score);
        });
  m.def("speaker_mean_penalty",
        [](const py::array_t<float, py::array::c_style>& emb) {
          if (emb.ndim() != 2) throw std::invalid_argument("need [n, dim]");
          nn::Tensor t = nn::Tensor::from(
              {static_cast<int>(emb.shape(0)), static_cast<int>(emb.shape(1))},
              std::vector<float>(emb.data(), emb.data() + emb.size()));
          return tts::speaker_mean_penalty(t).item();
        });

  // --- face crop geometry ---
  py::class_<facecrop::CropGeometry>(m, "CropGeometry")
      .def_readonly("x0", &facecrop::CropGeometry::x0)
      .def_readonly("y0", &facecrop::CropGeometry::y0)
      .def_readonly("side", &facecrop::CropGeometry::side)
      .def_readonly("clamped", &facecrop::CropGeometry::clamped);

  m.def("expand_region",
        [](const std::vector<std::pair<float, float>>& points, int frame_w, int frame_h,
           float margin_scale, float up_shift) {
          facecrop::LandmarkSet lm;
          lm.points = points;
          lm.provider_id = "python";
          facecrop::CropConfig cfg;
          cfg.margin_scale = margin_scale;
          cfg.up_shift = up_shift;
          return facecrop::expand_region(lm, frame_w, frame_h, cfg);
        },
        py::arg("points"), py::arg("frame_w"), py::arg("frame_h"),
        py::arg("margin_scale") = 1.6f, py::arg("up_shift") = 0.3f);
  m.def("crop", [](const py::array_t<float, py::array::c_style>& frame,
                   const facecrop::CropGeometry& geo, int out_size) {
    return image_to_array(facecrop::crop(image_from_array(frame), geo, out_size));
  });
  m.def("paste_back", [](const py::array_t<float, py::array::c_style>& frame,
                         const py::array_t<float, py::array::c_style>& face,
                         const facecrop::CropGeometry& geo, int blend_margin) {
    image::Image f = image_from_array(frame);
    facecrop::paste_back(f, image_from_array(face), geo, blend_margin);
    return image_to_array(f);
  });
  m.def("detect_landmarks", [](const py::array_t<float, py::array::c_style>& frame) {
    toydata::register_builtin_landmark_provider();
    return facecrop::detect_landmarks(image_from_array(frame), "synthetic").points;
  });

  // --- facegen utilities ---
  m.def("augment",
        [](const py::array_t<float, py::array::c_style>& frame, float dx, float dy,
           float angle, float zoom) {
          facegen::AugmentParams p{dx, dy, angle, zoom};
          return image_to_array(facegen::augment(image_from_array(frame), p));
        },
        py::arg("frame"), py::arg("dx") = 0.0f, py::arg("dy") = 0.0f,
        py::arg("angle") = 0.0f, py::arg("zoom") = 1.0f);

  // --- audio / toy data ---
  m.def("render_voice", [](const std::string& text, const std::string& lang,
                           uint64_t speaker_seed) {
    auto seq = textfront::grapheme_to_phoneme(
        textfront::normalize_text(textfront::clean_text(text, parse_lang(lang)),
                                  parse_lang(lang)),
        parse_lang(lang));
    auto wave = toydata::render_voice(seq, speaker_seed);
    py::array_t<float> out(static_cast<py::ssize_t>(wave.samples.size()));
    std::copy(wave.samples.begin(), wave.samples.end(), out.mutable_data());
    return out;
  });
  m.def("mel_spectrogram",
        [](const py::array_t<float, py::array::c_style>& samples, int sample_rate,
           int n_mels) {
          audio::MelConfig mc;
          mc.sample_rate = sample_rate;
          mc.n_mels = n_mels;
          audio::MelBasis basis(mc);
          audio::Waveform w;
          w.sample_rate = sample_rate;
          w.samples.assign(samples.data(), samples.data() + samples.size());
          auto mel = audio::mel_spectrogram(w, basis);
          py::array_t<float> out({mel.t, mel.bins});
          std::copy(mel.data.begin(), mel.data.end(), out.mutable_data());
          return out;
        },
        py::arg("samples"), py::arg("sample_rate") = 22050, py::arg("n_mels") = 40);
  m.def("build_toy_corpus",
        [](const std::string& out_dir, int speakers_per_language,
           const std::vector<std::string>& languages, int utterances_per_speaker,
           uint64_t seed) {
          toydata::ToySpec spec;
          spec.n_speakers = speakers_per_language;
          spec.languages.clear();
          for (const auto& tag : languages) spec.languages.push_back(parse_lang(tag));
          spec.utterances_per_speaker = utterances_per_speaker;
          spec.seed = seed;
          auto rows = toydata::build_corpus(spec, out_dir);
          py::list out;
          for (const auto& r : rows) {
            py::dict d;
            d["utt_id"] = r.utt_id;
            d["audio_path"] = r.audio_path;
            d["video_path"] = r.video_path;
            d["text"] = r.text;
            d["speaker_id"] = r.speaker_id;
            d["language"] = r.language;
            out.append(d);
          }
          return out;
        },
        py::arg("out_dir"), py::arg("speakers_per_language") = 2,
        py::arg("languages") = std::vector<std::string>{"ko", "en"},
        py::arg("utterances_per_speaker") = 5, py::arg("seed") = 1);

  m.def("sync_loss", [](const py::array_t<float>& v, const py::array_t<float>& a,
                        bool in_sync) {
    nn::Tensor tv = nn::Tensor::from({static_cast<int>(v.size())},
                                     std::vector<float>(v.data(), v.data() + v.size()));
    nn::Tensor ta = nn::Tensor::from({static_cast<int>(a.size())},
                                     std::vector<float>(a.data(), a.data() + a.size()));
    return syncexpert::sync_loss(tv, ta, in_sync).item();
  });
}
