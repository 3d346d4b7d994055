#pragma once

#include <stdexcept>
#include <vector>

namespace polydub::tts {

struct InfeasibleAlignment : std::runtime_error {
  InfeasibleAlignment(int t_text, int t_mel)
      : std::runtime_error("infeasible alignment: t_text=" + std::to_string(t_text) +
                           " > t_mel=" + std::to_string(t_mel)) {}
};

// Monotonic, surjective, non-skipping assignment of mel frames to phonemes.
struct Alignment {
  int t_text = 0;
  int t_mel = 0;
  std::vector<int> frame_to_phoneme;  // size t_mel, non-decreasing, covers 0..t_text-1
  std::vector<int> durations;         // size t_text, every entry >= 1
  double score = 0.0;                 // summed log-likelihood along the path

  bool assigned(int phoneme, int frame) const {
    return frame_to_phoneme[static_cast<size_t>(frame)] == phoneme;
  }
};

// log_lik is row-major [t_text x t_mel]. Dynamic program maximizing the path
// sum; throws InfeasibleAlignment when t_text > t_mel.
Alignment monotonic_align(const std::vector<float>& log_lik, int t_text, int t_mel);

}  // namespace polydub::tts
