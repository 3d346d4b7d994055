#include "polydub/tts/align.hpp"

#include <limits>

namespace polydub::tts {

Alignment monotonic_align(const std::vector<float>& log_lik, int t_text, int t_mel) {
  if (t_text <= 0 || t_mel <= 0)
    throw std::invalid_argument("monotonic_align: empty matrix");
  if (static_cast<size_t>(t_text) * t_mel != log_lik.size())
    throw std::invalid_argument("monotonic_align: size mismatch");
  if (t_text > t_mel) throw InfeasibleAlignment(t_text, t_mel);

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  // q[i*t_mel + j]: best path sum ending at phoneme i, frame j.
  std::vector<double> q(static_cast<size_t>(t_text) * t_mel, kNegInf);
  auto ll = [&](int i, int j) {
    return static_cast<double>(log_lik[static_cast<size_t>(i) * t_mel + j]);
  };
  for (int j = 0; j < t_mel; ++j) {
    // feasibility: i <= j and remaining phonemes fit in remaining frames
    const int imax = std::min(t_text - 1, j);
    const int imin = std::max(0, t_text - (t_mel - j));
    for (int i = imin; i <= imax; ++i) {
      double best;
      if (j == 0) {
        best = 0.0;  // i == 0 here
      } else {
        const double stay = q[static_cast<size_t>(i) * t_mel + j - 1];
        const double advance = i > 0 ? q[static_cast<size_t>(i - 1) * t_mel + j - 1] : kNegInf;
        best = stay >= advance ? stay : advance;
      }
      q[static_cast<size_t>(i) * t_mel + j] = best + ll(i, j);
    }
  }

  Alignment out;
  out.t_text = t_text;
  out.t_mel = t_mel;
  out.frame_to_phoneme.assign(static_cast<size_t>(t_mel), 0);
  out.durations.assign(static_cast<size_t>(t_text), 0);
  out.score = q[static_cast<size_t>(t_text - 1) * t_mel + t_mel - 1];

  int i = t_text - 1;
  for (int j = t_mel - 1; j >= 0; --j) {
    out.frame_to_phoneme[static_cast<size_t>(j)] = i;
    out.durations[static_cast<size_t>(i)] += 1;
    if (j > 0 && i > 0) {
      const double stay = q[static_cast<size_t>(i) * t_mel + j - 1];
      const double advance = q[static_cast<size_t>(i - 1) * t_mel + j - 1];
      if (advance > stay) --i;
    }
  }
  return out;
}

}  // namespace polydub::tts
