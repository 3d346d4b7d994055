#pragma once

#include <string>
#include <vector>

#include "polydub/nn/tensor.hpp"

namespace polydub::image {

// HWC float image, values in [0,1].
struct Image {
  int h = 0, w = 0, c = 3;
  std::vector<float> px;

  Image() = default;
  Image(int h_, int w_, int c_ = 3)
      : h(h_), w(w_), c(c_), px(static_cast<size_t>(h_) * w_ * c_, 0.0f) {}

  float& at(int y, int x, int ch) {
    return px[(static_cast<size_t>(y) * w + x) * c + ch];
  }
  float at(int y, int x, int ch) const {
    return px[(static_cast<size_t>(y) * w + x) * c + ch];
  }
  bool same_shape(const Image& o) const { return h == o.h && w == o.w && c == o.c; }
};

// Binary PPM (P6), 8-bit, the lossless frame format used across the project.
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);

// Bilinear sample with edge clamping; (y, x) in pixel coordinates.
float sample_bilinear(const Image& img, float y, float x, int ch);

// Mean absolute 4-neighbour Laplacian over the grayscale interior.
double laplacian_sharpness(const Image& img);

double mean_abs_diff(const Image& a, const Image& b);

nn::Tensor to_tensor(const Image& img);           // [C,H,W]
Image from_tensor(const nn::Tensor& t);           // [C,H,W] -> image, clamped to [0,1]

}  // namespace polydub::image
