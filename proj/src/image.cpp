#include "polydub/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "polydub/common.hpp"

namespace polydub::image {

void write_ppm(const std::string& path, const Image& img) {
  if (img.c != 3) throw std::invalid_argument("write_ppm: need 3 channels");
  std::string header = "P6\n" + std::to_string(img.w) + " " + std::to_string(img.h) +
                       "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.px.size());
  for (float v : img.px) {
    const float cl = std::clamp(v, 0.0f, 1.0f);
    out.push_back(static_cast<uint8_t>(std::lrint(cl * 255.0f)));
  }
  write_binary_file(path, out);
}

Image read_ppm(const std::string& path) {
  const auto bytes = read_binary_file(path);
  size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() &&
           (bytes[pos] == ' ' || bytes[pos] == '\n' || bytes[pos] == '\t' ||
            bytes[pos] == '\r'))
      ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      ++pos;
    }
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t += static_cast<char>(bytes[pos++]);
    return t;
  };
  if (token() != "P6") throw std::runtime_error("not a P6 PPM: " + path);
  const int w = std::stoi(token());
  const int h = std::stoi(token());
  const int maxval = std::stoi(token());
  if (maxval != 255) throw std::runtime_error("unsupported PPM maxval: " + path);
  ++pos;  // single whitespace after maxval
  Image img(h, w, 3);
  if (bytes.size() - pos < img.px.size())
    throw std::runtime_error("truncated PPM: " + path);
  for (size_t i = 0; i < img.px.size(); ++i)
    img.px[i] = static_cast<float>(bytes[pos + i]) / 255.0f;
  return img;
}

float sample_bilinear(const Image& img, float y, float x, int ch) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const float fx = x - static_cast<float>(x0);
  const float fy = y - static_cast<float>(y0);
  auto clampx = [&](int v) { return std::clamp(v, 0, img.w - 1); };
  auto clampy = [&](int v) { return std::clamp(v, 0, img.h - 1); };
  const float v00 = img.at(clampy(y0), clampx(x0), ch);
  const float v01 = img.at(clampy(y0), clampx(x0 + 1), ch);
  const float v10 = img.at(clampy(y0 + 1), clampx(x0), ch);
  const float v11 = img.at(clampy(y0 + 1), clampx(x0 + 1), ch);
  const float top = v00 + fx * (v01 - v00);
  const float bot = v10 + fx * (v11 - v10);
  return top + fy * (bot - top);
}

double laplacian_sharpness(const Image& img) {
  if (img.h < 3 || img.w < 3) return 0.0;
  std::vector<float> gray(static_cast<size_t>(img.h) * img.w);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      float g = 0.0f;
      for (int ch = 0; ch < img.c; ++ch) g += img.at(y, x, ch);
      gray[static_cast<size_t>(y) * img.w + x] = g / static_cast<float>(img.c);
    }
  double acc = 0.0;
  for (int y = 1; y < img.h - 1; ++y)
    for (int x = 1; x < img.w - 1; ++x) {
      const float c = gray[static_cast<size_t>(y) * img.w + x];
      const float lap = 4.0f * c - gray[static_cast<size_t>(y - 1) * img.w + x] -
                        gray[static_cast<size_t>(y + 1) * img.w + x] -
                        gray[static_cast<size_t>(y) * img.w + x - 1] -
                        gray[static_cast<size_t>(y) * img.w + x + 1];
      acc += std::fabs(lap);
    }
  return acc / (static_cast<double>(img.h - 2) * (img.w - 2));
}

double mean_abs_diff(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("mean_abs_diff: shape mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < a.px.size(); ++i) acc += std::fabs(double(a.px[i]) - b.px[i]);
  return acc / static_cast<double>(a.px.size());
}

nn::Tensor to_tensor(const Image& img) {
  nn::Tensor t = nn::Tensor::zeros({img.c, img.h, img.w});
  for (int ch = 0; ch < img.c; ++ch)
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x)
        t.data()[(static_cast<size_t>(ch) * img.h + y) * img.w + x] = img.at(y, x, ch);
  return t;
}

Image from_tensor(const nn::Tensor& t) {
  if (t.ndim() != 3) throw std::invalid_argument("from_tensor: need [C,H,W]");
  Image img(t.dim(1), t.dim(2), t.dim(0));
  for (int ch = 0; ch < img.c; ++ch)
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x)
        img.at(y, x, ch) = std::clamp(
            t.data()[(static_cast<size_t>(ch) * img.h + y) * img.w + x], 0.0f, 1.0f);
  return img;
}

}  // namespace polydub::image
