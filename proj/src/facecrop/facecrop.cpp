#include "polydub/facecrop/facecrop.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <sstream>
#include <unistd.h>

#include "polydub/common.hpp"

namespace polydub::facecrop {

namespace {

std::map<std::string, LandmarkProviderFn>& registry() {
  static std::map<std::string, LandmarkProviderFn> r;
  return r;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void register_landmark_provider(const std::string& name, LandmarkProviderFn fn) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  registry()[name] = std::move(fn);
}

bool landmark_provider_registered(const std::string& name) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  return registry().count(name) != 0;
}

LandmarkSet detect_landmarks(const image::Image& frame, const std::string& provider) {
  LandmarkProviderFn fn;
  {
    std::lock_guard<std::mutex> lock(registry_mutex());
    auto it = registry().find(provider);
    if (it == registry().end())
      throw std::runtime_error("landmark provider not registered: " + provider);
    fn = it->second;
  }
  LandmarkSet lm = fn(frame);
  if (lm.points.size() < 5)
    throw NoFaceFound("provider returned fewer than 5 landmarks");
  for (const auto& [x, y] : lm.points)
    if (x < 0 || y < 0 || x >= static_cast<float>(frame.w) ||
        y >= static_cast<float>(frame.h))
      throw NoFaceFound("landmark outside frame bounds");
  return lm;
}

LandmarkProviderFn make_subprocess_provider(const std::string& command,
                                            const std::string& provider_id) {
  return [command, provider_id](const image::Image& frame) {
    static int counter = 0;
    const std::string path =
        "/tmp/polydub_lm_" + std::to_string(::getpid()) + "_" +
        std::to_string(counter++) + ".ppm";
    image::write_ppm(path, frame);
    const std::string cmd = command + " " + path;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) {
      std::remove(path.c_str());
      throw std::runtime_error("failed to launch landmark detector: " + command);
    }
    std::string output;
    char buf[256];
    while (std::fgets(buf, sizeof(buf), pipe)) output += buf;
    const int rc = ::pclose(pipe);
    std::remove(path.c_str());
    if (rc != 0) throw NoFaceFound("external detector exited with status " +
                                   std::to_string(rc));
    LandmarkSet lm;
    lm.provider_id = provider_id;
    std::istringstream iss(output);
    std::string line;
    while (std::getline(iss, line)) {
      std::istringstream ls(line);
      float x, y;
      if (ls >> x >> y) lm.points.emplace_back(x, y);
    }
    return lm;
  };
}

CropGeometry expand_region(const LandmarkSet& lm, int frame_w, int frame_h,
                           const CropConfig& cfg) {
  if (lm.points.empty()) throw std::invalid_argument("expand_region: no landmarks");
  float x_min = lm.points[0].first, x_max = x_min;
  float y_min = lm.points[0].second, y_max = y_min;
  for (const auto& [x, y] : lm.points) {
    x_min = std::min(x_min, x);
    x_max = std::max(x_max, x);
    y_min = std::min(y_min, y);
    y_max = std::max(y_max, y);
  }
  const float w = x_max - x_min, h = y_max - y_min;
  CropGeometry geo;
  geo.side = static_cast<int>(std::llround(cfg.margin_scale * std::max(w, h)));
  geo.side = std::max(geo.side, 2);
  const float cx = 0.5f * (x_min + x_max);
  geo.x0 = static_cast<int>(std::llround(cx - geo.side / 2.0f));
  geo.y0 = static_cast<int>(std::llround(y_min - cfg.up_shift * h));

  if (geo.side > std::min(frame_w, frame_h)) {
    geo.side = std::min(frame_w, frame_h);
    geo.clamped = true;
  }
  if (geo.x0 < 0 || geo.x0 + geo.side > frame_w) {
    geo.x0 = std::clamp(geo.x0, 0, frame_w - geo.side);
    geo.clamped = true;
  }
  if (geo.y0 < 0 || geo.y0 + geo.side > frame_h) {
    geo.y0 = std::clamp(geo.y0, 0, frame_h - geo.side);
    geo.clamped = true;
  }
  return geo;
}

image::Image crop(const image::Image& frame, const CropGeometry& geo, int out_size) {
  image::Image out(out_size, out_size, frame.c);
  const float ratio = static_cast<float>(geo.side) / static_cast<float>(out_size);
  if (geo.side == out_size) {
    // pure copy, bit-exact
    for (int y = 0; y < out_size; ++y)
      for (int x = 0; x < out_size; ++x)
        for (int ch = 0; ch < frame.c; ++ch)
          out.at(y, x, ch) = frame.at(
              std::clamp(geo.y0 + y, 0, frame.h - 1),
              std::clamp(geo.x0 + x, 0, frame.w - 1), ch);
    return out;
  }
  for (int y = 0; y < out_size; ++y) {
    const float sy = (static_cast<float>(y) + 0.5f) * ratio - 0.5f + geo.y0;
    for (int x = 0; x < out_size; ++x) {
      const float sx = (static_cast<float>(x) + 0.5f) * ratio - 0.5f + geo.x0;
      for (int ch = 0; ch < frame.c; ++ch)
        out.at(y, x, ch) = image::sample_bilinear(frame, sy, sx, ch);
    }
  }
  return out;
}

void paste_back(image::Image& frame, const image::Image& face, const CropGeometry& geo,
                int blend_margin) {
  if (face.h != face.w || face.c != frame.c)
    throw GeometryMismatch("paste_back: face must be square with matching channels");
  if (geo.side <= 0 || geo.x0 < 0 || geo.y0 < 0 || geo.x0 + geo.side > frame.w ||
      geo.y0 + geo.side > frame.h)
    throw GeometryMismatch("paste_back: geometry outside frame");

  const int S = face.h;
  const float ratio = static_cast<float>(S) / static_cast<float>(geo.side);
  for (int y = 0; y < geo.side; ++y) {
    for (int x = 0; x < geo.side; ++x) {
      float v[4];
      if (face.c > 4) throw GeometryMismatch("paste_back: too many channels");
      if (geo.side == S) {
        for (int ch = 0; ch < face.c; ++ch) v[ch] = face.at(y, x, ch);
      } else {
        const float sy = (static_cast<float>(y) + 0.5f) * ratio - 0.5f;
        const float sx = (static_cast<float>(x) + 0.5f) * ratio - 0.5f;
        for (int ch = 0; ch < face.c; ++ch)
          v[ch] = image::sample_bilinear(face, sy, sx, ch);
      }
      float alpha = 1.0f;
      if (blend_margin > 0) {
        const int d = std::min(std::min(x, geo.side - 1 - x),
                               std::min(y, geo.side - 1 - y));
        alpha = std::min(1.0f, static_cast<float>(d) / static_cast<float>(blend_margin));
      }
      for (int ch = 0; ch < face.c; ++ch) {
        float& dst = frame.at(geo.y0 + y, geo.x0 + x, ch);
        dst = alpha == 1.0f ? v[ch] : alpha * v[ch] + (1.0f - alpha) * dst;
      }
    }
  }
}

std::vector<CropGeometry> smooth_geometries(const std::vector<CropGeometry>& geos,
                                            float alpha) {
  std::vector<CropGeometry> out;
  out.reserve(geos.size());
  float sx = 0, sy = 0, ss = 0;
  for (size_t i = 0; i < geos.size(); ++i) {
    if (i == 0) {
      sx = static_cast<float>(geos[i].x0);
      sy = static_cast<float>(geos[i].y0);
      ss = static_cast<float>(geos[i].side);
    } else {
      sx = alpha * geos[i].x0 + (1.0f - alpha) * sx;
      sy = alpha * geos[i].y0 + (1.0f - alpha) * sy;
      ss = alpha * geos[i].side + (1.0f - alpha) * ss;
    }
    CropGeometry g = geos[i];
    g.x0 = static_cast<int>(std::llround(sx));
    g.y0 = static_cast<int>(std::llround(sy));
    g.side = static_cast<int>(std::llround(ss));
    out.push_back(g);
  }
  return out;
}

}  // namespace polydub::facecrop
