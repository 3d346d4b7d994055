#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "polydub/image.hpp"

namespace polydub::facecrop {

struct NoFaceFound : std::runtime_error {
  explicit NoFaceFound(const std::string& what = "no face found")
      : std::runtime_error(what) {}
};

struct GeometryMismatch : std::runtime_error {
  explicit GeometryMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct LandmarkSet {
  std::vector<std::pair<float, float>> points;  // (x, y) in source-frame pixels
  std::string provider_id;
};

struct CropGeometry {
  int x0 = 0, y0 = 0, side = 0;
  float scale = 1.0f;  // side / model resolution, recorded at crop time
  bool clamped = false;
};

struct CropConfig {
  float margin_scale = 1.6f;  // square side = margin_scale * max(bbox w, h)
  float up_shift = 0.3f;      // top edge moves up by up_shift * bbox height
  int blend_margin = 4;       // paste-back blend width in pixels
  bool smooth_geometry = true;
  float smooth_alpha = 0.6f;  // EMA coefficient for per-frame geometry
};

using LandmarkProviderFn = std::function<LandmarkSet(const image::Image&)>;

void register_landmark_provider(const std::string& name, LandmarkProviderFn fn);
bool landmark_provider_registered(const std::string& name);
LandmarkSet detect_landmarks(const image::Image& frame,
                             const std::string& provider = "synthetic");

// External detector adapter: runs `command <frame.ppm>` and reads one "x y"
// line per landmark from its stdout.
LandmarkProviderFn make_subprocess_provider(const std::string& command,
                                            const std::string& provider_id);

CropGeometry expand_region(const LandmarkSet& lm, int frame_w, int frame_h,
                           const CropConfig& cfg = {});

image::Image crop(const image::Image& frame, const CropGeometry& geo, int out_size);

void paste_back(image::Image& frame, const image::Image& face, const CropGeometry& geo,
                int blend_margin);

// Exponential smoothing of per-frame geometry (alpha = weight of the new frame).
std::vector<CropGeometry> smooth_geometries(const std::vector<CropGeometry>& geos,
                                            float alpha);

}  // namespace polydub::facecrop
