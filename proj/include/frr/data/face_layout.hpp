// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <torch/torch.h>

namespace frr::data {

/// A point in fractional image coordinates, (0, 0) top-left, (1, 1) bottom-right.
struct FracPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Where the retouching simulator looks for facial regions. All lengths are
/// fractions of the image side. The defaults describe an aligned, centred
/// portrait such as the synthetic faces of face_synth.hpp or FFHQ crops.
struct FaceLayout {
  FracPoint face_center{0.5, 0.54};
  double face_rx = 0.30;
  double face_ry = 0.38;
  FracPoint left_eye{0.39, 0.46};
  FracPoint right_eye{0.61, 0.46};
  double eye_radius = 0.055;
  /// Vertical distance from an eye centre up to its brow.
  double brow_offset = 0.075;
  FracPoint left_cheek{0.26, 0.66};
  FracPoint right_cheek{0.74, 0.66};
  FracPoint chin{0.5, 0.9};
  FracPoint mouth{0.5, 0.76};
};

/// Plug-in point for a real landmark detector.
class LandmarkProvider {
 public:
  virtual ~LandmarkProvider() = default;
  /// `image` is 3 x H x W file space.
  virtual FaceLayout locate(const torch::Tensor& image) const = 0;
};

class FixedLandmarks final : public LandmarkProvider {
 public:
  explicit FixedLandmarks(FaceLayout layout = {}) : layout_(layout) {}
  FaceLayout locate(const torch::Tensor&) const override { return layout_; }

 private:
  FaceLayout layout_;
};

}  // namespace frr::data
