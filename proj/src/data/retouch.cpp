// SPDX-License-Identifier: Apache-2.0
#include "frr/data/retouch.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <opencv2/imgproc.hpp>

#include "frr/core/error.hpp"
#include "frr/core/image.hpp"

namespace frr::data {

namespace {

struct Names {
  RetouchOp op;
  std::string_view name;
};

constexpr std::array<Names, 6> kNames{{{RetouchOp::eye_enlarging, "eye_enlarging"},
                                       {RetouchOp::face_slimming, "face_slimming"},
                                       {RetouchOp::skin_whitening, "skin_whitening"},
                                       {RetouchOp::skin_smoothing, "skin_smoothing"},
                                       {RetouchOp::eyebrow_shaping, "eyebrow_shaping"},
                                       {RetouchOp::face_shrinking, "face_shrinking"}}};

struct Px {
  double x, y;
};

// Region geometry in pixels, after seeded jitter.
struct Geometry {
  double side;
  Px face, left_eye, right_eye, left_cheek, right_cheek;
  double face_rx, face_ry, eye_r, brow_offset;
};

Geometry make_geometry(const FaceLayout& l, int w, int h, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  const double side = std::min(w, h);
  auto jit = [&]() { return (static_cast<double>(eng() >> 11) * 0x1.0p-53 - 0.5) * 0.016 * side; };
  auto at = [&](const FracPoint& p) { return Px{p.x * w + jit(), p.y * h + jit()}; };
  Geometry g;
  g.side = side;
  g.face = at(l.face_center);
  g.left_eye = at(l.left_eye);
  g.right_eye = at(l.right_eye);
  g.left_cheek = at(l.left_cheek);
  g.right_cheek = at(l.right_cheek);
  g.face_rx = l.face_rx * w;
  g.face_ry = l.face_ry * h;
  g.eye_r = l.eye_radius * side;
  g.brow_offset = l.brow_offset * h;
  return g;
}

cv::Mat to_mat(const torch::Tensor& img) {
  auto hwc = img.detach().to(torch::kFloat32).permute({1, 2, 0}).contiguous();
  cv::Mat m(static_cast<int>(hwc.size(0)), static_cast<int>(hwc.size(1)), CV_32FC3, hwc.data_ptr<float>());
  return m.clone();
}

torch::Tensor to_tensor(const cv::Mat& m) {
  auto t = torch::from_blob(m.data, {m.rows, m.cols, 3}, torch::kFloat32).clone();
  return t.permute({2, 0, 1}).contiguous();
}

// Soft elliptical mask of the face: 1 inside, linear ramp over the rim.
cv::Mat face_mask(const Geometry& g, int w, int h) {
  cv::Mat m(h, w, CV_32F);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = (x + 0.5 - g.face.x) / (g.face_rx * 1.05);
      const double dy = (y + 0.5 - g.face.y) / (g.face_ry * 1.05);
      m.at<float>(y, x) = static_cast<float>(std::clamp((1.0 - (dx * dx + dy * dy)) / 0.2, 0.0, 1.0));
    }
  }
  return m;
}

cv::Mat blend(const cv::Mat& base, const cv::Mat& target, const cv::Mat& mask, double amount) {
  cv::Mat out = base.clone();
  for (int y = 0; y < base.rows; ++y) {
    for (int x = 0; x < base.cols; ++x) {
      const double k = amount * mask.at<float>(y, x);
      if (k == 0.0) continue;
      const auto& b = base.at<cv::Vec3f>(y, x);
      const auto& t = target.at<cv::Vec3f>(y, x);
      auto& o = out.at<cv::Vec3f>(y, x);
      for (int c = 0; c < 3; ++c) o[c] = static_cast<float>(b[c] + k * (t[c] - b[c]));
    }
  }
  return out;
}

// Backward-mapped warp: out(p) = in(src(p)).
template <class SourceFn>
cv::Mat warp(const cv::Mat& img, SourceFn&& src) {
  cv::Mat mx(img.rows, img.cols, CV_32F), my(img.rows, img.cols, CV_32F);
  for (int y = 0; y < img.rows; ++y) {
    for (int x = 0; x < img.cols; ++x) {
      const Px s = src(Px{static_cast<double>(x), static_cast<double>(y)});
      mx.at<float>(y, x) = static_cast<float>(s.x);
      my.at<float>(y, x) = static_cast<float>(s.y);
    }
  }
  cv::Mat out;
  cv::remap(img, out, mx, my, cv::INTER_LINEAR, cv::BORDER_REPLICATE);
  return out;
}

// Radial scaling inside a disc: src = c + d (1 + strength (1 - r^2/R^2)).
// Negative strength magnifies, positive strength contracts.
cv::Mat radial_scale(const cv::Mat& img, Px c, double radius, double strength) {
  const double r2max = radius * radius;
  return warp(img, [&](Px p) {
    const double dx = p.x - c.x, dy = p.y - c.y;
    const double r2 = dx * dx + dy * dy;
    if (r2 >= r2max) return p;
    const double k = 1.0 + strength * (1.0 - r2 / r2max);
    return Px{c.x + dx * k, c.y + dy * k};
  });
}

// Interactive local translation warp: content near `c` moves by `v`, fading
// to zero at `radius`.
cv::Mat local_translate(const cv::Mat& img, Px c, Px v, double radius) {
  const double r2max = radius * radius;
  const double v2 = v.x * v.x + v.y * v.y;
  return warp(img, [&](Px p) {
    const double dx = p.x - c.x, dy = p.y - c.y;
    const double r2 = dx * dx + dy * dy;
    if (r2 >= r2max) return p;
    const double ratio = std::pow((r2max - r2) / (r2max - r2 + v2), 2.0);
    return Px{p.x - ratio * v.x, p.y - ratio * v.y};
  });
}

cv::Mat skin_smoothing(const cv::Mat& img, const Geometry& g, double s) {
  const double radius = std::max(1.0, 0.03 * g.side * s);
  const int d = 2 * static_cast<int>(std::ceil(radius)) + 1;
  cv::Mat filtered;
  cv::bilateralFilter(img, filtered, d, 10.0 + 35.0 * s, radius);
  return blend(img, filtered, face_mask(g, img.cols, img.rows), s);
}

cv::Mat skin_whitening(const cv::Mat& img, const Geometry& g, double s) {
  const double gamma = 1.0 + 1.2 * s;
  cv::Mat lifted = img.clone();
  lifted.forEach<cv::Vec3f>([&](cv::Vec3f& p, const int*) {
    for (int c = 0; c < 3; ++c) {
      const double v = std::clamp(p[c] / 255.0, 0.0, 1.0);
      p[c] = static_cast<float>(255.0 * (1.0 - std::pow(1.0 - v, gamma)));
    }
  });
  return blend(img, lifted, face_mask(g, img.cols, img.rows), 1.0);
}

cv::Mat eye_enlarging(const cv::Mat& img, const Geometry& g, double s) {
  cv::Mat out = radial_scale(img, g.left_eye, 2.2 * g.eye_r, -0.35 * s);
  return radial_scale(out, g.right_eye, 2.2 * g.eye_r, -0.35 * s);
}

cv::Mat face_slimming(const cv::Mat& img, const Geometry& g, double s) {
  const double shift = 0.06 * g.side * s;
  const double radius = 0.2 * g.side;
  cv::Mat out = local_translate(img, g.left_cheek, Px{shift, 0.0}, radius);
  return local_translate(out, g.right_cheek, Px{-shift, 0.0}, radius);
}

cv::Mat face_shrinking(const cv::Mat& img, const Geometry& g, double s) {
  return radial_scale(img, g.face, 1.25 * std::max(g.face_rx, g.face_ry), 0.12 * s);
}

cv::Mat eyebrow_shaping(const cv::Mat& img, const Geometry& g, double s) {
  cv::Mat out = img;
  for (const Px eye : {g.left_eye, g.right_eye}) {
    const Px brow{eye.x, eye.y - g.brow_offset};
    out = local_translate(out, brow, Px{0.0, -0.025 * g.side * s}, 1.8 * g.eye_r);
  }
  // Local contrast in the brow band.
  cv::Mat local_mean;
  cv::GaussianBlur(out, local_mean, cv::Size(0, 0), std::max(0.8, g.eye_r * 0.6));
  cv::Mat band(out.rows, out.cols, CV_32F, cv::Scalar(0));
  for (const Px eye : {g.left_eye, g.right_eye}) {
    const Px brow{eye.x, eye.y - g.brow_offset - 0.025 * g.side * s};
    for (int y = 0; y < out.rows; ++y) {
      for (int x = 0; x < out.cols; ++x) {
        const double dx = (x + 0.5 - brow.x) / (1.4 * g.eye_r);
        const double dy = (y + 0.5 - brow.y) / (0.6 * g.eye_r);
        band.at<float>(y, x) += static_cast<float>(std::exp(-0.5 * (dx * dx + dy * dy)));
      }
    }
  }
  cv::Mat boosted = out.clone();
  for (int y = 0; y < out.rows; ++y) {
    for (int x = 0; x < out.cols; ++x) {
      const double k = 0.8 * s * std::min(1.0f, band.at<float>(y, x));
      const auto& m = local_mean.at<cv::Vec3f>(y, x);
      auto& p = boosted.at<cv::Vec3f>(y, x);
      for (int c = 0; c < 3; ++c) p[c] = static_cast<float>(std::clamp(p[c] + k * (p[c] - m[c]), 0.0, 255.0));
    }
  }
  return boosted;
}

}  // namespace

std::string_view to_string(RetouchOp op) {
  for (const auto& n : kNames) {
    if (n.op == op) return n.name;
  }
  return "unknown";
}

RetouchOp parse_retouch_op(std::string_view name) {
  for (const auto& n : kNames) {
    if (n.name == name) return n.op;
  }
  std::string valid;
  for (const auto& n : kNames) valid += (valid.empty() ? "" : ", ") + std::string(n.name);
  throw InvalidArgument("unknown retouch operation '" + std::string(name) + "' (valid: " + valid + ")");
}

RetouchSpec default_retouch_spec() {
  RetouchSpec spec;
  for (auto op : kAllRetouchOps) spec.push_back({op, 100});
  return spec;
}

void to_json(nlohmann::json& j, const RetouchStep& s) { j = nlohmann::json::array({to_string(s.op), s.level}); }

void from_json(const nlohmann::json& j, RetouchStep& s) {
  s.op = parse_retouch_op(j.at(0).get<std::string>());
  s.level = j.at(1).get<int>();
}

torch::Tensor synthetic_retouch(const torch::Tensor& raw, const RetouchSpec& ops, std::uint64_t seed,
                                const LandmarkProvider& landmarks) {
  check_rgb(raw, "synthetic_retouch");
  require<ShapeError>(raw.dim() == 3, "synthetic_retouch expects a single 3 x H x W image");
  for (const auto& step : ops) {
    if (step.level < 0 || step.level > 100) {
      throw InvalidArgument("retouch level " + std::to_string(step.level) + " for " + std::string(to_string(step.op)) +
                            " outside [0, 100]");
    }
  }
  const auto active = std::count_if(ops.begin(), ops.end(), [](const RetouchStep& s) { return s.level > 0; });
  if (active == 0) return raw.clone();

  cv::Mat img = to_mat(raw);
  const Geometry g = make_geometry(landmarks.locate(raw), img.cols, img.rows, seed);
  for (const auto& step : ops) {
    if (step.level == 0) continue;
    const double s = step.level / 100.0;
    switch (step.op) {
      case RetouchOp::skin_smoothing: img = skin_smoothing(img, g, s); break;
      case RetouchOp::skin_whitening: img = skin_whitening(img, g, s); break;
      case RetouchOp::eye_enlarging: img = eye_enlarging(img, g, s); break;
      case RetouchOp::face_slimming: img = face_slimming(img, g, s); break;
      case RetouchOp::face_shrinking: img = face_shrinking(img, g, s); break;
      case RetouchOp::eyebrow_shaping: img = eyebrow_shaping(img, g, s); break;
    }
  }
  return to_tensor(img).clamp(0.0, 255.0).to(raw.scalar_type());
}

}  // namespace frr::data
