// SPDX-License-Identifier: Apache-2.0
#include "frr/data/face_synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include <opencv2/imgproc.hpp>

#include "frr/core/error.hpp"
#include "frr/core/image.hpp"

namespace frr::data {

namespace {

class Rand {
 public:
  explicit Rand(std::uint64_t seed) : eng_(seed) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double jitter(double v, double amount) { return v + uniform(-amount, amount); }

 private:
  std::mt19937_64 eng_;
};

cv::Scalar rgb(double r, double g, double b) { return {r, g, b}; }

cv::Scalar scale(const cv::Scalar& c, double k) { return {c[0] * k, c[1] * k, c[2] * k}; }

}  // namespace

SyntheticFace render_synthetic_face(std::uint64_t seed, std::int64_t size) {
  require(size >= 16, "render_synthetic_face: size must be at least 16");
  Rand rnd(seed);
  constexpr int kSuper = 4;
  const int s = static_cast<int>(size) * kSuper;
  const double S = static_cast<double>(s);
  auto px = [&](double frac) { return static_cast<int>(std::lround(frac * S)); };
  auto pt = [&](const FracPoint& p) { return cv::Point(px(p.x), px(p.y)); };

  FaceLayout L;
  L.face_center = {rnd.jitter(0.5, 0.015), rnd.jitter(0.54, 0.015)};
  L.face_rx = rnd.jitter(0.30, 0.02);
  L.face_ry = rnd.jitter(0.38, 0.02);
  const double eye_dx = rnd.jitter(0.11, 0.01);
  const double eye_y = L.face_center.y + rnd.jitter(-0.08, 0.01);
  L.left_eye = {L.face_center.x - eye_dx, eye_y};
  L.right_eye = {L.face_center.x + eye_dx, eye_y};
  L.eye_radius = rnd.jitter(0.05, 0.006);
  L.brow_offset = rnd.jitter(0.075, 0.008);
  L.mouth = {L.face_center.x, L.face_center.y + rnd.jitter(0.22, 0.015)};
  L.chin = {L.face_center.x, L.face_center.y + L.face_ry};
  L.left_cheek = {L.face_center.x - L.face_rx * 0.8, L.face_center.y + 0.12};
  L.right_cheek = {L.face_center.x + L.face_rx * 0.8, L.face_center.y + 0.12};

  const double tone = rnd.uniform(0.0, 1.0);
  const cv::Scalar skin = rgb(120 + 110 * tone, 85 + 100 * tone, 60 + 95 * tone);
  const double hair_k = rnd.uniform(0.0, 1.0);
  const cv::Scalar hair = rgb(25 + 120 * hair_k, 18 + 70 * hair_k, 12 + 35 * hair_k);
  const cv::Scalar bg_top = rgb(rnd.uniform(60, 220), rnd.uniform(60, 220), rnd.uniform(60, 220));
  const cv::Scalar bg_bottom = scale(bg_top, rnd.uniform(0.55, 0.9));
  const cv::Scalar iris = rgb(rnd.uniform(30, 120), rnd.uniform(40, 110), rnd.uniform(20, 90));
  const cv::Scalar lips = rgb(rnd.uniform(150, 200), rnd.uniform(60, 95), rnd.uniform(60, 95));

  cv::Mat canvas(s, s, CV_8UC3);
  for (int y = 0; y < s; ++y) {
    const double f = y / S;
    const cv::Scalar c = scale(bg_top, 1.0 - f) + scale(bg_bottom, f);
    canvas.row(y).setTo(c);
  }
  const auto lt = cv::LINE_AA;
  const cv::Point fc = pt(L.face_center);
  const cv::Size face_axes(px(L.face_rx), px(L.face_ry));

  // Hair mass behind the head, neck, head, fringe.
  cv::ellipse(canvas, fc - cv::Point(0, px(0.04)), cv::Size(px(L.face_rx * 1.15), px(L.face_ry * 1.08)), 0, 0, 360,
              hair, cv::FILLED, lt);
  cv::rectangle(canvas, cv::Point(fc.x - px(0.11), fc.y + px(0.2)), cv::Point(fc.x + px(0.11), s), scale(skin, 0.82),
                cv::FILLED, lt);
  cv::ellipse(canvas, fc, face_axes, 0, 0, 360, skin, cv::FILLED, lt);
  cv::ellipse(canvas, fc - cv::Point(0, px(L.face_ry * rnd.uniform(0.85, 0.95))),
              cv::Size(px(L.face_rx * 1.02), px(L.face_ry * rnd.uniform(0.3, 0.4))), rnd.uniform(-6, 6), 180, 360,
              hair, cv::FILLED, lt);

  const int er = px(L.eye_radius);
  for (const auto& eye : {L.left_eye, L.right_eye}) {
    const cv::Point c = pt(eye);
    cv::ellipse(canvas, c, cv::Size(er, std::max(1, er * 11 / 20)), 0, 0, 360, rgb(238, 234, 228), cv::FILLED, lt);
    cv::circle(canvas, c, std::max(1, er * 9 / 20), iris, cv::FILLED, lt);
    cv::circle(canvas, c, std::max(1, er / 5), rgb(15, 12, 10), cv::FILLED, lt);
    cv::ellipse(canvas, c, cv::Size(er, std::max(1, er * 11 / 20)), 0, 190, 350, scale(skin, 0.45),
                std::max(1, s / 160), lt);
    const cv::Point brow(c.x, c.y - px(L.brow_offset) + er / 2);
    cv::ellipse(canvas, brow, cv::Size(er * 13 / 10, er / 2), 0, 195, 345, scale(hair, 0.9), std::max(2, s / 55), lt);
  }

  // Nose: bridge shadow and nostrils.
  const cv::Point nose(fc.x, fc.y + px(0.07));
  cv::ellipse(canvas, nose, cv::Size(px(0.025), px(0.055)), 0, 0, 360, scale(skin, 0.9), cv::FILLED, lt);
  cv::circle(canvas, nose + cv::Point(-px(0.02), px(0.04)), std::max(1, px(0.008)), scale(skin, 0.5), cv::FILLED, lt);
  cv::circle(canvas, nose + cv::Point(px(0.02), px(0.04)), std::max(1, px(0.008)), scale(skin, 0.5), cv::FILLED, lt);

  const cv::Point mouth = pt(L.mouth);
  const int mw = px(rnd.uniform(0.075, 0.1));
  cv::ellipse(canvas, mouth, cv::Size(mw, px(0.028)), 0, 0, 360, lips, cv::FILLED, lt);
  cv::line(canvas, mouth - cv::Point(mw, 0), mouth + cv::Point(mw, 0), scale(lips, 0.5), std::max(1, s / 200), lt);

  cv::Mat small;
  cv::resize(canvas, small, cv::Size(static_cast<int>(size), static_cast<int>(size)), 0, 0, cv::INTER_AREA);
  cv::Mat img;
  small.convertTo(img, CV_32FC3);

  // Spherical shading and fine skin texture inside the face ellipse.
  cv::Mat noise(img.rows, img.cols, CV_32F);
  std::mt19937_64 noise_eng(seed ^ 0xA5A5A5A5ULL);
  for (int y = 0; y < noise.rows; ++y) {
    for (int x = 0; x < noise.cols; ++x) {
      noise.at<float>(y, x) = static_cast<float>((static_cast<double>(noise_eng() >> 11) * 0x1.0p-53 - 0.5) * 14.0);
    }
  }
  cv::GaussianBlur(noise, noise, cv::Size(3, 3), 0.7);
  const double cx = L.face_center.x * size, cy = L.face_center.y * size;
  const double rx = L.face_rx * size, ry = L.face_ry * size;
  for (int y = 0; y < img.rows; ++y) {
    for (int x = 0; x < img.cols; ++x) {
      const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
      const double d2 = dx * dx + dy * dy;
      if (d2 >= 1.0) continue;
      const double shade = 1.0 - 0.22 * d2 + 0.06 * (-dx - dy);
      auto& p = img.at<cv::Vec3f>(y, x);
      for (int c = 0; c < 3; ++c) {
        p[c] = static_cast<float>(std::clamp(p[c] * shade + noise.at<float>(y, x), 0.0, 255.0));
      }
    }
  }

  auto tensor = torch::from_blob(img.data, {img.rows, img.cols, 3}, torch::kFloat32).clone().permute({2, 0, 1});
  return {quantize_8bit(tensor.contiguous()), L};
}

void write_synthetic_faces(const std::filesystem::path& dir, std::int64_t count, std::uint64_t seed,
                           std::int64_t size) {
  std::filesystem::create_directories(dir);
  for (std::int64_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "face_%04lld.png", static_cast<long long>(i));
    write_png(dir / name, render_synthetic_face(seed + static_cast<std::uint64_t>(i), size).image);
  }
}

}  // namespace frr::data
