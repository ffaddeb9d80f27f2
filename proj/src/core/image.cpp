// SPDX-License-Identifier: Apache-2.0
#include "frr/core/image.hpp"

#include <fstream>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "frr/core/error.hpp"

namespace frr {

namespace {

std::string shape_str(const torch::Tensor& t) {
  std::ostringstream os;
  os << t.sizes();
  return os.str();
}

// 3 x H x W file-space float tensor -> 8-bit BGR Mat.
cv::Mat to_bgr8(const torch::Tensor& file_space) {
  check_rgb(file_space, "encode");
  require<ShapeError>(file_space.dim() == 3, "encode expects a single 3 x H x W image");
  auto hwc = file_space.detach()
                 .to(torch::kFloat64)
                 .round()
                 .clamp(0.0, 255.0)
                 .to(torch::kUInt8)
                 .permute({1, 2, 0})
                 .contiguous();
  const int h = static_cast<int>(hwc.size(0));
  const int w = static_cast<int>(hwc.size(1));
  cv::Mat rgb(h, w, CV_8UC3, hwc.data_ptr<std::uint8_t>());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

}  // namespace

void check_same_shape(const torch::Tensor& a, const torch::Tensor& b, const std::string& what) {
  if (!a.defined() || !b.defined() || a.sizes() != b.sizes()) {
    throw ShapeError(what + ": shape mismatch " + (a.defined() ? shape_str(a) : "<undefined>") +
                     " vs " + (b.defined() ? shape_str(b) : "<undefined>"));
  }
}

void check_rgb(const torch::Tensor& img, const std::string& what) {
  const bool ok = img.defined() && (img.dim() == 3 || img.dim() == 4) &&
                  img.size(img.dim() - 3) == 3;
  if (!ok) {
    throw ShapeError(what + ": expected 3 x H x W or N x 3 x H x W, got " +
                     (img.defined() ? shape_str(img) : "<undefined>"));
  }
}

torch::Tensor to_model_space(const torch::Tensor& file_space) { return file_space / 127.5 - 1.0; }

torch::Tensor to_file_space(const torch::Tensor& model_space) { return (model_space + 1.0) * 127.5; }

torch::Tensor decode_image(std::span<const std::uint8_t> bytes) {
  cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat bgr = cv::imdecode(buf, cv::IMREAD_COLOR);
  if (bgr.empty()) throw IoError("image payload could not be decoded");
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  auto hwc = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8).clone();
  return hwc.permute({2, 0, 1}).to(torch::kFloat32).contiguous();
}

torch::Tensor read_image(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return decode_image(bytes);
  } catch (const IoError&) {
    throw IoError("cannot decode image " + path.string());
  }
}

std::vector<std::uint8_t> encode_png(const torch::Tensor& file_space) {
  std::vector<std::uint8_t> out;
  // Compression level is pinned so that the byte stream never depends on
  // OpenCV defaults.
  const std::vector<int> params{cv::IMWRITE_PNG_COMPRESSION, 6};
  if (!cv::imencode(".png", to_bgr8(file_space), out, params)) {
    throw IoError("PNG encoding failed");
  }
  return out;
}

void write_png(const std::filesystem::path& path, const torch::Tensor& file_space) {
  write_bytes_atomic(path, encode_png(file_space));
}

torch::Tensor quantize_8bit(const torch::Tensor& file_space) {
  return file_space.round().clamp(0.0, 255.0);
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_bytes_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace frr
