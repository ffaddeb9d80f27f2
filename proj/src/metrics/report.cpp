// SPDX-License-Identifier: Apache-2.0
#include "frr/metrics/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "frr/core/error.hpp"
#include "frr/core/image.hpp"
#include "frr/metrics/quality.hpp"

namespace frr::metrics {

namespace {

nlohmann::json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

std::string format(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

MetricsReport evaluate_pairs(const std::vector<ImagePair>& pairs, const EmbedderList& embedders, bool with_density) {
  require(!pairs.empty(), "evaluate_pairs: no pairs");
  std::vector<const ImagePair*> order;
  for (const auto& p : pairs) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(), [](const ImagePair* a, const ImagePair* b) { return a->id < b->id; });

  MetricsReport report;
  for (const auto* pair : order) {
    try {
      check_same_shape(pair->raw, pair->candidate, "pair '" + pair->id + "'");
      PairMetrics m;
      m.id = pair->id;
      m.psnr = psnr(pair->raw, pair->candidate);
      m.ssim = ssim(pair->raw, pair->candidate);
      for (const auto& e : embedders) m.embed_sim[e->name()] = embedding_similarity(*e, pair->raw, pair->candidate);
      report.per_pair.push_back(std::move(m));
    } catch (const std::exception& ex) {
      report.failures.push_back({pair->id, ex.what()});
    }
  }

  auto& agg = report.aggregate;
  agg.count = report.per_pair.size();
  if (agg.count == 0) {
    agg.psnr = agg.ssim = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  const double n = static_cast<double>(agg.count);
  for (const auto& m : report.per_pair) {
    agg.psnr += m.psnr / n;
    agg.ssim += m.ssim / n;
    for (const auto& [name, v] : m.embed_sim) agg.embed_sim[name] += v / n;
  }
  if (with_density && agg.count >= 2) {
    for (const auto& e : embedders) {
      std::vector<double> scores;
      for (const auto& m : report.per_pair) scores.push_back(m.embed_sim.at(e->name()));
      report.density[e->name()] = similarity_density(scores);
    }
  }
  return report;
}

std::string report_table(const MetricsReport& report) {
  std::vector<std::string> names;
  for (const auto& [name, v] : report.aggregate.embed_sim) names.push_back(name);
  std::ostringstream os;
  os << "id\tpsnr\tssim";
  for (const auto& n : names) os << '\t' << n;
  os << '\n';
  for (const auto& m : report.per_pair) {
    os << m.id << '\t' << format(m.psnr) << '\t' << format(m.ssim);
    for (const auto& n : names) os << '\t' << format(m.embed_sim.at(n));
    os << '\n';
  }
  return os.str();
}

nlohmann::json report_json(const MetricsReport& report) {
  nlohmann::json j;
  const auto& a = report.aggregate;
  j["aggregate"] = {{"count", a.count}, {"psnr", number(a.psnr)}, {"ssim", number(a.ssim)}};
  for (const auto& [name, v] : a.embed_sim) j["aggregate"]["embed_sim"][name] = number(v);
  j["per_pair"] = nlohmann::json::array();
  for (const auto& m : report.per_pair) {
    nlohmann::json row = {{"id", m.id}, {"psnr", number(m.psnr)}, {"ssim", number(m.ssim)}};
    for (const auto& [name, v] : m.embed_sim) row["embed_sim"][name] = number(v);
    j["per_pair"].push_back(row);
  }
  j["failures"] = nlohmann::json::array();
  for (const auto& f : report.failures) j["failures"].push_back({{"id", f.id}, {"error", f.error}});
  j["failure_count"] = report.failures.size();
  j["density"] = nlohmann::json::object();
  for (const auto& [name, curve] : report.density) {
    auto& arr = j["density"][name] = nlohmann::json::array();
    for (const auto& p : curve) arr.push_back({p.score, p.density});
  }
  return j;
}

void write_report(const std::filesystem::path& table_path, const std::filesystem::path& json_path,
                  const MetricsReport& report) {
  write_text_atomic(table_path, report_table(report));
  write_text_atomic(json_path, report_json(report).dump(2) + "\n");
}

void render_density_plot(const std::map<std::string, std::vector<DensityPoint>>& series,
                         const std::filesystem::path& path, int width, int height) {
  require(width >= 200 && height >= 150, "render_density_plot: canvas too small");
  cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(255, 255, 255));
  const int left = 50, right = 20, top = 20, bottom = 40;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y1 = 0.0;
  for (const auto& [name, curve] : series) {
    for (const auto& p : curve) {
      x0 = std::min(x0, p.score);
      x1 = std::max(x1, p.score);
      y1 = std::max(y1, p.density);
    }
  }
  const cv::Scalar axis(60, 60, 60);
  cv::line(canvas, {left, height - bottom}, {width - right, height - bottom}, axis, 1, cv::LINE_AA);
  cv::line(canvas, {left, top}, {left, height - bottom}, axis, 1, cv::LINE_AA);
  auto save = [&] {
    std::vector<std::uint8_t> bytes;
    require<IoError>(cv::imencode(".png", canvas, bytes), "render_density_plot: PNG encoding failed");
    write_bytes_atomic(path, bytes);
  };
  if (series.empty() || !(x1 > x0) || !(y1 > 0.0)) return save();
  auto to_px = [&](double x, double y) {
    const double fx = (x - x0) / (x1 - x0), fy = y / y1;
    return cv::Point(left + static_cast<int>(fx * (width - left - right)),
                     height - bottom - static_cast<int>(fy * (height - top - bottom)));
  };
  const std::array<cv::Scalar, 6> palette{cv::Scalar(200, 90, 30), cv::Scalar(40, 40, 210), cv::Scalar(40, 160, 40),
                                          cv::Scalar(160, 40, 160), cv::Scalar(20, 140, 200), cv::Scalar(90, 90, 90)};
  std::size_t k = 0;
  for (const auto& [name, curve] : series) {
    const auto& colour = palette[k % palette.size()];
    std::vector<cv::Point> pts;
    for (const auto& p : curve) pts.push_back(to_px(p.score, p.density));
    cv::polylines(canvas, pts, false, colour, 2, cv::LINE_AA);
    cv::putText(canvas, name, {width - right - 180, top + 18 * static_cast<int>(k + 1)}, cv::FONT_HERSHEY_SIMPLEX,
                0.45, colour, 1, cv::LINE_AA);
    ++k;
  }
  cv::putText(canvas, format(x0), {left - 10, height - bottom + 18}, cv::FONT_HERSHEY_SIMPLEX, 0.4, axis, 1,
              cv::LINE_AA);
  cv::putText(canvas, format(x1), {width - right - 60, height - bottom + 18}, cv::FONT_HERSHEY_SIMPLEX, 0.4, axis, 1,
              cv::LINE_AA);
  cv::putText(canvas, "similarity", {width / 2 - 30, height - 8}, cv::FONT_HERSHEY_SIMPLEX, 0.45, axis, 1,
              cv::LINE_AA);
  save();
}

}  // namespace frr::metrics
