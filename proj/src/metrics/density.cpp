// SPDX-License-Identifier: Apache-2.0
#include "frr/metrics/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "frr/core/error.hpp"

namespace frr::metrics {

namespace {

// Linear-interpolation quantile of sorted data (the common "type 7" rule).
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void check_scores(const std::vector<double>& scores) {
  if (scores.size() < 2) {
    throw InvalidArgument("similarity density needs at least 2 scores, got " + std::to_string(scores.size()));
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw InvalidArgument("similarity density: non-finite score");
  }
}

}  // namespace

double silverman_bandwidth(const std::vector<double>& scores) {
  check_scores(scores);
  const double n = static_cast<double>(scores.size());
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= n;
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  auto sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  if (!(spread > 0.0)) spread = std::abs(scores.front());
  if (!(spread > 0.0)) spread = 1.0;
  return 0.9 * spread * std::pow(n, -0.2);
}

std::vector<DensityPoint> similarity_density(const std::vector<double>& scores, std::optional<double> bandwidth,
                                             int grid_points) {
  check_scores(scores);
  require(grid_points >= 2, "similarity density: need at least 2 grid points");
  const double h = bandwidth ? *bandwidth : silverman_bandwidth(scores);
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("similarity density: bandwidth must be positive");

  const auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
  const double lo = *mn - 3.0 * h, hi = *mx + 3.0 * h;
  const double norm = 1.0 / (static_cast<double>(scores.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  std::vector<DensityPoint> curve(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    double sum = 0.0;
    for (double s : scores) {
      const double u = (x - s) / h;
      sum += std::exp(-0.5 * u * u);
    }
    curve[static_cast<std::size_t>(i)] = {x, sum * norm};
  }
  return curve;
}

double integrate_density(const std::vector<DensityPoint>& curve) {
  double total = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    total += 0.5 * (curve[i].density + curve[i - 1].density) * (curve[i].score - curve[i - 1].score);
  }
  return total;
}

}  // namespace frr::metrics
