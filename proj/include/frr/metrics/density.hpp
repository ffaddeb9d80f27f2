// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

namespace frr::metrics {

struct DensityPoint {
  double score;
  double density;
};

inline constexpr int kDensityGridPoints = 256;

/// Silverman's rule of thumb, 0.9 min(sd, IQR / 1.34) n^(-1/5). When that
/// spread is zero it falls back to sd, then |x_0|, then 1.
double silverman_bandwidth(const std::vector<double>& scores);

/// Gaussian kernel density estimate on a uniform grid over
/// [min - 3h, max + 3h]. Throws InvalidArgument for fewer than two scores,
/// non-finite scores or a non-positive bandwidth.
std::vector<DensityPoint> similarity_density(const std::vector<double>& scores,
                                             std::optional<double> bandwidth = std::nullopt,
                                             int grid_points = kDensityGridPoints);

/// Trapezoid-rule integral of a density curve.
double integrate_density(const std::vector<DensityPoint>& curve);

}  // namespace frr::metrics
