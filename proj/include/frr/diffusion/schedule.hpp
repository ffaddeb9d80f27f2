// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace frr::diffusion {

/// The persisted identity of a schedule. Derived arrays are never stored;
/// they are recomputed from these four fields.
struct ScheduleSpec {
  std::int64_t steps = 1000;
  double beta_min = 1e-4;
  double beta_max = 0.02;
  std::string interpolation = "linear";

  /// Compact, exact text form used to refuse incompatible resumes.
  std::string fingerprint() const;
  bool operator==(const ScheduleSpec&) const = default;
};

void to_json(nlohmann::json& j, const ScheduleSpec& s);
void from_json(const nlohmann::json& j, ScheduleSpec& s);

/// Precomputed DDPM coefficients for steps t = 1..T. All accessors take the
/// 1-based step and throw InvalidArgument outside [1, T].
///
/// alpha_bar(0) is defined as 1, which makes the t = 1 posterior collapse onto
/// x0 with zero variance.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(const ScheduleSpec& spec);

  std::int64_t steps() const { return spec_.steps; }
  const ScheduleSpec& spec() const { return spec_; }

  double beta(std::int64_t t) const { return beta_[index(t)]; }
  double alpha(std::int64_t t) const { return alpha_[index(t)]; }
  double alpha_bar(std::int64_t t) const { return alpha_bar_[index(t)]; }
  /// alpha_bar(t - 1), with alpha_bar(0) = 1.
  double alpha_bar_prev(std::int64_t t) const;
  /// (1 - alpha_bar(t-1)) (1 - alpha(t)) / (1 - alpha_bar(t)).
  double posterior_variance(std::int64_t t) const { return posterior_variance_[index(t)]; }
  double posterior_std(std::int64_t t) const { return posterior_std_[index(t)]; }

  std::span<const double> betas() const { return beta_; }
  std::span<const double> alphas() const { return alpha_; }
  std::span<const double> alpha_bars() const { return alpha_bar_; }

  void check_step(std::int64_t t) const;

 private:
  std::size_t index(std::int64_t t) const {
    check_step(t);
    return static_cast<std::size_t>(t - 1);
  }

  ScheduleSpec spec_;
  std::vector<double> beta_, alpha_, alpha_bar_, posterior_variance_, posterior_std_;
};

/// Linear-in-beta schedule from beta_min at t = 1 to beta_max at t = T.
NoiseSchedule build_schedule(std::int64_t steps, double beta_min, double beta_max);

}  // namespace frr::diffusion
