// SPDX-License-Identifier: Apache-2.0
#include "frr/diffusion/schedule.hpp"

#include <cmath>
#include <cstdio>

#include "frr/core/error.hpp"

namespace frr::diffusion {

std::string ScheduleSpec::fingerprint() const {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s:T=%lld:%.17g:%.17g", interpolation.c_str(),
                static_cast<long long>(steps), beta_min, beta_max);
  return buf;
}

void to_json(nlohmann::json& j, const ScheduleSpec& s) {
  j = {{"T", s.steps}, {"beta_min", s.beta_min}, {"beta_max", s.beta_max}, {"interpolation", s.interpolation}};
}

void from_json(const nlohmann::json& j, ScheduleSpec& s) {
  s.steps = j.at("T").get<std::int64_t>();
  s.beta_min = j.at("beta_min").get<double>();
  s.beta_max = j.at("beta_max").get<double>();
  s.interpolation = j.value("interpolation", std::string("linear"));
}

NoiseSchedule::NoiseSchedule(const ScheduleSpec& spec) : spec_(spec) {
  require(spec.steps >= 1, "schedule: T must be >= 1, got " + std::to_string(spec.steps));
  require(spec.beta_min > 0.0 && spec.beta_max < 1.0, "schedule: beta bounds must lie in (0, 1)");
  require(spec.beta_min <= spec.beta_max, "schedule: beta_min exceeds beta_max");
  require(spec.interpolation == "linear", "schedule: only linear interpolation is supported");

  const auto n = static_cast<std::size_t>(spec.steps);
  beta_.resize(n);
  alpha_.resize(n);
  alpha_bar_.resize(n);
  posterior_variance_.resize(n);
  posterior_std_.resize(n);

  double running = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double frac = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    beta_[i] = spec.beta_min + frac * (spec.beta_max - spec.beta_min);
    alpha_[i] = 1.0 - beta_[i];
    const double prev = running;
    running *= alpha_[i];
    alpha_bar_[i] = running;
    posterior_variance_[i] = i == 0 ? 0.0 : (1.0 - prev) * beta_[i] / (1.0 - running);
    posterior_std_[i] = std::sqrt(posterior_variance_[i]);
  }
}

double NoiseSchedule::alpha_bar_prev(std::int64_t t) const {
  check_step(t);
  return t == 1 ? 1.0 : alpha_bar_[static_cast<std::size_t>(t - 2)];
}

void NoiseSchedule::check_step(std::int64_t t) const {
  if (t < 1 || t > spec_.steps) {
    throw InvalidArgument("step t=" + std::to_string(t) + " outside [1, " + std::to_string(spec_.steps) + "]");
  }
}

NoiseSchedule build_schedule(std::int64_t steps, double beta_min, double beta_max) {
  return NoiseSchedule(ScheduleSpec{steps, beta_min, beta_max, "linear"});
}

}  // namespace frr::diffusion
