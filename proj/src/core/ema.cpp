// SPDX-License-Identifier: Apache-2.0
#include "frr/core/ema.hpp"

#include "frr/core/error.hpp"

namespace frr {

ParameterEma::ParameterEma(const torch::OrderedDict<std::string, torch::Tensor>& params, double decay)
    : decay_(decay) {
  require<ConfigError>(decay >= 0.0 && decay < 1.0, "ema decay must lie in [0, 1)");
  torch::NoGradGuard no_grad;
  for (const auto& item : params) shadow_.emplace_back(item.key(), item.value().detach().clone());
}

void ParameterEma::update(const torch::OrderedDict<std::string, torch::Tensor>& params) {
  torch::NoGradGuard no_grad;
  for (auto& [name, avg] : shadow_) {
    const auto* p = params.find(name);
    require<ContractViolation>(p != nullptr, "ema update: parameter '" + name + "' is missing");
    avg.mul_(decay_).add_(*p, 1.0 - decay_);
  }
}

void ParameterEma::copy_to(const torch::OrderedDict<std::string, torch::Tensor>& params) const {
  torch::NoGradGuard no_grad;
  for (const auto& [name, avg] : shadow_) {
    const auto* p = params.find(name);
    require<ContractViolation>(p != nullptr, "ema copy: parameter '" + name + "' is missing");
    p->copy_(avg);
  }
}

void ParameterEma::append_to(TensorArchive& archive) const {
  for (const auto& [name, avg] : shadow_) archive.tensors.emplace_back(kEmaPrefix + name, avg);
  archive.meta["ema_decay"] = decay_;
}

void ParameterEma::restore_from(const TensorArchive& archive) {
  torch::NoGradGuard no_grad;
  for (auto& [name, avg] : shadow_) {
    const auto& stored = archive.at(kEmaPrefix + name);
    if (stored.sizes() != avg.sizes()) throw CheckpointError("averaged weight '" + name + "' has the wrong shape");
  }
  for (auto& [name, avg] : shadow_) avg.copy_(archive.at(kEmaPrefix + name));
}

bool archive_has_ema(const TensorArchive& archive) { return archive.meta.contains("ema_decay"); }

}  // namespace frr
