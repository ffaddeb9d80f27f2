// SPDX-License-Identifier: Apache-2.0
#include "frr/core/optim_state.hpp"

#include <sstream>

#include "frr/core/error.hpp"

namespace frr {

void append_adam_state(TensorArchive& archive, const torch::optim::Adam& optimizer,
                       const torch::OrderedDict<std::string, torch::Tensor>& params) {
  nlohmann::json steps = nlohmann::json::object();
  const auto& state = optimizer.state();
  for (const auto& item : params) {
    auto it = state.find(item.value().unsafeGetTensorImpl());
    if (it == state.end()) continue;
    const auto& s = static_cast<const torch::optim::AdamParamState&>(*it->second);
    steps[item.key()] = s.step();
    archive.tensors.emplace_back("adam/" + item.key() + "/exp_avg", s.exp_avg());
    archive.tensors.emplace_back("adam/" + item.key() + "/exp_avg_sq", s.exp_avg_sq());
  }
  archive.meta["adam_steps"] = steps;
}

void restore_adam_state(const TensorArchive& archive, torch::optim::Adam& optimizer,
                        const torch::OrderedDict<std::string, torch::Tensor>& params) {
  if (!archive.meta.contains("adam_steps")) return;
  const auto& steps = archive.meta.at("adam_steps");
  for (const auto& item : params) {
    if (!steps.contains(item.key())) continue;
    const auto& avg = archive.at("adam/" + item.key() + "/exp_avg");
    const auto& avg_sq = archive.at("adam/" + item.key() + "/exp_avg_sq");
    if (avg.sizes() != item.value().sizes() || avg_sq.sizes() != item.value().sizes()) {
      throw CheckpointError("optimizer state for '" + item.key() + "' does not match the parameter shape");
    }
    auto s = std::make_unique<torch::optim::AdamParamState>();
    s->step(steps.at(item.key()).get<std::int64_t>());
    s->exp_avg(avg.to(item.value().options()).clone());
    s->exp_avg_sq(avg_sq.to(item.value().options()).clone());
    optimizer.state()[item.value().unsafeGetTensorImpl()] = std::move(s);
  }
}

void load_parameters(const TensorArchive& archive, const std::string& prefix,
                     const torch::OrderedDict<std::string, torch::Tensor>& params) {
  for (const auto& item : params) {
    const auto& stored = archive.at(prefix + item.key());
    if (stored.sizes() != item.value().sizes()) {
      std::ostringstream os;
      os << "parameter '" << item.key() << "' has shape " << stored.sizes() << " in the archive but the config implies "
         << item.value().sizes();
      throw CheckpointError(os.str());
    }
  }
  torch::NoGradGuard no_grad;
  for (const auto& item : params) {
    item.value().copy_(archive.at(prefix + item.key()));
  }
}

void append_training_state(TensorArchive& archive, const TrainingSnapshot& state,
                           const torch::OrderedDict<std::string, torch::Tensor>& params) {
  if (state.optimizer != nullptr) append_adam_state(archive, *state.optimizer, params);
  if (state.ema != nullptr) state.ema->append_to(archive);
  if (state.loss_history != nullptr) {
    auto h = torch::tensor(*state.loss_history, torch::kFloat64);
    archive.tensors.emplace_back("train/loss_history", h.numel() == 0 ? torch::zeros({0}, torch::kFloat64) : h);
  }
}

void restore_training_state(const TensorArchive& archive, const TrainingRestore& state,
                            const torch::OrderedDict<std::string, torch::Tensor>& params) {
  if (state.optimizer != nullptr) restore_adam_state(archive, *state.optimizer, params);
  if (state.ema != nullptr) {
    if (!archive_has_ema(archive)) throw CheckpointError("checkpoint has no averaged weights to resume from");
    state.ema->restore_from(archive);
  }
  if (state.loss_history != nullptr) {
    const auto h = archive.at("train/loss_history").contiguous();
    state.loss_history->assign(h.data_ptr<double>(), h.data_ptr<double>() + h.numel());
  }
}

void load_selected_weights(const TensorArchive& archive, WeightSelection which,
                           const torch::OrderedDict<std::string, torch::Tensor>& params) {
  const bool averaged = which == WeightSelection::averaged_if_available && archive_has_ema(archive);
  load_parameters(archive, averaged ? kEmaPrefix : kParamPrefix, params);
}

}  // namespace frr
