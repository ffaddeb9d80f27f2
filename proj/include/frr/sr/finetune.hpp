// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <torch/torch.h>

#include "frr/sr/hat.hpp"

namespace frr::sr {

struct SRBatch {
  torch::Tensor x_lr;  // N x 3 x h x w, model space
  torch::Tensor x_hr;  // N x 3 x (r h) x (r w)
  std::string id;
};

/// Mean absolute ("l1") or squared ("l2") pixel error.
torch::Tensor reconstruction_loss(const torch::Tensor& pred, const torch::Tensor& target, const std::string& kind);

/// One optimizer step on the unclamped network output. Throws ShapeError when
/// x_hr is not exactly upscale times x_lr, NumericError (naming the batch) on
/// a non-finite loss. Returns the loss before the update.
double finetune_step(const SRBatch& batch, SRCheckpoint& ckpt, torch::optim::Optimizer& optimizer);

}  // namespace frr::sr
