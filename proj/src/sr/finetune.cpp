// SPDX-License-Identifier: Apache-2.0
#include "frr/sr/finetune.hpp"

#include <cmath>
#include <sstream>

#include "frr/core/error.hpp"
#include "frr/core/image.hpp"

namespace frr::sr {

torch::Tensor reconstruction_loss(const torch::Tensor& pred, const torch::Tensor& target, const std::string& kind) {
  check_same_shape(pred, target, "reconstruction_loss");
  if (kind == "l1") return (pred - target).abs().mean();
  if (kind == "l2") return (pred - target).pow(2).mean();
  throw InvalidArgument("reconstruction_loss: unknown kind '" + kind + "' (expected l1 or l2)");
}

double finetune_step(const SRBatch& batch, SRCheckpoint& ckpt, torch::optim::Optimizer& optimizer) {
  const auto r = ckpt.config().upscale;
  auto lr = batch.x_lr.dim() == 3 ? batch.x_lr.unsqueeze(0) : batch.x_lr;
  auto hr = batch.x_hr.dim() == 3 ? batch.x_hr.unsqueeze(0) : batch.x_hr;
  if (lr.dim() != 4 || hr.dim() != 4 || lr.size(0) != hr.size(0) || hr.size(2) != r * lr.size(2) ||
      hr.size(3) != r * lr.size(3)) {
    std::ostringstream os;
    os << "finetune_step: batch '" << batch.id << "' high-resolution shape " << hr.sizes() << " is not " << r
       << "x the low-resolution shape " << lr.sizes();
    throw ShapeError(os.str());
  }
  optimizer.zero_grad();
  auto loss = reconstruction_loss(ckpt.model()->forward(lr), hr, ckpt.config().loss);
  const double value = loss.item<double>();
  if (!std::isfinite(value)) throw NumericError("finetune_step: non-finite loss on batch '" + batch.id + "'");
  loss.backward();
  optimizer.step();
  return value;
}

}  // namespace frr::sr
