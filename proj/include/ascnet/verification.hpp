#pragma once

#include <cstdint>

#include "ascnet/grad_check.hpp"
#include "ascnet/loss.hpp"

namespace ascnet {

/// The small model used for end-to-end gradient verification.
ModelConfig tiny_model_config();

/// Gradient check of the total loss with respect to every parameter of a
/// freshly built double-precision model on a random batch. Dropout stays
/// active with masks replayed from the same seed on every evaluation.
GradCheckResult check_model_gradients(const ModelConfig& config, const LossFlags& flags, std::uint64_t seed,
                                      double eps, int batch = 3);

}  // namespace ascnet
