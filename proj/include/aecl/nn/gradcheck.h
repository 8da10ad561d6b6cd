#pragma once

#include <functional>

#include "aecl/nn/loss.h"
#include "aecl/nn/network.h"

namespace aecl::nn {

using LossFn = std::function<LossResult<double>(const Tensor<double>&)>;

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    /// Parameters whose perturbation flipped a ReLU or moved a max-pool winner.
    std::size_t skipped_kinks = 0;
};

/// Compares backprop parameter gradients with central differences of step h.
/// Evaluation runs in double precision; relative error is |a - n| / max(|a| + |n|, 1e-8).
GradCheckReport grad_check(const Network<double>& net, const Tensor<double>& input, const LossFn& loss,
                           double h = 1e-4);
GradCheckReport grad_check(const Network<float>& net, const Tensor<float>& input, const LossFn& loss,
                           double h = 1e-4);

}  // namespace aecl::nn
