#pragma once

#include <cstdint>
#include <vector>

#include "aecl/nn/tensor.h"

namespace aecl::nn {

/// Moments are kept in double precision alongside float parameters.
struct AdamState {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t t = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

template <typename T>
AdamState make_adam(const std::vector<Tensor<T>>& params, double lr = 3e-4);

/// One bias-corrected Adam update. Rejects non-finite gradients (std::domain_error)
/// before touching any parameter, and mismatched shapes (std::invalid_argument).
template <typename T>
void adam_step(std::vector<Tensor<T>>& params, const std::vector<Tensor<T>>& grads, AdamState& state);

/// Scales grads in place so their global L2 norm is at most max_norm; returns the pre-clip norm.
template <typename T>
double clip_grad_norm(std::vector<Tensor<T>>& grads, double max_norm);

}  // namespace aecl::nn
