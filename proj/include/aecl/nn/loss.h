#pragma once

#include <vector>

#include "aecl/nn/tensor.h"

namespace aecl::nn {

inline constexpr double kBceEpsilon = 1e-7;

template <typename T>
struct LossResult {
    double value = 0.0;
    Tensor<T> gradient;  // d(value)/d(prediction)
};

/// Mean elementwise binary cross-entropy; predictions are clamped to [eps, 1 - eps].
/// Throws std::invalid_argument on shape mismatch or targets outside [0, 1].
template <typename T>
LossResult<T> bce_loss(const Tensor<T>& prediction, const Tensor<T>& target);

/// Mean BCE of each sample (leading dimension) of a batch.
template <typename T>
std::vector<double> bce_per_sample(const Tensor<T>& prediction, const Tensor<T>& target);

/// Per-sample mean BCE minus the entropy of the target, i.e. the Bernoulli KL divergence
/// from target to prediction. Same gradient as BCE, but zero for a perfect reconstruction
/// even when targets are fractional.
template <typename T>
std::vector<double> excess_bce_per_sample(const Tensor<T>& prediction, const Tensor<T>& target);

extern template LossResult<float> bce_loss(const Tensor<float>&, const Tensor<float>&);
extern template LossResult<double> bce_loss(const Tensor<double>&, const Tensor<double>&);
extern template std::vector<double> bce_per_sample(const Tensor<float>&, const Tensor<float>&);
extern template std::vector<double> bce_per_sample(const Tensor<double>&, const Tensor<double>&);
extern template std::vector<double> excess_bce_per_sample(const Tensor<float>&, const Tensor<float>&);
extern template std::vector<double> excess_bce_per_sample(const Tensor<double>&, const Tensor<double>&);

}  // namespace aecl::nn
