#include "aecl/nn/loss.h"

#include <algorithm>
#include <cmath>

namespace aecl::nn {

namespace {

template <typename T>
void check_pair(const Tensor<T>& prediction, const Tensor<T>& target) {
    if (prediction.shape != target.shape) {
        throw std::invalid_argument("bce: prediction " + shape_string(prediction.shape) + " vs target " +
                                    shape_string(target.shape));
    }
    for (T t : target.data) {
        if (!(t >= T{0} && t <= T{1})) throw std::invalid_argument("bce: target outside [0, 1]");
    }
}

double clamp_p(double p) { return std::clamp(p, kBceEpsilon, 1.0 - kBceEpsilon); }

double bce_term(double p, double t) { return -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p)); }

}  // namespace

template <typename T>
LossResult<T> bce_loss(const Tensor<T>& prediction, const Tensor<T>& target) {
    check_pair(prediction, target);
    const double n = static_cast<double>(prediction.size());
    LossResult<T> out;
    out.gradient = Tensor<T>(prediction.shape);
    double sum = 0.0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double raw = static_cast<double>(prediction.data[i]);
        const double p = clamp_p(raw);
        const double t = static_cast<double>(target.data[i]);
        sum += bce_term(p, t);
        // The clamp is flat outside its interval.
        const bool clamped = raw < kBceEpsilon || raw > 1.0 - kBceEpsilon;
        out.gradient.data[i] = clamped ? T{0} : static_cast<T>((p - t) / (p * (1.0 - p)) / n);
    }
    out.value = sum / n;
    return out;
}

template <typename T>
std::vector<double> bce_per_sample(const Tensor<T>& prediction, const Tensor<T>& target) {
    check_pair(prediction, target);
    const std::size_t per = prediction.sample_size();
    std::vector<double> out(static_cast<std::size_t>(prediction.batch()), 0.0);
    for (std::size_t s = 0; s < out.size(); ++s) {
        double sum = 0.0;
        for (std::size_t k = 0; k < per; ++k) {
            const std::size_t i = s * per + k;
            sum += bce_term(clamp_p(static_cast<double>(prediction.data[i])), static_cast<double>(target.data[i]));
        }
        out[s] = sum / static_cast<double>(per);
    }
    return out;
}

template <typename T>
std::vector<double> excess_bce_per_sample(const Tensor<T>& prediction, const Tensor<T>& target) {
    auto out = bce_per_sample(prediction, target);
    const std::size_t per = prediction.sample_size();
    for (std::size_t s = 0; s < out.size(); ++s) {
        double floor = 0.0;
        for (std::size_t k = 0; k < per; ++k) {
            const double t = static_cast<double>(target.data[s * per + k]);
            if (t > 0.0 && t < 1.0) floor -= t * std::log(t) + (1.0 - t) * std::log1p(-t);
        }
        out[s] = std::max(0.0, out[s] - floor / static_cast<double>(per));
    }
    return out;
}

template LossResult<float> bce_loss(const Tensor<float>&, const Tensor<float>&);
template LossResult<double> bce_loss(const Tensor<double>&, const Tensor<double>&);
template std::vector<double> bce_per_sample(const Tensor<float>&, const Tensor<float>&);
template std::vector<double> bce_per_sample(const Tensor<double>&, const Tensor<double>&);
template std::vector<double> excess_bce_per_sample(const Tensor<float>&, const Tensor<float>&);
template std::vector<double> excess_bce_per_sample(const Tensor<double>&, const Tensor<double>&);

}  // namespace aecl::nn
