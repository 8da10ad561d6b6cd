#include "aecl/nn/adam.h"

#include <cmath>
#include <string>

namespace aecl::nn {

template <typename T>
AdamState make_adam(const std::vector<Tensor<T>>& params, double lr) {
    AdamState s;
    s.lr = lr;
    for (const auto& p : params) {
        s.m.emplace_back(p.size(), 0.0);
        s.v.emplace_back(p.size(), 0.0);
    }
    return s;
}

template <typename T>
void adam_step(std::vector<Tensor<T>>& params, const std::vector<Tensor<T>>& grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw std::invalid_argument("adam: parameter, gradient and moment lists differ in length");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != grads[i].size() || params[i].size() != state.m[i].size()) {
            throw std::invalid_argument("adam: shape mismatch at parameter " + std::to_string(i));
        }
        for (std::size_t k = 0; k < grads[i].size(); ++k) {
            if (!std::isfinite(static_cast<double>(grads[i].data[k]))) {
                throw std::domain_error("adam: non-finite gradient at parameter " + std::to_string(i) + " element " +
                                        std::to_string(k));
            }
        }
    }
    ++state.t;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& m = state.m[i];
        auto& v = state.v[i];
        auto& p = params[i].data;
        const auto& g = grads[i].data;
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double gk = static_cast<double>(g[k]);
            m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * gk;
            v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * gk * gk;
            const double update = state.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + state.epsilon);
            p[k] = static_cast<T>(static_cast<double>(p[k]) - update);
        }
    }
}

template <typename T>
double clip_grad_norm(std::vector<Tensor<T>>& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& g : grads) {
        for (T v : g.data) sq += static_cast<double>(v) * static_cast<double>(v);
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (auto& g : grads) {
            for (auto& v : g.data) v = static_cast<T>(static_cast<double>(v) * scale);
        }
    }
    return norm;
}

template AdamState make_adam(const std::vector<Tensor<float>>&, double);
template AdamState make_adam(const std::vector<Tensor<double>>&, double);
template void adam_step(std::vector<Tensor<float>>&, const std::vector<Tensor<float>>&, AdamState&);
template void adam_step(std::vector<Tensor<double>>&, const std::vector<Tensor<double>>&, AdamState&);
template double clip_grad_norm(std::vector<Tensor<float>>&, double);
template double clip_grad_norm(std::vector<Tensor<double>>&, double);

}  // namespace aecl::nn
