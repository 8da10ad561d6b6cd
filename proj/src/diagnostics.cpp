#include "aecl/diagnostics.h"

#include <algorithm>
#include <random>

#include "aecl/nn/gradcheck.h"

namespace aecl {

namespace {

nn::Tensor<double> uniform(nn::Shape shape, std::mt19937_64& rng, double lo, double hi) {
    nn::Tensor<double> t(std::move(shape));
    std::uniform_real_distribution<double> d(lo, hi);
    for (auto& v : t.data) v = d(rng);
    return t;
}

nn::LossResult<double> half_sum_squares(const nn::Tensor<double>& y) {
    nn::LossResult<double> r;
    r.gradient = y;
    for (double v : y.data) r.value += 0.5 * v * v;
    return r;
}

}  // namespace

GradCheckSuite run_gradcheck_suite(int instances, std::uint64_t seed) {
    using namespace nn;
    GradCheckSuite s;
    s.instances = instances;
    std::mt19937_64 rng(seed);
    const ActivationKind acts[] = {ActivationKind::Relu, ActivationKind::Sigmoid, ActivationKind::Tanh};
    for (int i = 0; i < instances; ++i) {
        std::uniform_int_distribution<int> width(2, 8);
        const int in = width(rng), hidden = width(rng), out = width(rng);
        const Network<double> dense({in}, {Dense{in, hidden}, Activation{acts[i % 3]}, Dense{hidden, out},
                                           Activation{acts[(i + 1) % 3]}},
                                    rng());
        s.dense_max_error = std::max(
            s.dense_max_error, grad_check(dense, uniform({3, in}, rng, -1.0, 1.0), half_sum_squares).max_relative_error);

        const int side = 4 + i % 3, channels = 1 + i % 2;
        const Network<double> conv({side, side, channels},
                                   {Conv2D{3}, Activation{}, MaxPool2D{}, Conv2DTranspose{2}, Activation{},
                                    Crop2D{side, side}, Conv2D{channels}, Activation{ActivationKind::Sigmoid}},
                                   rng());
        const auto x = uniform({2, side, side, channels}, rng, -1.0, 1.0);
        const auto target = uniform({2, side, side, channels}, rng, 0.0, 1.0);
        s.conv_max_error = std::max(
            s.conv_max_error,
            grad_check(conv, x, [&](const Tensor<double>& y) { return bce_loss(y, target); }).max_relative_error);
    }
    return s;
}

}  // namespace aecl
