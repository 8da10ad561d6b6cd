#include "aecl/nn/gradcheck.h"

#include <algorithm>
#include <cmath>

namespace aecl::nn {

namespace {

// Which side of every non-differentiable point the forward pass landed on.
std::vector<int> kink_signature(const Network<double>& net, const Tape<double>& tape) {
    std::vector<int> sig;
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
        const auto& spec = net.layers()[i];
        if (const auto* a = std::get_if<Activation>(&spec); a && a->kind == ActivationKind::Relu) {
            for (double v : tape.activations[i].data) sig.push_back(v > 0.0 ? 1 : 0);
        } else if (std::holds_alternative<MaxPool2D>(spec)) {
            sig.insert(sig.end(), tape.pool_argmax[i].begin(), tape.pool_argmax[i].end());
        }
    }
    return sig;
}

}  // namespace

GradCheckReport grad_check(const Network<double>& net_in, const Tensor<double>& input, const LossFn& loss,
                           double h) {
    Network<double> net = net_in;
    Tape<double> tape;
    const auto out = net.forward(input, tape);
    const auto baseline = kink_signature(net, tape);
    auto grads = net.zero_gradients();
    net.backward(tape, loss(out).gradient, grads);

    GradCheckReport report;
    for (std::size_t p = 0; p < grads.size(); ++p) {
        for (std::size_t k = 0; k < grads[p].size(); ++k) {
            const double original = net.parameters()[p].data[k];
            double values[2];
            bool kink = false;
            for (int side = 0; side < 2; ++side) {
                net.mutable_parameters()[p].data[k] = original + (side == 0 ? h : -h);
                Tape<double> probe;
                values[side] = loss(net.forward(input, probe)).value;
                kink = kink || kink_signature(net, probe) != baseline;
            }
            net.mutable_parameters()[p].data[k] = original;
            if (kink) {
                ++report.skipped_kinks;
                continue;
            }
            const double numeric = (values[0] - values[1]) / (2.0 * h);
            const double analytic = grads[p].data[k];
            const double denom = std::max(std::abs(analytic) + std::abs(numeric), 1e-8);
            report.max_relative_error = std::max(report.max_relative_error, std::abs(analytic - numeric) / denom);
            ++report.checked;
        }
    }
    return report;
}

GradCheckReport grad_check(const Network<float>& net, const Tensor<float>& input, const LossFn& loss, double h) {
    return grad_check(net.cast<double>(), input.cast<double>(), loss, h);
}

}  // namespace aecl::nn
