#pragma once

#include <string>
#include <variant>

namespace aecl::nn {

struct Dense {
    int in = 0;
    int out = 0;
};
/// 3x3 kernel, stride 1, zero "same" padding.
struct Conv2D {
    int filters = 0;
};
/// 3x3 kernel, stride 2; doubles height and width.
struct Conv2DTranspose {
    int filters = 0;
};
/// 2x2 window, stride 2, ceil mode (odd edges pool a partial window).
struct MaxPool2D {};
enum class ActivationKind { Relu, Sigmoid, Tanh };
struct Activation {
    ActivationKind kind = ActivationKind::Relu;
};
struct Flatten {};
/// Keeps a centered height x width window (offset rounds down).
struct Crop2D {
    int height = 0;
    int width = 0;
};

using LayerSpec = std::variant<Dense, Conv2D, Conv2DTranspose, MaxPool2D, Activation, Flatten, Crop2D>;

std::string describe(const LayerSpec& spec);

inline bool has_parameters(const LayerSpec& spec) {
    return std::holds_alternative<Dense>(spec) || std::holds_alternative<Conv2D>(spec) ||
           std::holds_alternative<Conv2DTranspose>(spec);
}

}  // namespace aecl::nn
