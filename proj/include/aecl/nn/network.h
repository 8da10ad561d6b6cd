#pragma once

#include <cstdint>
#include <vector>

#include "aecl/nn/layers.h"
#include "aecl/nn/tensor.h"

namespace aecl::nn {

/// Intermediates recorded by a forward pass; consumed by exactly one backward pass.
template <typename T>
struct Tape {
    std::vector<Tensor<T>> activations;          // [i] is the input of layer i; back() is the output
    std::vector<std::vector<int>> pool_argmax;   // per layer, empty unless MaxPool2D
    std::uint64_t network_id = 0;
    std::uint64_t version = 0;
    bool consumed = false;
};

/// Sequential stack of layers over per-sample shapes (H, W, C) or (D).
/// Shapes are resolved when the network is built; a mismatched chain never builds.
template <typename T>
class Network {
public:
    Network() = default;
    Network(Shape input_shape, std::vector<LayerSpec> layers, std::uint64_t seed);

    Network(const Network& other);
    Network& operator=(const Network& other);
    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;

    const Shape& input_shape() const { return shapes_.front(); }
    const Shape& output_shape() const { return shapes_.back(); }
    /// shapes()[i] is the per-sample input shape of layer i; shapes().back() is the output.
    const std::vector<Shape>& shapes() const { return shapes_; }
    const std::vector<LayerSpec>& layers() const { return layers_; }

    const std::vector<Tensor<T>>& parameters() const { return params_; }
    /// Mutable access invalidates outstanding tapes.
    std::vector<Tensor<T>>& mutable_parameters();
    std::vector<Tensor<T>> zero_gradients() const;
    std::size_t parameter_count() const;
    /// Index of the first parameter tensor of layer i, or -1 for parameter-free layers.
    int parameter_offset(std::size_t layer) const { return param_offset_[layer]; }

    Tensor<T> forward(const Tensor<T>& input) const;
    Tensor<T> forward(const Tensor<T>& input, Tape<T>& tape) const;

    /// Accumulates parameter gradients into grads and returns the gradient w.r.t. the input.
    Tensor<T> backward(Tape<T>& tape, const Tensor<T>& output_gradient, std::vector<Tensor<T>>& grads) const;

    template <typename U>
    Network<U> cast() const;

    std::uint64_t id() const { return id_; }
    std::uint64_t version() const { return version_; }

private:
    template <typename U>
    friend class Network;

    static std::uint64_t next_id();
    Tensor<T> run(const Tensor<T>& input, Tape<T>* tape) const;
    void check_input(const Tensor<T>& input) const;

    std::vector<LayerSpec> layers_;
    std::vector<Shape> shapes_{Shape{}};
    std::vector<int> param_offset_;
    std::vector<Tensor<T>> params_;
    std::uint64_t id_ = 0;
    std::uint64_t version_ = 0;
};

template <typename T>
template <typename U>
Network<U> Network<T>::cast() const {
    Network<U> out;
    out.layers_ = layers_;
    out.shapes_ = shapes_;
    out.param_offset_ = param_offset_;
    out.params_.reserve(params_.size());
    for (const auto& p : params_) out.params_.push_back(p.template cast<U>());
    out.id_ = Network<U>::next_id();
    return out;
}

/// Resolves the per-sample output shape of one layer, throwing std::invalid_argument on mismatch.
Shape infer_shape(const LayerSpec& spec, const Shape& in);

extern template class Network<float>;
extern template class Network<double>;

}  // namespace aecl::nn
