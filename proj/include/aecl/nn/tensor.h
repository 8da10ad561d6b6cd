#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aecl::nn {

using Shape = std::vector<int>;

inline std::size_t numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t acc, int d) { return acc * static_cast<std::size_t>(d); });
}

std::string shape_string(const Shape& shape);

/// Dense row-major array. Batched tensors carry the batch as their leading dimension.
template <typename T>
struct Tensor {
    Shape shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(Shape s, T fill = T{0}) : shape(std::move(s)), data(numel(shape), fill) {}
    Tensor(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
        if (data.size() != numel(shape)) {
            throw std::invalid_argument("tensor: " + std::to_string(data.size()) +
                                        " values do not fill shape " + shape_string(shape));
        }
    }

    std::size_t size() const { return data.size(); }
    int batch() const { return shape.empty() ? 0 : shape.front(); }
    /// Element count of one sample (everything after the batch dimension).
    std::size_t sample_size() const { return shape.empty() ? 0 : data.size() / static_cast<std::size_t>(shape[0]); }

    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }
    std::span<T> values() { return data; }
    std::span<const T> values() const { return data; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.assign(data.begin(), data.end());
        return out;
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

}  // namespace aecl::nn
