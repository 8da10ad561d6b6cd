#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "aecl/gridworld.h"
#include "aecl/nn/tensor.h"

namespace aecl {

/// Frames gathered while a policy trains. Keeps every stride-th offered frame and,
/// once capacity is reached, a uniform reservoir sample of all kept frames.
class ObservationBuffer {
public:
    ObservationBuffer(std::size_t stride = 4, std::size_t capacity = 20000, std::uint64_t seed = 0);

    void offer(const Observation& obs);
    void add(const Observation& obs);  // bypasses the stride

    const std::vector<Observation>& observations() const { return frames_; }
    std::size_t size() const { return frames_.size(); }
    std::size_t offered() const { return offered_; }

    struct Split {
        std::vector<Observation> train;
        std::vector<Observation> validation;
    };
    /// Shuffled split; validation gets round(fraction * size) frames.
    Split split(double validation_fraction, std::uint64_t seed) const;

private:
    std::size_t stride_;
    std::size_t capacity_;
    std::size_t offered_ = 0;
    std::size_t kept_ = 0;
    std::mt19937_64 rng_;
    std::vector<Observation> frames_;
};

/// Packs observations into an (N, 7, 7, 3) batch.
nn::Tensor<float> stack_observations(const std::vector<Observation>& obs);
nn::Tensor<float> stack_observations(const std::vector<Observation>& obs, const std::vector<std::size_t>& index);

}  // namespace aecl
