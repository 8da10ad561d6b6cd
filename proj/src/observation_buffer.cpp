#include "aecl/observation_buffer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace aecl {

ObservationBuffer::ObservationBuffer(std::size_t stride, std::size_t capacity, std::uint64_t seed)
    : stride_(stride), capacity_(capacity), rng_(seed) {
    if (stride_ == 0 || capacity_ == 0) throw std::invalid_argument("observation buffer: stride and capacity must be positive");
}

void ObservationBuffer::offer(const Observation& obs) {
    if (offered_++ % stride_ == 0) add(obs);
}

void ObservationBuffer::add(const Observation& obs) {
    ++kept_;
    if (frames_.size() < capacity_) {
        frames_.push_back(obs);
        return;
    }
    const std::size_t slot = std::uniform_int_distribution<std::size_t>(0, kept_ - 1)(rng_);
    if (slot < capacity_) frames_[slot] = obs;
}

ObservationBuffer::Split ObservationBuffer::split(double validation_fraction, std::uint64_t seed) const {
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw std::invalid_argument("observation buffer: validation fraction must lie in (0, 1)");
    }
    std::vector<std::size_t> order(frames_.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_val = static_cast<std::size_t>(std::lround(validation_fraction * static_cast<double>(frames_.size())));
    Split out;
    out.validation.reserve(n_val);
    out.train.reserve(frames_.size() - n_val);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_val ? out.validation : out.train).push_back(frames_[order[i]]);
    }
    return out;
}

nn::Tensor<float> stack_observations(const std::vector<Observation>& obs) {
    nn::Tensor<float> t({static_cast<int>(obs.size()), kViewSize, kViewSize, kObsChannels});
    for (std::size_t i = 0; i < obs.size(); ++i) {
        std::copy(obs[i].data.begin(), obs[i].data.end(), t.data.begin() + static_cast<std::ptrdiff_t>(i * kObsSize));
    }
    return t;
}

nn::Tensor<float> stack_observations(const std::vector<Observation>& obs, const std::vector<std::size_t>& index) {
    nn::Tensor<float> t({static_cast<int>(index.size()), kViewSize, kViewSize, kObsChannels});
    for (std::size_t i = 0; i < index.size(); ++i) {
        const auto& o = obs[index[i]];
        std::copy(o.data.begin(), o.data.end(), t.data.begin() + static_cast<std::ptrdiff_t>(i * kObsSize));
    }
    return t;
}

}  // namespace aecl
