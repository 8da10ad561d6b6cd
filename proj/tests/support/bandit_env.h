#pragma once

#include "aecl/gridworld.h"

namespace aecl::test_support {

// One-step bandit with a single fixed observation: the paying arm returns 1,
// every other action returns 0.
class Bandit final : public Environment {
public:
    explicit Bandit(int paying_arm) : arm_(paying_arm) {
        for (int i = 0; i < kObsSize; i += kObsChannels) obs_.data[static_cast<std::size_t>(i)] = 1.0f;
    }

    Observation reset() override {
        done_ = false;
        return obs_;
    }

    StepOutcome step(int action) override {
        StepOutcome out;
        out.observation = obs_;
        out.reward = action == arm_ ? 1.0f : 0.0f;
        out.terminated = true;
        done_ = true;
        return out;
    }

    const Observation& observation() const override { return obs_; }
    bool done() const override { return done_; }

private:
    int arm_;
    Observation obs_{};
    bool done_ = true;
};

}  // namespace aecl::test_support
