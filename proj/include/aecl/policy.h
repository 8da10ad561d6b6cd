#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "aecl/gridworld.h"
#include "aecl/nn/adam.h"
#include "aecl/nn/network.h"
#include "aecl/observation_buffer.h"

namespace aecl {

/// PPO hyperparameters. Defaults follow Stable-Baselines3.
struct PpoConfig {
    int n_steps = 2048;
    int epochs = 10;
    int minibatch = 64;
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double clip = 0.2;
    double vf_coef = 0.5;
    double ent_coef = 0.0;
    double lr = 3e-4;
    double max_grad_norm = 0.5;
};

/// When train_policy may stop before its step budget.
struct ConvergenceRule {
    int window = 50;             // episodes per window
    double tolerance = 0.02;     // relative change between consecutive windows
    std::int64_t min_steps = 0;  // no convergence check before this many steps
};

/// Actor-critic over 7x7x3 observations: a shared conv torso feeding a
/// 5-way action head and a scalar value head.
class PolicyModel {
public:
    static constexpr int kFeatures = 128;

    explicit PolicyModel(std::uint64_t seed);
    PolicyModel(nn::Network<float> torso, nn::Network<float> actor, nn::Network<float> critic);

    struct Batch {
        nn::Tensor<float> logits;  // (N, 5)
        std::vector<float> values;
    };
    Batch evaluate(const nn::Tensor<float>& observations) const;

    const nn::Network<float>& torso() const { return torso_; }
    const nn::Network<float>& actor() const { return actor_; }
    const nn::Network<float>& critic() const { return critic_; }
    /// Mutable access for training; throws std::logic_error once frozen.
    nn::Network<float>& mutable_torso();
    nn::Network<float>& mutable_actor();
    nn::Network<float>& mutable_critic();

    bool frozen() const { return frozen_; }
    void freeze() { frozen_ = true; }

    /// FNV-1a over every parameter bit pattern.
    std::uint64_t fingerprint() const;

    void save(const std::filesystem::path& path) const;
    static PolicyModel load(const std::filesystem::path& path);

private:
    void require_unfrozen() const;

    nn::Network<float> torso_;
    nn::Network<float> actor_;
    nn::Network<float> critic_;
    bool frozen_ = false;
};

enum class ActMode { Sample, Greedy };

struct ActResult {
    int action = 0;
    double log_prob = 0.0;
    double value = 0.0;
};

/// Throws std::domain_error when the logits are not finite.
ActResult act(const PolicyModel& model, const Observation& obs, ActMode mode, std::mt19937_64& rng);

/// Numerically stable log-softmax.
std::array<double, kNumActions> log_softmax(std::span<const float> logits);

struct RolloutBuffer {
    std::vector<Observation> observations;
    std::vector<int> actions;
    std::vector<double> log_probs;
    std::vector<double> values;
    std::vector<double> rewards;
    std::vector<bool> dones;  // the episode ended on this step

    std::size_t size() const { return actions.size(); }
    void clear();
    void push(const Observation& obs, int action, double log_prob, double value, double reward, bool done);
};

struct Advantages {
    std::vector<double> advantages;  // raw GAE, not normalized
    std::vector<double> returns;     // advantages + values
};

/// GAE over the buffer; bootstrap_value is V of the state after the last step
/// (ignored when that step ended its episode).
Advantages compute_gae(const RolloutBuffer& buffer, double gamma, double lambda, double bootstrap_value);

/// Shifts and scales to zero mean and unit (population) std; a constant input maps to zeros.
void normalize_advantages(std::vector<double>& adv);

/// min(r * A, clip(r, 1 - eps, 1 + eps) * A).
double clipped_surrogate(double ratio, double advantage, double clip);

struct UpdateDiagnostics {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double approx_kl = 0.0;
    double clip_fraction = 0.0;
};

/// Optimizer state for the three networks of a PolicyModel.
struct PolicyOptimizer {
    nn::AdamState torso;
    nn::AdamState actor;
    nn::AdamState critic;

    static PolicyOptimizer for_model(const PolicyModel& model, double lr);
};

/// Clipped-surrogate PPO epochs over shuffled minibatches.
/// Throws std::logic_error for a frozen model.
UpdateDiagnostics ppo_update(PolicyModel& model, PolicyOptimizer& opt, const RolloutBuffer& buffer,
                             const Advantages& adv, const PpoConfig& cfg, std::mt19937_64& rng);

struct CurvePoint {
    std::int64_t step = 0;  // environment steps when the episode ended
    double episode_return = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
};

struct LearningCurve {
    std::vector<CurvePoint> points;
    void write_csv(const std::filesystem::path& path) const;
};

/// True when the last two windows of returns differ by less than the relative tolerance.
bool has_converged(const std::vector<double>& returns, const ConvergenceRule& rule);

struct TrainingSession {
    std::int64_t steps = 0;
    bool converged = false;
    LearningCurve curve;
};

/// Runs rollout/update cycles on env until budget_steps or convergence. Every
/// visited frame is offered to collect when it is non-null. The model is not frozen.
TrainingSession run_ppo(PolicyModel& model, PolicyOptimizer& opt, Environment& env, const PpoConfig& cfg,
                        std::int64_t budget_steps, const ConvergenceRule& rule, std::uint64_t seed,
                        ObservationBuffer* collect);

struct ObservationCollection {
    std::size_t stride = 4;
    std::size_t capacity = 20000;
};

struct TrainedPolicy {
    PolicyModel model;  // frozen
    ObservationBuffer observations;
    TrainingSession session;
};

/// Trains a fresh policy on env and freezes it. Throws std::invalid_argument when the
/// budget cannot fill a single rollout.
TrainedPolicy train_policy(Environment& env, const PpoConfig& cfg, std::int64_t budget_steps,
                           const ConvergenceRule& rule, const ObservationCollection& collection, std::uint64_t seed);

struct EpisodeResult {
    double episode_return = 0.0;
    int length = 0;
};

/// Plays one full episode from a fresh reset.
EpisodeResult play_episode(const PolicyModel& model, Environment& env, ActMode mode, std::mt19937_64& rng);

}  // namespace aecl
