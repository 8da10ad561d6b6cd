#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "aecl/autoencoder.h"
#include "aecl/gridworld.h"
#include "aecl/novelty.h"
#include "aecl/policy.h"

namespace aecl {

/// A frozen policy with the detector that recognises the task it was trained on.
struct PolicyAutoencoderPair {
    int id = 0;
    PolicyModel policy;
    Detector detector;
    TrainingSession policy_session;
    TrainingHistory autoencoder_history;
    std::vector<Observation> validation;  // frames held out while training the autoencoder
};

/// Append-only list of pairs. Ids are dense from 0 in creation order.
class PairRegistry {
public:
    std::size_t size() const { return pairs_.size(); }
    bool empty() const { return pairs_.empty(); }
    const PolicyAutoencoderPair& at(int id) const;

    /// Throws std::invalid_argument unless the pair's id equals size(), its policy
    /// is frozen and its autoencoder trained.
    const PolicyAutoencoderPair& append(PolicyAutoencoderPair pair);

    std::vector<const Detector*> detectors() const;

private:
    std::vector<std::unique_ptr<PolicyAutoencoderPair>> pairs_;
};

/// How the agent learns a task it has been handed. The experimenter supplies the
/// PPO settings together with the environment; routing never sees them.
struct LearningSettings {
    PpoConfig ppo;
    std::int64_t budget_steps = 100000;
    ConvergenceRule convergence;
    ObservationCollection collection;
    AutoencoderConfig autoencoder;
    double confidence = 0.9;
    int calibration_batch = 32;
};

struct AgentConfig {
    int probe_size = 32;
    ActMode act_mode = ActMode::Greedy;
};

/// An episode partway through: the opening steps taken while probing.
struct EpisodeProgress {
    Observation observation;  // the observation to act on next
    double episode_return = 0.0;
    int length = 0;
    bool done = false;
};

struct RouteResult {
    MatchDecision decision;
    int provisional_pair = -1;  // pair that drove the probe; -1 when actions were random
    std::vector<Observation> probe;
    EpisodeProgress progress;
};

/// Resets env and plays up to probe_size observations with the pair whose autoencoder
/// reconstructs the first frame best (uniformly random actions when the registry is
/// empty), then decides. The episode is not restarted.
RouteResult route_episode(const PairRegistry& registry, Environment& env, const AgentConfig& cfg,
                          std::mt19937_64& rng);

/// Plays the rest of the episode with the pair's frozen policy.
EpisodeProgress run_episode_with(const PolicyAutoencoderPair& pair, Environment& env, EpisodeProgress progress,
                                 ActMode mode, std::mt19937_64& rng);

/// Trains a policy on env, an autoencoder on the frames it saw, calibrates the
/// threshold and appends the new pair.
const PolicyAutoencoderPair& handle_novel(PairRegistry& registry, Environment& env,
                                          const LearningSettings& settings, std::uint64_t seed);

enum class Decision { Match, Novel };
std::string_view to_string(Decision d);

/// One row of the per-run episode log. true_kind is for scoring only.
struct EpisodeRecord {
    int episode_index = 0;
    EnvKind true_kind = EnvKind::DynamicObstacles;
    Decision decision = Decision::Match;
    int routed_pair_id = -1;
    double raw_return = 0.0;
    double normalized_return = 0.0;
    int episode_length = 0;
};

/// The continual-learning agent: routes every episode and, when allowed, learns
/// a new pair on a Novel decision.
class AeclAgent {
public:
    explicit AeclAgent(AgentConfig cfg) : cfg_(cfg) {}

    const PairRegistry& registry() const { return registry_; }
    const AgentConfig& config() const { return cfg_; }

    /// Learns env as a new task regardless of routing.
    const PolicyAutoencoderPair& learn(Environment& env, const LearningSettings& settings, std::uint64_t seed);

    struct Outcome {
        RouteResult route;
        int played_pair = -1;       // -1 when the episode was handed to training
        bool trained = false;
        EpisodeProgress result;     // full episode when played
    };

    /// Routes one episode. On Match the matched pair finishes it. On Novel, when
    /// learning is given, a new pair is trained on env; otherwise the provisional
    /// pair finishes it.
    Outcome play(Environment& env, std::mt19937_64& rng, const LearningSettings* learning, std::uint64_t seed);

private:
    AgentConfig cfg_;
    PairRegistry registry_;
};

/// Baseline: one policy network, trained in place on every task it is handed.
class VanillaAgent {
public:
    explicit VanillaAgent(std::uint64_t seed);

    const PolicyModel& policy() const { return model_; }
    int tasks_trained() const { return tasks_trained_; }

    /// Continues PPO on env with the same network and optimizer state.
    TrainingSession train_on(Environment& env, const LearningSettings& settings, std::uint64_t seed);

    EpisodeResult play(Environment& env, ActMode mode, std::mt19937_64& rng) const;

private:
    PolicyModel model_;
    std::optional<PolicyOptimizer> opt_;
    int tasks_trained_ = 0;
};

}  // namespace aecl
