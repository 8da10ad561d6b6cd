#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "aecl/agent.h"
#include "aecl/gridworld.h"

namespace aecl {

enum class Preset { Paper, Small };
enum class AgentSelection { Aecl, Vanilla, Both };
enum class BoundsMode { Observed, Analytic };

std::string_view to_string(Preset p);
std::string_view to_string(AgentSelection a);
std::string_view to_string(BoundsMode b);
Preset parse_preset(std::string_view s);
AgentSelection parse_agents(std::string_view s);

/// Everything that determines a run besides the code version.
struct RunConfig {
    int flow = 1;
    Preset preset = Preset::Small;
    std::vector<EnvKind> task_sequence{EnvKind::DynamicObstacles, EnvKind::LavaGap, EnvKind::DoorKey};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    AgentSelection agents = AgentSelection::Both;
    std::filesystem::path output_dir = "runs/small";

    // per-task learning
    std::int64_t budget_steps = 102400;
    std::int64_t min_steps = 81920;
    int convergence_window = 50;
    double convergence_tolerance = 0.02;
    int n_steps = 2048;
    int ppo_epochs = 10;
    int minibatch = 64;
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double clip = 0.2;
    double vf_coef = 0.5;
    double lr = 3e-4;
    double max_grad_norm = 0.5;
    std::array<double, 3> ent_coef{0.0, 0.0, 0.01};  // indexed by EnvKind

    std::size_t collection_stride = 4;
    std::size_t collection_capacity = 20000;

    int ae_max_epochs = 100;
    int ae_batch_size = 64;
    double ae_validation_fraction = 0.2;
    int ae_patience = 5;
    double ae_lr = 1e-3;
    std::size_t ae_min_observations = 5000;

    double confidence = 0.9;
    int probe_size = 32;
    int calibration_batch = 32;

    int eval_episodes_per_task = 30;
    int flow2_episodes = 150;
    int trace_length = 50;
    ActMode eval_mode = ActMode::Greedy;

    BoundsMode bounds = BoundsMode::Observed;

    static RunConfig preset_defaults(Preset p);

    EnvParams env_params(EnvKind kind) const;
    LearningSettings learning(EnvKind kind) const;
    AgentConfig agent() const;

    /// Flat INI text with one section per concern.
    std::string to_ini() const;
    /// Unknown keys are rejected; missing keys keep the preset's defaults.
    static RunConfig from_ini(const std::string& text);
    static RunConfig load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    /// Throws std::invalid_argument on inconsistent values.
    void validate() const;
};

}  // namespace aecl
