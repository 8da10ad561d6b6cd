#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace aecl {

enum class EnvKind : int { DynamicObstacles = 0, LavaGap = 1, DoorKey = 2 };

inline constexpr std::array<EnvKind, 3> kAllKinds = {EnvKind::DynamicObstacles, EnvKind::LavaGap,
                                                     EnvKind::DoorKey};

std::string_view to_string(EnvKind kind);
EnvKind parse_env_kind(std::string_view name);

// Shared action set; pickup/toggle have no effect outside DoorKey.
enum class Action : int { TurnLeft = 0, TurnRight = 1, Forward = 2, Pickup = 3, Toggle = 4 };
inline constexpr int kNumActions = 5;

// Object/color/state codes follow the Minigrid encoding.
enum class Object : std::uint8_t {
    Unseen = 0,
    Empty = 1,
    Wall = 2,
    Floor = 3,
    Door = 4,
    Key = 5,
    Ball = 6,
    Box = 7,
    Goal = 8,
    Lava = 9,
    Agent = 10,
};
enum class Color : std::uint8_t { Red = 0, Green = 1, Blue = 2, Purple = 3, Yellow = 4, Grey = 5 };
enum class DoorState : std::uint8_t { Open = 0, Closed = 1, Locked = 2 };

inline constexpr int kMaxObjectCode = 10;
inline constexpr int kMaxColorCode = 5;
inline constexpr int kMaxStateCode = 2;

struct Cell {
    Object object = Object::Empty;
    Color color = Color::Red;
    std::uint8_t state = 0;

    friend bool operator==(const Cell&, const Cell&) = default;
};

inline constexpr int kViewSize = 7;
inline constexpr int kObsChannels = 3;
inline constexpr int kObsSize = kViewSize * kViewSize * kObsChannels;

/// Agent-centric 7x7x3 view, row-major (row, column, channel), values in [0,1].
/// Row 6 column 3 is the agent's own cell; row 0 is the farthest row ahead.
struct Observation {
    std::array<float, kObsSize> data{};

    float at(int row, int col, int channel) const {
        return data[(row * kViewSize + col) * kObsChannels + channel];
    }
    friend bool operator==(const Observation&, const Observation&) = default;
};

struct Position {
    int x = 0;
    int y = 0;
    friend bool operator==(const Position&, const Position&) = default;
};

struct EnvParams {
    EnvKind kind = EnvKind::DynamicObstacles;
    int width = 8;
    int height = 8;
    int max_steps = 0;    // 0 selects 4 * width * height
    int n_obstacles = 0;  // DynamicObstacles only; 0 selects the Minigrid default for the size

    int effective_max_steps() const { return max_steps > 0 ? max_steps : 4 * width * height; }
    int effective_obstacles() const;

    /// Paper-scale sizes: 8x8 DynamicObstacles/DoorKey, 7x7 LavaGap.
    static EnvParams paper(EnvKind kind);
    /// Fast preset: 6x6 DynamicObstacles/DoorKey, 5x5 LavaGap.
    static EnvParams small(EnvKind kind);
};

struct GridState {
    EnvParams params;
    std::vector<Cell> grid;  // width * height, index y * width + x
    Position agent_pos;
    int agent_dir = 0;  // 0 east, 1 south, 2 west, 3 north
    Cell carrying{Object::Empty, Color::Red, 0};
    std::vector<Position> obstacles;
    int step_count = 0;
    bool finished = false;
    std::mt19937_64 rng;

    const Cell& at(int x, int y) const { return grid[static_cast<std::size_t>(y * params.width + x)]; }
    Cell& at(int x, int y) { return grid[static_cast<std::size_t>(y * params.width + x)]; }
    bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < params.width && y < params.height; }
    Position front_pos() const;
    bool carrying_key() const { return carrying.object == Object::Key; }
};

struct StepOutcome {
    Observation observation;
    float reward = 0.0f;
    bool terminated = false;
    bool truncated = false;

    bool done() const { return terminated || truncated; }
};

/// Samples an initial layout for params.kind deterministically from seed.
GridState reset(const EnvParams& params, std::uint64_t seed);

/// Advances one tick. Throws std::logic_error when the episode is already over
/// and std::invalid_argument for an action outside the shared set.
StepOutcome step(GridState& state, int action);

Observation render_observation(const GridState& state);

/// Episodic environment as seen by a learner: observations and rewards only.
class Environment {
public:
    virtual ~Environment() = default;
    /// Starts the next episode and returns its first observation.
    virtual Observation reset() = 0;
    virtual StepOutcome step(int action) = 0;
    virtual const Observation& observation() const = 0;
    virtual bool done() const = 0;
};

/// A gridworld of one kind whose episodes are seeded from a private stream.
class GridEnvironment final : public Environment {
public:
    GridEnvironment(EnvParams params, std::uint64_t stream_seed);

    Observation reset() override;
    /// Starts an episode from an explicit layout seed.
    Observation reset_with_seed(std::uint64_t seed);
    StepOutcome step(int action) override;
    const Observation& observation() const override { return current_; }
    bool done() const override { return done_; }

    const GridState& state() const { return state_; }
    const EnvParams& params() const { return params_; }

private:
    EnvParams params_;
    std::mt19937_64 seeds_;
    GridState state_;
    Observation current_;
    bool done_ = true;
};

}  // namespace aecl
