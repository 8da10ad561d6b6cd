#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aecl/gridworld.h"

using namespace aecl;

namespace {

int count_objects(const GridState& s, Object o) {
    int n = 0;
    for (const auto& c : s.grid) n += c.object == o ? 1 : 0;
    return n;
}

Cell cell_in_view(const Observation& obs, int row, int col) {
    return Cell{static_cast<Object>(std::lround(obs.at(row, col, 0) * kMaxObjectCode)),
                static_cast<Color>(std::lround(obs.at(row, col, 1) * kMaxColorCode)),
                static_cast<std::uint8_t>(std::lround(obs.at(row, col, 2) * kMaxStateCode))};
}

// Clears the interior and places the agent, so single mechanics can be exercised.
GridState open_room(EnvKind kind, Position agent, int dir) {
    GridState s = reset(EnvParams::paper(kind), 7);
    for (int y = 1; y < s.params.height - 1; ++y)
        for (int x = 1; x < s.params.width - 1; ++x) s.at(x, y) = Cell{};
    s.obstacles.clear();
    s.agent_pos = agent;
    s.agent_dir = dir;
    return s;
}

std::vector<Observation> random_rollout_observations(EnvKind kind, std::uint64_t seed, std::size_t count) {
    GridEnvironment env(EnvParams::paper(kind), seed);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<int> pick(0, kNumActions - 1);
    std::vector<Observation> out;
    out.push_back(env.reset());
    while (out.size() < count) {
        auto o = env.step(pick(rng));
        out.push_back(o.observation);
        if (o.done()) out.push_back(env.reset());
    }
    out.resize(count);
    return out;
}

// L2 distance between the per-element mean observations of two sets.
double mean_observation_distance(const std::vector<Observation>& a, const std::vector<Observation>& b) {
    double sq = 0.0;
    for (int k = 0; k < kObsSize; ++k) {
        double ma = 0.0, mb = 0.0;
        for (const auto& o : a) ma += o.data[k];
        for (const auto& o : b) mb += o.data[k];
        const double d = ma / static_cast<double>(a.size()) - mb / static_cast<double>(b.size());
        sq += d * d;
    }
    return std::sqrt(sq);
}

}  // namespace

TEST(GridWorldReset, SameSeedGivesIdenticalLayout) {
    for (EnvKind k : kAllKinds) {
        const auto a = reset(EnvParams::paper(k), 1234);
        const auto b = reset(EnvParams::paper(k), 1234);
        EXPECT_EQ(a.grid, b.grid) << to_string(k);
        EXPECT_EQ(a.agent_pos, b.agent_pos);
        EXPECT_EQ(a.agent_dir, b.agent_dir);
        EXPECT_EQ(render_observation(a), render_observation(b));
    }
}

TEST(GridWorldReset, DoorKeyHasOneKeyAndOneLockedDoor) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto s = reset(EnvParams::paper(EnvKind::DoorKey), seed);
        EXPECT_EQ(count_objects(s, Object::Key), 1);
        EXPECT_EQ(count_objects(s, Object::Door), 1);
        EXPECT_EQ(count_objects(s, Object::Goal), 1);
    }
}

TEST(GridWorldReset, DynamicObstaclePlacementVariesWithSeed) {
    const auto base = reset(EnvParams::paper(EnvKind::DynamicObstacles), 1);
    EXPECT_EQ(base.obstacles.size(), 4u);
    int differing = 0;
    for (std::uint64_t seed = 2; seed < 12; ++seed) {
        differing += reset(EnvParams::paper(EnvKind::DynamicObstacles), seed).obstacles != base.obstacles;
    }
    EXPECT_GE(differing, 8);
}

TEST(GridWorldReset, LavaGapLeavesExactlyOneGap) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto s = reset(EnvParams::paper(EnvKind::LavaGap), seed);
        EXPECT_EQ(count_objects(s, Object::Lava), s.params.height - 3);
    }
}

TEST(GridWorldReset, SmallPresetSizes) {
    EXPECT_EQ(EnvParams::small(EnvKind::DynamicObstacles).width, 6);
    EXPECT_EQ(EnvParams::small(EnvKind::LavaGap).width, 5);
    EXPECT_EQ(EnvParams::small(EnvKind::DoorKey).width, 6);
    EXPECT_EQ(EnvParams::paper(EnvKind::LavaGap).effective_max_steps(), 4 * 7 * 7);
    EXPECT_EQ(EnvParams::paper(EnvKind::DoorKey).effective_max_steps(), 256);
}

TEST(GridWorldStep, ForwardIntoLavaTerminatesWithZeroReward) {
    GridState s = open_room(EnvKind::LavaGap, {2, 2}, 0);
    s.at(3, 2) = Cell{Object::Lava, Color::Red, 0};
    const auto out = step(s, static_cast<int>(Action::Forward));
    EXPECT_TRUE(out.terminated);
    EXPECT_FALSE(out.truncated);
    EXPECT_EQ(out.reward, 0.0f);
}

TEST(GridWorldStep, ObstacleCollisionTerminatesWithPenalty) {
    GridState s = open_room(EnvKind::DynamicObstacles, {2, 2}, 0);
    s.at(3, 2) = Cell{Object::Ball, Color::Blue, 0};
    s.obstacles = {{3, 2}};
    const auto out = step(s, static_cast<int>(Action::Forward));
    EXPECT_TRUE(out.terminated);
    EXPECT_EQ(out.reward, -1.0f);
}

TEST(GridWorldStep, GoalRewardDecaysWithStepCount) {
    for (EnvKind k : kAllKinds) {
        GridState s = open_room(k, {2, 2}, 0);
        s.at(3, 2) = Cell{Object::Goal, Color::Green, 0};
        s.step_count = 9;
        const auto out = step(s, static_cast<int>(Action::Forward));
        ASSERT_TRUE(out.terminated) << to_string(k);
        const float expected = 1.0f - 0.9f * 10.0f / static_cast<float>(s.params.effective_max_steps());
        EXPECT_FLOAT_EQ(out.reward, expected);
    }
}

TEST(GridWorldStep, SteppingFinishedEpisodeIsRejected) {
    GridState s = open_room(EnvKind::LavaGap, {2, 2}, 0);
    s.at(3, 2) = Cell{Object::Lava, Color::Red, 0};
    step(s, static_cast<int>(Action::Forward));
    EXPECT_THROW(step(s, 0), std::logic_error);
}

TEST(GridWorldStep, ActionOutsideSetIsRejected) {
    GridState s = reset(EnvParams::paper(EnvKind::LavaGap), 3);
    EXPECT_THROW(step(s, 5), std::invalid_argument);
    EXPECT_THROW(step(s, -1), std::invalid_argument);
}

TEST(GridWorldStep, TruncatesAtMaxSteps) {
    GridState s = reset(EnvParams::paper(EnvKind::LavaGap), 3);
    StepOutcome out;
    int n = 0;
    do {
        out = step(s, static_cast<int>(Action::TurnLeft));
        ++n;
    } while (!out.done());
    EXPECT_EQ(n, s.params.effective_max_steps());
    EXPECT_TRUE(out.truncated);
    EXPECT_FALSE(out.terminated);
}

TEST(GridWorldStep, DoorKeyPickupUnlockAndPass) {
    GridState s = open_room(EnvKind::DoorKey, {2, 2}, 0);
    s.at(3, 2) = Cell{Object::Key, Color::Yellow, 0};
    s.at(2, 3) = Cell{Object::Door, Color::Yellow, static_cast<std::uint8_t>(DoorState::Locked)};
    step(s, static_cast<int>(Action::Toggle));  // facing the key, nothing to toggle
    step(s, static_cast<int>(Action::Pickup));
    ASSERT_TRUE(s.carrying_key());
    EXPECT_EQ(s.at(3, 2).object, Object::Empty);
    step(s, static_cast<int>(Action::TurnRight));  // face south, toward the door
    step(s, static_cast<int>(Action::Forward));    // locked door blocks
    EXPECT_EQ(s.agent_pos, (Position{2, 2}));
    step(s, static_cast<int>(Action::Toggle));
    EXPECT_EQ(s.at(2, 3).state, static_cast<std::uint8_t>(DoorState::Open));
    step(s, static_cast<int>(Action::Forward));
    EXPECT_EQ(s.agent_pos, (Position{2, 3}));
    // The carried key shows in the agent's own cell.
    EXPECT_EQ(cell_in_view(render_observation(s), 6, 3).object, Object::Key);
}

TEST(GridWorldStep, PickupAndToggleAreNoOpsOutsideDoorKey) {
    GridState s = open_room(EnvKind::LavaGap, {2, 2}, 0);
    s.at(3, 2) = Cell{Object::Key, Color::Yellow, 0};
    const auto before = s.grid;
    step(s, static_cast<int>(Action::Pickup));
    step(s, static_cast<int>(Action::Toggle));
    EXPECT_EQ(s.grid, before);
    EXPECT_FALSE(s.carrying_key());
}

TEST(GridWorldObservation, EgocentricEncoding) {
    // LavaGap start: agent at (1,1) facing east.
    GridState s = reset(EnvParams::paper(EnvKind::LavaGap), 11);
    const Observation obs = render_observation(s);
    EXPECT_EQ(cell_in_view(obs, 6, 3), (Cell{Object::Empty, Color::Red, 0}));
    EXPECT_EQ(cell_in_view(obs, 6, 2), (Cell{Object::Wall, Color::Grey, 0}));  // north of the agent
    EXPECT_EQ(cell_in_view(obs, 6, 1).object, Object::Unseen);                 // outside the grid
    EXPECT_EQ(cell_in_view(obs, 6, 4), s.at(1, 2));                             // south of the agent
    for (float v : obs.data) {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 1.0f);
    }
}

TEST(GridWorldObservation, WallsHideCellsBehindThem) {
    GridState s = open_room(EnvKind::DoorKey, {1, 3}, 0);
    for (int y = 0; y < s.params.height; ++y) s.at(3, y) = Cell{Object::Wall, Color::Grey, 0};
    const Observation obs = render_observation(s);
    EXPECT_EQ(cell_in_view(obs, 4, 3).object, Object::Wall);  // two ahead
    EXPECT_EQ(cell_in_view(obs, 3, 3).object, Object::Unseen);
    EXPECT_EQ(cell_in_view(obs, 1, 3).object, Object::Unseen);
}

TEST(GridWorldObservation, RenderingIsPure) {
    GridState s = reset(EnvParams::paper(EnvKind::DoorKey), 5);
    EXPECT_EQ(render_observation(s), render_observation(s));
}

TEST(GridWorldObservation, CellsBehindTheAgentAreInvisible) {
    GridState a = open_room(EnvKind::DynamicObstacles, {4, 4}, 0);
    GridState b = a;
    b.at(3, 4) = Cell{Object::Ball, Color::Blue, 0};
    b.at(2, 5) = Cell{Object::Lava, Color::Red, 0};
    EXPECT_EQ(render_observation(a), render_observation(b));
}

TEST(GridWorldProperties, TrajectoryIsPureFunctionOfSeedAndActions) {
    std::mt19937 pick(42);
    std::vector<int> actions(400);
    for (auto& a : actions) a = static_cast<int>(pick() % kNumActions);
    for (EnvKind k : kAllKinds) {
        auto run = [&] {
            GridState s = reset(EnvParams::paper(k), 99);
            std::vector<float> trace;
            for (int a : actions) {
                if (s.finished) break;
                const auto out = step(s, a);
                trace.push_back(out.reward);
                trace.insert(trace.end(), out.observation.data.begin(), out.observation.data.end());
            }
            return trace;
        };
        EXPECT_EQ(run(), run()) << to_string(k);
    }
}

TEST(GridWorldProperties, ReturnsAndLengthsRespectBounds) {
    std::mt19937 pick(7);
    for (EnvKind k : kAllKinds) {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            GridState s = reset(EnvParams::small(k), seed);
            double ret = 0.0;
            int len = 0;
            StepOutcome out;
            do {
                out = step(s, static_cast<int>(pick() % kNumActions));
                ret += out.reward;
                ++len;
                EXPECT_FALSE(out.terminated && out.truncated);
            } while (!out.done());
            EXPECT_LE(len, s.params.effective_max_steps());
            if (k == EnvKind::DynamicObstacles) {
                EXPECT_GE(ret, -1.0);
            } else {
                EXPECT_GE(ret, 0.0);
            }
            EXPECT_LE(ret, 1.0);
        }
    }
}

TEST(GridWorldProperties, ObservationDistributionsSeparateByKind) {
    constexpr std::size_t n = 600;
    std::vector<std::vector<Observation>> first, second;
    for (EnvKind k : kAllKinds) {
        first.push_back(random_rollout_observations(k, 100 + static_cast<int>(k), n));
        second.push_back(random_rollout_observations(k, 900 + static_cast<int>(k), n));
    }
    for (std::size_t i = 0; i < 3; ++i) {
        const double within = mean_observation_distance(first[i], second[i]);
        for (std::size_t j = 0; j < 3; ++j) {
            if (i == j) continue;
            EXPECT_GT(mean_observation_distance(first[i], first[j]), within)
                << to_string(kAllKinds[i]) << " vs " << to_string(kAllKinds[j]);
        }
    }
}

TEST(GridEnvironmentTest, StreamReproducesEpisodes) {
    GridEnvironment a(EnvParams::small(EnvKind::DoorKey), 5);
    GridEnvironment b(EnvParams::small(EnvKind::DoorKey), 5);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(a.reset(), b.reset());
    EXPECT_FALSE(a.done());
}
