#include "aecl/gridworld.h"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace aecl {

namespace {

constexpr std::array<Position, 4> kDirVec = {Position{1, 0}, Position{0, 1}, Position{-1, 0}, Position{0, -1}};

int rand_int(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

Cell wall() { return {Object::Wall, Color::Grey, 0}; }
Cell empty() { return {Object::Empty, Color::Red, 0}; }

bool blocks_sight(const Cell& c) {
    if (c.object == Object::Unseen || c.object == Object::Wall) return true;
    if (c.object == Object::Door) return c.state != static_cast<std::uint8_t>(DoorState::Open);
    return false;
}

bool walkable(const Cell& c) {
    switch (c.object) {
        case Object::Empty:
        case Object::Floor:
        case Object::Goal:
        case Object::Lava:
            return true;
        case Object::Door:
            return c.state == static_cast<std::uint8_t>(DoorState::Open);
        default:
            return false;
    }
}

// Uniform over empty cells inside [x0,x1]x[y0,y1] that are not the agent.
Position sample_empty(GridState& s, int x0, int x1, int y0, int y1) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
        Position p{rand_int(s.rng, x0, x1), rand_int(s.rng, y0, y1)};
        if (s.at(p.x, p.y).object == Object::Empty && !(p == s.agent_pos)) return p;
    }
    throw std::runtime_error("gridworld: no free cell for object placement");
}

void build_walls(GridState& s) {
    const int w = s.params.width;
    const int h = s.params.height;
    s.grid.assign(static_cast<std::size_t>(w * h), empty());
    for (int x = 0; x < w; ++x) {
        s.at(x, 0) = wall();
        s.at(x, h - 1) = wall();
    }
    for (int y = 0; y < h; ++y) {
        s.at(0, y) = wall();
        s.at(w - 1, y) = wall();
    }
}

void layout_dynamic_obstacles(GridState& s) {
    const int w = s.params.width;
    const int h = s.params.height;
    s.agent_pos = {1, 1};
    s.agent_dir = 0;
    s.at(w - 2, h - 2) = {Object::Goal, Color::Green, 0};
    const int n = s.params.effective_obstacles();
    for (int i = 0; i < n; ++i) {
        Position p = sample_empty(s, 1, w - 2, 1, h - 2);
        s.at(p.x, p.y) = {Object::Ball, Color::Blue, 0};
        s.obstacles.push_back(p);
    }
}

void layout_lava_gap(GridState& s) {
    const int w = s.params.width;
    const int h = s.params.height;
    s.agent_pos = {1, 1};
    s.agent_dir = 0;
    s.at(w - 2, h - 2) = {Object::Goal, Color::Green, 0};
    const int gap_x = rand_int(s.rng, 2, w - 3);
    const int gap_y = rand_int(s.rng, 1, h - 2);
    for (int y = 1; y <= h - 2; ++y) {
        if (y != gap_y) s.at(gap_x, y) = {Object::Lava, Color::Red, 0};
    }
}

void layout_door_key(GridState& s) {
    const int w = s.params.width;
    const int h = s.params.height;
    s.at(w - 2, h - 2) = {Object::Goal, Color::Green, 0};
    const int split = rand_int(s.rng, 2, w - 3);
    for (int y = 0; y < h; ++y) s.at(split, y) = wall();
    s.agent_pos = {-1, -1};
    s.agent_pos = sample_empty(s, 1, split - 1, 1, h - 2);
    s.agent_dir = rand_int(s.rng, 0, 3);
    const int door_y = rand_int(s.rng, 1, h - 3);
    s.at(split, door_y) = {Object::Door, Color::Yellow, static_cast<std::uint8_t>(DoorState::Locked)};
    Position key = sample_empty(s, 1, split - 1, 1, h - 2);
    s.at(key.x, key.y) = {Object::Key, Color::Yellow, 0};
}

void move_obstacles(GridState& s) {
    for (Position& p : s.obstacles) {
        const Position d = kDirVec[static_cast<std::size_t>(rand_int(s.rng, 0, 3))];
        const Position t{p.x + d.x, p.y + d.y};
        if (!s.in_bounds(t.x, t.y) || t == s.agent_pos) continue;
        if (s.at(t.x, t.y).object != Object::Empty) continue;
        s.at(t.x, t.y) = s.at(p.x, p.y);
        s.at(p.x, p.y) = empty();
        p = t;
    }
}

}  // namespace

std::string_view to_string(EnvKind kind) {
    switch (kind) {
        case EnvKind::DynamicObstacles:
            return "DynamicObstacles";
        case EnvKind::LavaGap:
            return "LavaGap";
        case EnvKind::DoorKey:
            return "DoorKey";
    }
    return "unknown";
}

EnvKind parse_env_kind(std::string_view name) {
    for (EnvKind k : kAllKinds) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown environment kind: " + std::string(name));
}

int EnvParams::effective_obstacles() const {
    if (n_obstacles > 0) return n_obstacles;
    return std::max(1, width / 2);
}

EnvParams EnvParams::paper(EnvKind kind) {
    EnvParams p;
    p.kind = kind;
    p.width = p.height = (kind == EnvKind::LavaGap) ? 7 : 8;
    return p;
}

EnvParams EnvParams::small(EnvKind kind) {
    EnvParams p;
    p.kind = kind;
    p.width = p.height = (kind == EnvKind::LavaGap) ? 5 : 6;
    return p;
}

Position GridState::front_pos() const {
    const Position d = kDirVec[static_cast<std::size_t>(agent_dir)];
    return {agent_pos.x + d.x, agent_pos.y + d.y};
}

GridState reset(const EnvParams& params, std::uint64_t seed) {
    if (params.width < 5 || params.height < 5) {
        throw std::invalid_argument("gridworld: grids smaller than 5x5 cannot hold a layout");
    }
    GridState s;
    s.params = params;
    s.rng.seed(seed);
    build_walls(s);
    switch (params.kind) {
        case EnvKind::DynamicObstacles:
            layout_dynamic_obstacles(s);
            break;
        case EnvKind::LavaGap:
            layout_lava_gap(s);
            break;
        case EnvKind::DoorKey:
            layout_door_key(s);
            break;
    }
    return s;
}

StepOutcome step(GridState& s, int action) {
    if (s.finished) throw std::logic_error("gridworld: step called on a finished episode");
    if (action < 0 || action >= kNumActions) {
        throw std::invalid_argument("gridworld: action " + std::to_string(action) + " outside the action set");
    }
    ++s.step_count;
    StepOutcome out;

    const auto act = static_cast<Action>(action);
    const bool dynamic = s.params.kind == EnvKind::DynamicObstacles;
    Position front = s.front_pos();

    // Collision is judged against the cell in front before obstacles move.
    bool blocked_ahead = false;
    if (dynamic) {
        const Object o = s.at(front.x, front.y).object;
        blocked_ahead = o != Object::Empty && o != Object::Goal;
        move_obstacles(s);
    }

    switch (act) {
        case Action::TurnLeft:
            s.agent_dir = (s.agent_dir + 3) % 4;
            break;
        case Action::TurnRight:
            s.agent_dir = (s.agent_dir + 1) % 4;
            break;
        case Action::Forward: {
            const Cell& c = s.at(front.x, front.y);
            if (walkable(c)) {
                s.agent_pos = front;
                if (c.object == Object::Goal) {
                    out.terminated = true;
                    out.reward = 1.0f - 0.9f * (static_cast<float>(s.step_count) /
                                                 static_cast<float>(s.params.effective_max_steps()));
                } else if (c.object == Object::Lava) {
                    out.terminated = true;
                }
            }
            break;
        }
        case Action::Pickup: {
            if (s.params.kind != EnvKind::DoorKey) break;
            Cell& c = s.at(front.x, front.y);
            if (c.object == Object::Key && !s.carrying_key()) {
                s.carrying = c;
                c = empty();
            }
            break;
        }
        case Action::Toggle: {
            if (s.params.kind != EnvKind::DoorKey) break;
            Cell& c = s.at(front.x, front.y);
            if (c.object != Object::Door) break;
            const auto st = static_cast<DoorState>(c.state);
            if (st == DoorState::Locked) {
                if (s.carrying_key() && s.carrying.color == c.color) {
                    c.state = static_cast<std::uint8_t>(DoorState::Open);
                }
            } else if (st == DoorState::Closed) {
                c.state = static_cast<std::uint8_t>(DoorState::Open);
            } else {
                c.state = static_cast<std::uint8_t>(DoorState::Closed);
            }
            break;
        }
    }

    if (dynamic && act == Action::Forward && blocked_ahead) {
        out.reward = -1.0f;
        out.terminated = true;
    }
    if (!out.terminated && s.step_count >= s.params.effective_max_steps()) out.truncated = true;
    s.finished = out.terminated || out.truncated;
    out.observation = render_observation(s);
    return out;
}

Observation render_observation(const GridState& s) {
    constexpr int n = kViewSize;
    const Position fwd = kDirVec[static_cast<std::size_t>(s.agent_dir)];
    const Position right{-fwd.y, fwd.x};

    std::array<std::array<Cell, n>, n> view{};  // view[row][col]
    for (int row = 0; row < n; ++row) {
        for (int col = 0; col < n; ++col) {
            const int ahead = n - 1 - row;
            const int lateral = col - n / 2;
            const int x = s.agent_pos.x + ahead * fwd.x + lateral * right.x;
            const int y = s.agent_pos.y + ahead * fwd.y + lateral * right.y;
            view[row][col] = s.in_bounds(x, y) ? s.at(x, y) : Cell{Object::Unseen, Color::Red, 0};
        }
    }

    // Line-of-sight propagation from the agent cell, row by row away from it.
    std::array<std::array<bool, n>, n> visible{};
    visible[n - 1][n / 2] = true;
    for (int row = n - 1; row >= 0; --row) {
        for (int col = 0; col < n - 1; ++col) {
            if (!visible[row][col] || blocks_sight(view[row][col])) continue;
            visible[row][col + 1] = true;
            if (row > 0) {
                visible[row - 1][col + 1] = true;
                visible[row - 1][col] = true;
            }
        }
        for (int col = n - 1; col > 0; --col) {
            if (!visible[row][col] || blocks_sight(view[row][col])) continue;
            visible[row][col - 1] = true;
            if (row > 0) {
                visible[row - 1][col - 1] = true;
                visible[row - 1][col] = true;
            }
        }
    }

    view[n - 1][n / 2] = s.carrying_key() ? s.carrying : empty();

    Observation obs;
    for (int row = 0; row < n; ++row) {
        for (int col = 0; col < n; ++col) {
            const Cell c = visible[row][col] ? view[row][col] : Cell{Object::Unseen, Color::Red, 0};
            float* px = &obs.data[static_cast<std::size_t>((row * n + col) * kObsChannels)];
            px[0] = static_cast<float>(c.object) / kMaxObjectCode;
            px[1] = static_cast<float>(c.color) / kMaxColorCode;
            px[2] = static_cast<float>(c.state) / kMaxStateCode;
        }
    }
    return obs;
}

GridEnvironment::GridEnvironment(EnvParams params, std::uint64_t stream_seed)
    : params_(params), seeds_(stream_seed) {}

Observation GridEnvironment::reset() { return reset_with_seed(seeds_()); }

Observation GridEnvironment::reset_with_seed(std::uint64_t seed) {
    state_ = aecl::reset(params_, seed);
    current_ = render_observation(state_);
    done_ = false;
    return current_;
}

StepOutcome GridEnvironment::step(int action) {
    StepOutcome out = aecl::step(state_, action);
    current_ = out.observation;
    done_ = out.done();
    return out;
}

}  // namespace aecl
