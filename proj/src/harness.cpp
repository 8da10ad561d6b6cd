#include "aecl/harness.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "aecl/plot.h"

namespace aecl {

namespace {

namespace fs = std::filesystem;

// stream tags for derive_seed
constexpr std::uint64_t kTrainEnv = 1000;
constexpr std::uint64_t kEvalEnv = 2000;
constexpr std::uint64_t kLearn = 3000;
constexpr std::uint64_t kEvalOrder = 4000;
constexpr std::uint64_t kEvalPlay = 4500;
constexpr std::uint64_t kVanillaInit = 5000;
constexpr std::uint64_t kStream = 6000;
constexpr std::uint64_t kStreamPlay = 6500;
constexpr std::uint64_t kRetention = 7000;
constexpr std::uint64_t kTrace = 8000;

constexpr int kRetentionEpisodes = 30;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t kind_tag(EnvKind k) { return static_cast<std::uint64_t>(k); }

void observe_curve(BoundsTracker& tracker, EnvKind kind, const TrainingSession& session) {
    for (const auto& p : session.curve.points) tracker.observe(kind, p.episode_return);
}

std::map<EnvKind, Bounds> finalize_bounds(const RunConfig& cfg, const BoundsTracker& tracker) {
    std::map<EnvKind, Bounds> out;
    for (EnvKind k : cfg.task_sequence) {
        out[k] = cfg.bounds == BoundsMode::Analytic ? analytic_bounds(k) : tracker.finalize(k);
    }
    return out;
}

void apply_bounds(AgentRun& run) {
    for (auto& r : run.episodes) {
        r.normalized_return = std::isfinite(r.raw_return) ? normalize(r.raw_return, run.bounds.at(r.true_kind)) : kNaN;
    }
}

/// Owns one environment per kind, created on first use.
class EnvPool {
public:
    EnvPool(const RunConfig& cfg, std::uint64_t seed, std::uint64_t tag) : cfg_(cfg), seed_(seed), tag_(tag) {}

    GridEnvironment& operator[](EnvKind k) {
        auto& slot = envs_[k];
        if (!slot) slot = std::make_unique<GridEnvironment>(cfg_.env_params(k), derive_seed(seed_, tag_ + kind_tag(k)));
        return *slot;
    }

private:
    const RunConfig& cfg_;
    std::uint64_t seed_;
    std::uint64_t tag_;
    std::map<EnvKind, std::unique_ptr<GridEnvironment>> envs_;
};

/// Evaluation order after task t: per_task episodes of every task seen so far, shuffled.
std::vector<EnvKind> checkpoint_order(const RunConfig& cfg, std::uint64_t seed, std::size_t t) {
    std::vector<EnvKind> order;
    for (std::size_t k = 0; k <= t; ++k) order.insert(order.end(), static_cast<std::size_t>(cfg.eval_episodes_per_task), cfg.task_sequence[k]);
    std::mt19937_64 rng(derive_seed(seed, kEvalOrder + t));
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

std::vector<EnvKind> stream_order(const RunConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(derive_seed(seed, kStream));
    std::uniform_int_distribution<std::size_t> pick(0, cfg.task_sequence.size() - 1);
    std::vector<EnvKind> order;
    for (int i = 0; i < cfg.flow2_episodes; ++i) order.push_back(cfg.task_sequence[pick(rng)]);
    return order;
}

std::vector<std::uint64_t> retention_seeds(std::uint64_t seed) {
    std::vector<std::uint64_t> s;
    for (int i = 0; i < kRetentionEpisodes; ++i) s.push_back(derive_seed(seed, kRetention + static_cast<std::uint64_t>(i)));
    return s;
}

std::string describe(const MatchDecision& d, const PairRegistry& registry) {
    std::ostringstream os;
    os << std::setprecision(6);
    for (std::size_t i = 0; i < d.errors.size(); ++i) {
        os << (i ? "; " : "") << "pair " << i << " error " << d.errors[i] << " threshold "
           << registry.at(static_cast<int>(i)).detector.threshold.threshold;
    }
    return os.str();
}

void log_line(std::uint64_t seed, int flow, const std::string& msg) {
    std::clog << "[seed " << seed << " flow " << flow << "] " << msg << std::endl;
}

void write_aecl_outputs(const fs::path& dir, const AgentRun& run, const AeclAgent& agent) {
    fs::create_directories(dir / "checkpoints");
    fs::create_directories(dir / "curves");
    write_episodes_csv(dir / "episodes.csv", run.episodes);
    std::ofstream thresholds(dir / "thresholds.txt");
    for (std::size_t i = 0; i < agent.registry().size(); ++i) {
        const auto& pair = agent.registry().at(static_cast<int>(i));
        const std::string stem = "pair_" + std::to_string(i);
        thresholds << "[" << stem << "]\n";
        pair.detector.threshold.write(thresholds);
        thresholds << '\n';
        pair.policy.save(dir / "checkpoints" / (stem + "_policy.bin"));
        pair.detector.autoencoder.save(dir / "checkpoints" / (stem + "_autoencoder.bin"));
        pair.detector.threshold.save(dir / "checkpoints" / (stem + "_threshold.txt"));
        save_frames(dir / "checkpoints" / (stem + "_validation.bin"), pair.validation);
        pair.policy_session.curve.write_csv(dir / "curves" / (stem + "_ppo.csv"));
        pair.autoencoder_history.write_csv(dir / "curves" / (stem + "_autoencoder.csv"));
    }
    if (run.retention) {
        std::ofstream os(dir / "retention.csv");
        os << "env_seed,before,after\n" << std::setprecision(17);
        for (std::size_t i = 0; i < run.retention->env_seeds.size(); ++i) {
            os << run.retention->env_seeds[i] << ',' << run.retention->before[i] << ',' << run.retention->after[i] << '\n';
        }
    }
    if (!run.notes.empty()) {
        std::ofstream os(dir / "routing_notes.txt");
        for (const auto& n : run.notes) os << n << '\n';
    }
}

void write_bounds(const fs::path& dir, const AgentRun& run) {
    std::ofstream os(dir / "bounds.csv");
    os << "kind,min,max\n" << std::setprecision(17);
    for (const auto& [k, b] : run.bounds) os << to_string(k) << ',' << b.min << ',' << b.max << '\n';
}

void write_vanilla_outputs(const fs::path& dir, const AgentRun& run, const VanillaAgent& agent,
                           const std::vector<std::pair<EnvKind, TrainingSession>>& sessions) {
    fs::create_directories(dir / "checkpoints");
    fs::create_directories(dir / "curves");
    write_episodes_csv(dir / "episodes.csv", run.episodes);
    agent.policy().save(dir / "checkpoints" / "policy.bin");
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        sessions[i].second.curve.write_csv(dir / "curves" /
                                           ("task_" + std::to_string(i) + "_" + std::string(to_string(sessions[i].first)) + "_ppo.csv"));
    }
}

EpisodeRecord record(int index, EnvKind kind, Decision d, int pair, double raw, int length) {
    return {index, kind, d, pair, raw, kNaN, length};
}

AgentRun flow1_aecl(const RunConfig& cfg, std::uint64_t seed, std::shared_ptr<AeclAgent>& agent_out) {
    auto agent = std::make_shared<AeclAgent>(cfg.agent());
    AgentRun run;
    run.agent = "aecl";
    BoundsTracker tracker;
    EnvPool train(cfg, seed, kTrainEnv), eval(cfg, seed, kEvalEnv);
    RetentionProbe probe;
    probe.env_seeds = retention_seeds(seed);
    const auto& tasks = cfg.task_sequence;
    int index = 0;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        if (t == 1) probe.before = fixed_seed_returns(agent->registry().at(0).policy, cfg.env_params(tasks[0]), probe.env_seeds);
        const auto& pair = agent->learn(train[tasks[t]], cfg.learning(tasks[t]), derive_seed(seed, kLearn + t));
        observe_curve(tracker, tasks[t], pair.policy_session);
        log_line(seed, 1, "aecl learned " + std::string(to_string(tasks[t])) + " as pair " + std::to_string(pair.id) +
                              " in " + std::to_string(pair.policy_session.steps) + " steps");

        std::mt19937_64 rng(derive_seed(seed, kEvalPlay + t));
        int correct = 0, count = 0;
        for (EnvKind k : checkpoint_order(cfg, seed, t)) {
            const auto o = agent->play(eval[k], rng, nullptr, 0);
            const Decision d = o.route.decision.novel() ? Decision::Novel : Decision::Match;
            if (d == Decision::Novel) {
                run.notes.push_back("checkpoint " + std::to_string(t + 1) + " episode " + std::to_string(index) + " " +
                                    std::string(to_string(k)) + " novel: " + describe(o.route.decision, agent->registry()));
            }
            // pairs are learned in task order, so a task's pair id is its index
            const auto truth = static_cast<int>(std::find(tasks.begin(), tasks.end(), k) - tasks.begin());
            if (o.played_pair == truth) ++correct;
            ++count;
            run.episodes.push_back(record(index++, k, d, o.played_pair, o.result.episode_return, o.result.length));
            tracker.observe(k, o.result.episode_return);
        }
        log_line(seed, 1, "aecl checkpoint " + std::to_string(t + 1) + ": " + std::to_string(correct) + "/" +
                              std::to_string(count) + " episodes played by the pair of their task");
    }
    if (tasks.size() >= 2) {
        probe.after = fixed_seed_returns(agent->registry().at(0).policy, cfg.env_params(tasks[0]), probe.env_seeds);
        run.retention = std::move(probe);
    }
    run.bounds = finalize_bounds(cfg, tracker);
    apply_bounds(run);
    agent_out = std::move(agent);
    return run;
}

AgentRun flow1_vanilla(const RunConfig& cfg, std::uint64_t seed, const fs::path& dir) {
    VanillaAgent agent(derive_seed(seed, kVanillaInit));
    AgentRun run;
    run.agent = "vanilla";
    BoundsTracker tracker;
    EnvPool train(cfg, seed, kTrainEnv), eval(cfg, seed, kEvalEnv);
    std::vector<std::pair<EnvKind, TrainingSession>> sessions;
    const auto& tasks = cfg.task_sequence;
    int index = 0;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        sessions.emplace_back(tasks[t], agent.train_on(train[tasks[t]], cfg.learning(tasks[t]), derive_seed(seed, kLearn + t)));
        observe_curve(tracker, tasks[t], sessions.back().second);
        log_line(seed, 1, "vanilla trained on " + std::string(to_string(tasks[t])) + " for " +
                              std::to_string(sessions.back().second.steps) + " steps");
        std::mt19937_64 rng(derive_seed(seed, kEvalPlay + t));
        for (EnvKind k : checkpoint_order(cfg, seed, t)) {
            const auto r = agent.play(eval[k], cfg.eval_mode, rng);
            run.episodes.push_back(record(index++, k, Decision::Match, 0, r.episode_return, r.length));
            tracker.observe(k, r.episode_return);
        }
    }
    run.bounds = finalize_bounds(cfg, tracker);
    apply_bounds(run);
    if (!dir.empty()) write_vanilla_outputs(dir, run, agent, sessions);
    return run;
}

AgentRun flow2_aecl(const RunConfig& cfg, std::uint64_t seed, const std::vector<EnvKind>& order,
                    std::shared_ptr<AeclAgent>& agent_out) {
    auto agent = std::make_shared<AeclAgent>(cfg.agent());
    AgentRun run;
    run.agent = "aecl";
    BoundsTracker tracker;
    EnvPool envs(cfg, seed, kTrainEnv);
    std::mt19937_64 rng(derive_seed(seed, kStreamPlay));
    for (std::size_t i = 0; i < order.size(); ++i) {
        const EnvKind k = order[i];
        const LearningSettings settings = cfg.learning(k);
        const auto o = agent->play(envs[k], rng, &settings, derive_seed(seed, kLearn + i));
        const int index = static_cast<int>(i);
        if (o.trained) {
            const auto& pair = agent->registry().at(o.played_pair);
            observe_curve(tracker, k, pair.policy_session);
            run.notes.push_back("episode " + std::to_string(index) + " " + std::string(to_string(k)) +
                                " novel, learned pair " + std::to_string(pair.id) +
                                (o.route.decision.errors.empty() ? std::string(" (empty registry)")
                                                                 : ": " + describe(o.route.decision, agent->registry())));
            log_line(seed, 2, run.notes.back());
            run.episodes.push_back(record(index, k, Decision::Novel, o.played_pair, kNaN, 0));
        } else {
            run.episodes.push_back(record(index, k, Decision::Match, o.played_pair, o.result.episode_return, o.result.length));
            tracker.observe(k, o.result.episode_return);
        }
    }
    log_line(seed, 2, "aecl ended with " + std::to_string(agent->registry().size()) + " pairs");
    run.bounds = finalize_bounds(cfg, tracker);
    apply_bounds(run);
    agent_out = std::move(agent);
    return run;
}

AgentRun flow2_vanilla(const RunConfig& cfg, std::uint64_t seed, const std::vector<EnvKind>& order, const fs::path& dir) {
    VanillaAgent agent(derive_seed(seed, kVanillaInit));
    AgentRun run;
    run.agent = "vanilla";
    BoundsTracker tracker;
    EnvPool envs(cfg, seed, kTrainEnv);
    std::vector<std::pair<EnvKind, TrainingSession>> sessions;
    std::set<EnvKind> seen;
    std::mt19937_64 rng(derive_seed(seed, kStreamPlay));
    for (std::size_t i = 0; i < order.size(); ++i) {
        const EnvKind k = order[i];
        const int index = static_cast<int>(i);
        if (seen.insert(k).second) {
            sessions.emplace_back(k, agent.train_on(envs[k], cfg.learning(k), derive_seed(seed, kLearn + i)));
            observe_curve(tracker, k, sessions.back().second);
            log_line(seed, 2, "vanilla trained on " + std::string(to_string(k)) + " at episode " + std::to_string(index));
            run.episodes.push_back(record(index, k, Decision::Novel, 0, kNaN, 0));
        } else {
            const auto r = agent.play(envs[k], cfg.eval_mode, rng);
            run.episodes.push_back(record(index, k, Decision::Match, 0, r.episode_return, r.length));
            tracker.observe(k, r.episode_return);
        }
    }
    run.bounds = finalize_bounds(cfg, tracker);
    apply_bounds(run);
    if (!dir.empty()) write_vanilla_outputs(dir, run, agent, sessions);
    return run;
}

/// Start of the excerpt: a random index once every kind of the stream has appeared.
std::size_t trace_start(const RunConfig& cfg, std::uint64_t seed, const std::vector<EnvKind>& order) {
    std::set<EnvKind> seen;
    std::size_t first_full = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        seen.insert(order[i]);
        if (seen.size() == std::set<EnvKind>(order.begin(), order.end()).size()) {
            first_full = i + 1;
            break;
        }
    }
    const auto length = static_cast<std::size_t>(cfg.trace_length);
    if (order.size() <= length) return 0;
    const std::size_t last = order.size() - length;
    if (first_full >= last) return last;
    std::mt19937_64 rng(derive_seed(seed, kTrace));
    return std::uniform_int_distribution<std::size_t>(first_full, last)(rng);
}

void write_trace(const fs::path& dir, const SeedRun& run, std::size_t start, std::size_t length) {
    fs::create_directories(dir / "plots");
    std::ofstream os(dir / "trace_excerpt.csv");
    os << "episode_index,true_kind,agent,normalized_return\n" << std::setprecision(17);
    std::vector<plot::Series> series;
    for (const AgentRun* a : {run.aecl ? &*run.aecl : nullptr, run.vanilla ? &*run.vanilla : nullptr}) {
        if (!a) continue;
        plot::Series s{a->agent, {}};
        for (std::size_t i = start; i < std::min(start + length, a->episodes.size()); ++i) {
            const auto& r = a->episodes[i];
            os << r.episode_index << ',' << to_string(r.true_kind) << ',' << a->agent << ',';
            if (std::isfinite(r.normalized_return)) {
                os << r.normalized_return;
            } else {
                os << "nan";
            }
            os << '\n';
            s.y.push_back(r.normalized_return);
        }
        series.push_back(std::move(s));
    }
    plot::line_chart(dir / "plots" / "trace.png", "normalized reward, episodes " + std::to_string(start) + "-" +
                                                      std::to_string(start + length - 1),
                     series, 0.0, 1.0);
}

void finish_seed(const RunConfig& cfg, SeedRun& run) {
    const int per_task = cfg.eval_episodes_per_task;
    if (run.aecl) run.aecl->summary = summarize(run.seed, "aecl", run.aecl->episodes, run.flow, per_task, cfg.task_sequence);
    if (run.vanilla) {
        run.vanilla->summary = summarize(run.seed, "vanilla", run.vanilla->episodes, run.flow, per_task, cfg.task_sequence);
    }
}

void write_flow_plots(const RunConfig& cfg, const fs::path& root, const std::vector<AggregateRow>& rows) {
    fs::create_directories(root / "plots");
    std::vector<std::string> agents;
    for (const auto& r : rows) {
        if (std::find(agents.begin(), agents.end(), r.agent) == agents.end()) agents.push_back(r.agent);
    }
    auto lookup = [&](const std::string& agent, const std::string& cell) -> std::pair<double, double> {
        for (const auto& r : rows) {
            if (r.agent == agent && r.cell == cell) return {r.mean, r.std};
        }
        return {kNaN, 0.0};
    };
    std::vector<std::string> groups, cells;
    if (cfg.flow == 1) {
        for (std::size_t c = 1; c <= cfg.task_sequence.size(); ++c) {
            groups.push_back("after task " + std::to_string(c));
            cells.push_back("checkpoint_" + std::to_string(c) + "/all");
        }
    } else {
        for (EnvKind k : cfg.task_sequence) {
            groups.emplace_back(to_string(k));
            cells.push_back("net/" + std::string(to_string(k)));
        }
        groups.emplace_back("all");
        cells.emplace_back("net/all");
    }
    std::vector<std::vector<double>> values, errors;
    for (const auto& a : agents) {
        values.emplace_back();
        errors.emplace_back();
        for (const auto& c : cells) {
            const auto [m, s] = lookup(a, c);
            values.back().push_back(m);
            errors.back().push_back(s);
        }
    }
    const std::string name = cfg.flow == 1 ? "retrospective.png" : "ongoing.png";
    const std::string title = cfg.flow == 1 ? "retrospective mean normalized reward" : "ongoing mean normalized reward";
    plot::bar_chart(root / "plots" / name, title, groups, agents, values, errors);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::vector<double> fixed_seed_returns(const PolicyModel& policy, const EnvParams& params,
                                       const std::vector<std::uint64_t>& env_seeds) {
    std::vector<double> out;
    std::mt19937_64 rng(0);  // unused by greedy actions
    for (std::uint64_t s : env_seeds) {
        GridEnvironment env(params, 0);
        Observation obs = env.reset_with_seed(s);
        double ret = 0.0;
        while (!env.done()) {
            const auto step = env.step(act(policy, obs, ActMode::Greedy, rng).action);
            ret += step.reward;
            obs = step.observation;
        }
        out.push_back(ret);
    }
    return out;
}

void save_frames(const fs::path& path, const std::vector<Observation>& frames) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("frames: cannot write " + path.string());
    const std::uint64_t n = frames.size();
    os.write("AEFR", 4);
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
    for (const auto& f : frames) {
        os.write(reinterpret_cast<const char*>(f.data.data()), static_cast<std::streamsize>(sizeof(float) * kObsSize));
    }
}

std::vector<Observation> load_frames(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("frames: cannot open " + path.string());
    char magic[4];
    std::uint64_t n = 0;
    is.read(magic, 4);
    is.read(reinterpret_cast<char*>(&n), sizeof n);
    if (!is || std::string(magic, 4) != "AEFR") throw std::runtime_error("frames: bad header in " + path.string());
    std::vector<Observation> out(n);
    for (auto& f : out) {
        is.read(reinterpret_cast<char*>(f.data.data()), static_cast<std::streamsize>(sizeof(float) * kObsSize));
    }
    if (!is) throw std::runtime_error("frames: truncated " + path.string());
    return out;
}

PairRegistry load_registry(const fs::path& agent_dir) {
    PairRegistry registry;
    for (int id = 0;; ++id) {
        const fs::path stem = agent_dir / "checkpoints" / ("pair_" + std::to_string(id));
        if (!fs::exists(stem.string() + "_policy.bin")) break;
        PolicyModel policy = PolicyModel::load(stem.string() + "_policy.bin");
        policy.freeze();
        PolicyAutoencoderPair pair{id,
                                   std::move(policy),
                                   Detector{AutoencoderModel::load(stem.string() + "_autoencoder.bin"),
                                            ThresholdModel::load(stem.string() + "_threshold.txt")},
                                   {},
                                   {},
                                   load_frames(stem.string() + "_validation.bin")};
        registry.append(std::move(pair));
    }
    return registry;
}

bool FlowReport::ok() const {
    return std::all_of(seeds.begin(), seeds.end(), [](const SeedRun& s) { return s.error.empty(); });
}

fs::path seed_dir(const fs::path& root, std::uint64_t seed) { return root / ("seed_" + std::to_string(seed)); }

SeedRun run_flow1_seed(const RunConfig& cfg, std::uint64_t seed, const fs::path& dir) {
    SeedRun run;
    run.seed = seed;
    run.flow = 1;
    if (cfg.agents != AgentSelection::Vanilla) {
        run.aecl = flow1_aecl(cfg, seed, run.aecl_agent);
        if (!dir.empty()) {
            write_aecl_outputs(dir / "aecl", *run.aecl, *run.aecl_agent);
            write_bounds(dir / "aecl", *run.aecl);
        }
    }
    if (cfg.agents != AgentSelection::Aecl) {
        run.vanilla = flow1_vanilla(cfg, seed, dir.empty() ? fs::path{} : dir / "vanilla");
        if (!dir.empty()) write_bounds(dir / "vanilla", *run.vanilla);
    }
    finish_seed(cfg, run);
    return run;
}

SeedRun run_flow2_seed(const RunConfig& cfg, std::uint64_t seed, const fs::path& dir) {
    SeedRun run;
    run.seed = seed;
    run.flow = 2;
    const auto order = stream_order(cfg, seed);
    if (cfg.agents != AgentSelection::Vanilla) {
        run.aecl = flow2_aecl(cfg, seed, order, run.aecl_agent);
        if (!dir.empty()) {
            write_aecl_outputs(dir / "aecl", *run.aecl, *run.aecl_agent);
            write_bounds(dir / "aecl", *run.aecl);
        }
    }
    if (cfg.agents != AgentSelection::Aecl) {
        run.vanilla = flow2_vanilla(cfg, seed, order, dir.empty() ? fs::path{} : dir / "vanilla");
        if (!dir.empty()) write_bounds(dir / "vanilla", *run.vanilla);
    }
    finish_seed(cfg, run);
    if (!dir.empty()) write_trace(dir, run, trace_start(cfg, seed, order), static_cast<std::size_t>(cfg.trace_length));
    return run;
}

FlowReport run_flow(const RunConfig& cfg, const std::string& source_text) {
    cfg.validate();
    FlowReport report;
    report.config = cfg;
    const fs::path root = cfg.output_dir;
    fs::create_directories(root);
    cfg.save(root / "config.ini");
    if (!source_text.empty()) {
        std::ofstream os(root / "config.source.ini", std::ios::binary);
        os << source_text;
    }
    std::vector<SeedSummary> summaries;
    for (std::uint64_t seed : cfg.seeds) {
        const fs::path dir = seed_dir(root, seed);
        SeedRun run;
        try {
            run = cfg.flow == 1 ? run_flow1_seed(cfg, seed, dir) : run_flow2_seed(cfg, seed, dir);
        } catch (const std::exception& e) {
            run.seed = seed;
            run.flow = cfg.flow;
            run.error = e.what();
            log_line(seed, cfg.flow, std::string("aborted: ") + e.what());
            fs::create_directories(dir);
            std::ofstream(dir / "error.txt") << e.what() << '\n';
        }
        if (run.aecl) summaries.push_back(run.aecl->summary);
        if (run.vanilla) summaries.push_back(run.vanilla->summary);
        report.seeds.push_back(std::move(run));
    }
    report.aggregate = aggregate(summaries);
    write_aggregate_csv(root / "aggregate.csv", report.aggregate);
    std::ofstream(root / "aggregate.txt") << format_aggregate_table(report.aggregate);
    write_flow_plots(cfg, root, report.aggregate);
    return report;
}

std::vector<AggregateRow> aggregate_directory(const fs::path& dir) {
    const RunConfig cfg = RunConfig::load(dir / "config.ini");
    std::vector<SeedSummary> summaries;
    for (std::uint64_t seed : cfg.seeds) {
        for (const char* agent : {"aecl", "vanilla"}) {
            const fs::path log = seed_dir(dir, seed) / agent / "episodes.csv";
            if (!fs::exists(log)) continue;
            summaries.push_back(
                summarize(seed, agent, read_episodes_csv(log), cfg.flow, cfg.eval_episodes_per_task, cfg.task_sequence));
        }
    }
    return aggregate(summaries);
}

}  // namespace aecl
