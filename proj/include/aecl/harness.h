#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aecl/agent.h"
#include "aecl/config.h"
#include "aecl/report.h"

namespace aecl {

/// Independent seed for one stream of a run, mixed from the run seed and a tag.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Greedy return of a policy on episodes laid out from explicit seeds.
std::vector<double> fixed_seed_returns(const PolicyModel& policy, const EnvParams& params,
                                       const std::vector<std::uint64_t>& env_seeds);

struct RetentionProbe {
    std::vector<std::uint64_t> env_seeds;
    std::vector<double> before;  // pair 0 before the second task is learned
    std::vector<double> after;   // and after the last one
};

struct AgentRun {
    std::string agent;  // "aecl" or "vanilla"
    std::vector<EpisodeRecord> episodes;
    std::map<EnvKind, Bounds> bounds;
    SeedSummary summary;
    std::optional<RetentionProbe> retention;
    std::vector<std::string> notes;  // novel decisions with their errors
};

struct SeedRun {
    std::uint64_t seed = 0;
    int flow = 1;
    std::optional<AgentRun> aecl;
    std::optional<AgentRun> vanilla;
    std::shared_ptr<AeclAgent> aecl_agent;  // final registry, for inspection
    std::string error;                       // non-empty when the seed aborted
};

struct FlowReport {
    RunConfig config;
    std::vector<SeedRun> seeds;
    std::vector<AggregateRow> aggregate;
    bool ok() const;
};

/// Learns the tasks in order, evaluating the agents on every task seen so far
/// after each one. Writes under dir when it is non-empty.
SeedRun run_flow1_seed(const RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir);

/// A uniformly random stream of tasks; AE-CL learns on its own Novel decisions,
/// Vanilla at the first exposure to each kind.
SeedRun run_flow2_seed(const RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir);

/// Runs every seed of cfg.flow, writes config, per-seed logs, aggregate tables and
/// plots under cfg.output_dir. source_text, when given, is copied verbatim.
FlowReport run_flow(const RunConfig& cfg, const std::string& source_text = {});

/// Recomputes the aggregate from the episode logs under a flow output directory.
std::vector<AggregateRow> aggregate_directory(const std::filesystem::path& dir);

/// Raw little-endian float frames with a count header.
void save_frames(const std::filesystem::path& path, const std::vector<Observation>& frames);
std::vector<Observation> load_frames(const std::filesystem::path& path);

/// Rebuilds the pairs an AE-CL run wrote under agent_dir/checkpoints.
PairRegistry load_registry(const std::filesystem::path& agent_dir);

/// Output directory of one seed and agent.
std::filesystem::path seed_dir(const std::filesystem::path& root, std::uint64_t seed);

}  // namespace aecl
