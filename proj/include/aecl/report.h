#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aecl/agent.h"
#include "aecl/gridworld.h"

namespace aecl {

struct Bounds {
    double min = 0.0;
    double max = 0.0;
};

/// (r - min) / (max - min) clamped to [0, 1]. Throws std::invalid_argument when max <= min.
double normalize(double raw, const Bounds& bounds);

/// Analytic return range of each kind: a collision costs -1 in DynamicObstacles.
Bounds analytic_bounds(EnvKind kind);

/// Lowest and highest episode returns an agent has seen, per kind.
class BoundsTracker {
public:
    void observe(EnvKind kind, double episode_return);
    std::optional<Bounds> observed(EnvKind kind) const;
    /// Observed bounds, falling back to the analytic range when a kind saw a single value.
    Bounds finalize(EnvKind kind) const;

private:
    std::map<EnvKind, Bounds> seen_;
};

/// Header and rows of episodes.csv; non-finite returns are written as "nan".
void write_episodes_csv(const std::filesystem::path& path, const std::vector<EpisodeRecord>& records);
std::vector<EpisodeRecord> read_episodes_csv(const std::filesystem::path& path);

/// Rows of flow 1 evaluated at each checkpoint: checkpoint c (from 1) holds
/// per_task * c episodes, in order.
std::vector<std::vector<EpisodeRecord>> flow1_checkpoints(const std::vector<EpisodeRecord>& records, int per_task,
                                                          int tasks);

/// Flow 2 rows that were played rather than handed to training.
std::vector<EpisodeRecord> scored_rows(const std::vector<EpisodeRecord>& records);

double mean_normalized(const std::vector<EpisodeRecord>& rows);

struct SeedSummary {
    std::uint64_t seed = 0;
    std::string agent;
    std::map<std::string, double> cells;  // e.g. "checkpoint_2/all", "net/LavaGap"
};

/// Per-seed cells of one agent's episode log.
SeedSummary summarize(std::uint64_t seed, const std::string& agent, const std::vector<EpisodeRecord>& records, int flow,
                      int per_task, const std::vector<EnvKind>& tasks);

struct AggregateRow {
    std::string agent;
    std::string cell;
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0;  // sample std (n - 1); 0 when n = 1
};

/// Mean and sample standard deviation of every cell across seeds.
std::vector<AggregateRow> aggregate(const std::vector<SeedSummary>& seeds);

double sample_std(const std::vector<double>& values);

void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows);
std::vector<AggregateRow> read_aggregate_csv(const std::filesystem::path& path);
/// Aligned text table, "mean (std)" per cell, n=1 rows flagged.
std::string format_aggregate_table(const std::vector<AggregateRow>& rows);

}  // namespace aecl
