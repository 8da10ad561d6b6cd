#include "aecl/report.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace aecl {

namespace {

std::string fmt(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_double(const std::string& s) {
    if (s == "nan") return std::nan("");
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw std::runtime_error("csv: bad number '" + s + "'");
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

constexpr const char* kEpisodeHeader =
    "episode_index,true_kind,decision,routed_pair_id,raw_return,normalized_return,episode_length";

}  // namespace

double normalize(double raw, const Bounds& bounds) {
    if (!(bounds.max > bounds.min)) {
        throw std::invalid_argument("normalize: degenerate bounds [" + fmt(bounds.min) + ", " + fmt(bounds.max) + "]");
    }
    return std::clamp((raw - bounds.min) / (bounds.max - bounds.min), 0.0, 1.0);
}

Bounds analytic_bounds(EnvKind kind) {
    return kind == EnvKind::DynamicObstacles ? Bounds{-1.0, 1.0} : Bounds{0.0, 1.0};
}

void BoundsTracker::observe(EnvKind kind, double episode_return) {
    if (!std::isfinite(episode_return)) return;
    const auto it = seen_.find(kind);
    if (it == seen_.end()) {
        seen_[kind] = {episode_return, episode_return};
    } else {
        it->second.min = std::min(it->second.min, episode_return);
        it->second.max = std::max(it->second.max, episode_return);
    }
}

std::optional<Bounds> BoundsTracker::observed(EnvKind kind) const {
    const auto it = seen_.find(kind);
    if (it == seen_.end()) return std::nullopt;
    return it->second;
}

Bounds BoundsTracker::finalize(EnvKind kind) const {
    const auto b = observed(kind);
    if (b && b->max > b->min) return *b;
    return analytic_bounds(kind);
}

void write_episodes_csv(const std::filesystem::path& path, const std::vector<EpisodeRecord>& records) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("episodes csv: cannot write " + path.string());
    os << kEpisodeHeader << '\n';
    for (const auto& r : records) {
        os << r.episode_index << ',' << to_string(r.true_kind) << ',' << to_string(r.decision) << ','
           << r.routed_pair_id << ',' << fmt(r.raw_return) << ',' << fmt(r.normalized_return) << ','
           << r.episode_length << '\n';
    }
}

std::vector<EpisodeRecord> read_episodes_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("episodes csv: cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != kEpisodeHeader) {
        throw std::runtime_error("episodes csv: unexpected header in " + path.string());
    }
    std::vector<EpisodeRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto c = split_csv_line(line);
        if (c.size() != 7) throw std::runtime_error("episodes csv: expected 7 columns in '" + line + "'");
        EpisodeRecord r;
        r.episode_index = std::stoi(c[0]);
        r.true_kind = parse_env_kind(c[1]);
        if (c[2] == "match") {
            r.decision = Decision::Match;
        } else if (c[2] == "novel") {
            r.decision = Decision::Novel;
        } else {
            throw std::runtime_error("episodes csv: bad decision '" + c[2] + "'");
        }
        r.routed_pair_id = std::stoi(c[3]);
        r.raw_return = parse_double(c[4]);
        r.normalized_return = parse_double(c[5]);
        r.episode_length = std::stoi(c[6]);
        out.push_back(r);
    }
    return out;
}

std::vector<std::vector<EpisodeRecord>> flow1_checkpoints(const std::vector<EpisodeRecord>& records, int per_task,
                                                          int tasks) {
    std::vector<std::vector<EpisodeRecord>> out;
    std::size_t start = 0;
    for (int c = 1; c <= tasks; ++c) {
        const auto count = static_cast<std::size_t>(per_task * c);
        if (start + count > records.size()) {
            throw std::runtime_error("flow 1 log holds " + std::to_string(records.size()) + " rows, checkpoint " +
                                     std::to_string(c) + " needs " + std::to_string(start + count));
        }
        out.emplace_back(records.begin() + static_cast<std::ptrdiff_t>(start),
                         records.begin() + static_cast<std::ptrdiff_t>(start + count));
        start += count;
    }
    return out;
}

std::vector<EpisodeRecord> scored_rows(const std::vector<EpisodeRecord>& records) {
    std::vector<EpisodeRecord> out;
    std::copy_if(records.begin(), records.end(), std::back_inserter(out),
                 [](const EpisodeRecord& r) { return r.decision == Decision::Match; });
    return out;
}

double mean_normalized(const std::vector<EpisodeRecord>& rows) {
    if (rows.empty()) return std::nan("");
    double s = 0.0;
    for (const auto& r : rows) s += r.normalized_return;
    return s / static_cast<double>(rows.size());
}

SeedSummary summarize(std::uint64_t seed, const std::string& agent, const std::vector<EpisodeRecord>& records, int flow,
                      int per_task, const std::vector<EnvKind>& tasks) {
    SeedSummary s{seed, agent, {}};
    auto by_kind = [](const std::vector<EpisodeRecord>& rows, EnvKind kind) {
        std::vector<EpisodeRecord> out;
        std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
                     [&](const EpisodeRecord& r) { return r.true_kind == kind; });
        return out;
    };
    if (flow == 1) {
        const auto checkpoints = flow1_checkpoints(records, per_task, static_cast<int>(tasks.size()));
        for (std::size_t c = 0; c < checkpoints.size(); ++c) {
            const std::string prefix = "checkpoint_" + std::to_string(c + 1) + "/";
            s.cells[prefix + "all"] = mean_normalized(checkpoints[c]);
            std::vector<EpisodeRecord> prior;
            for (std::size_t k = 0; k <= c; ++k) {
                const auto rows = by_kind(checkpoints[c], tasks[k]);
                s.cells[prefix + std::string(to_string(tasks[k]))] = mean_normalized(rows);
                if (k < c) prior.insert(prior.end(), rows.begin(), rows.end());
            }
            if (c > 0) s.cells[prefix + "prior"] = mean_normalized(prior);
        }
    } else {
        const auto scored = scored_rows(records);
        s.cells["net/all"] = mean_normalized(scored);
        for (EnvKind kind : tasks) s.cells["net/" + std::string(to_string(kind))] = mean_normalized(by_kind(scored, kind));
    }
    return s;
}

double sample_std(const std::vector<double>& values) {
    if (values.size() < 2) return 0.0;
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (n - 1.0));
}

std::vector<AggregateRow> aggregate(const std::vector<SeedSummary>& seeds) {
    std::vector<std::pair<std::string, std::string>> order;
    std::map<std::pair<std::string, std::string>, std::vector<double>> values;
    for (const auto& s : seeds) {
        for (const auto& [cell, v] : s.cells) {
            const auto key = std::make_pair(s.agent, cell);
            if (!values.count(key)) order.push_back(key);
            if (std::isfinite(v)) values[key].push_back(v);
        }
    }
    std::vector<AggregateRow> out;
    for (const auto& key : order) {
        const auto& v = values[key];
        AggregateRow row{key.first, key.second, v.size(), std::nan(""), 0.0};
        if (!v.empty()) {
            row.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            row.std = sample_std(v);
        }
        out.push_back(row);
    }
    return out;
}

void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("aggregate csv: cannot write " + path.string());
    os << "agent,cell,n,mean,std\n";
    for (const auto& r : rows) os << r.agent << ',' << r.cell << ',' << r.n << ',' << fmt(r.mean) << ',' << fmt(r.std) << '\n';
}

std::vector<AggregateRow> read_aggregate_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("aggregate csv: cannot open " + path.string());
    std::string line;
    std::getline(is, line);
    std::vector<AggregateRow> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto c = split_csv_line(line);
        if (c.size() != 5) throw std::runtime_error("aggregate csv: expected 5 columns in '" + line + "'");
        out.push_back({c[0], c[1], static_cast<std::size_t>(std::stoul(c[2])), parse_double(c[3]), parse_double(c[4])});
    }
    return out;
}

std::string format_aggregate_table(const std::vector<AggregateRow>& rows) {
    std::size_t wa = 5, wc = 4;
    for (const auto& r : rows) {
        wa = std::max(wa, r.agent.size());
        wc = std::max(wc, r.cell.size());
    }
    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(wa)) << "agent" << "  " << std::setw(static_cast<int>(wc)) << "cell"
       << "  " << std::right << std::setw(3) << "n" << "  " << "mean (std)\n";
    for (const auto& r : rows) {
        os << std::left << std::setw(static_cast<int>(wa)) << r.agent << "  " << std::setw(static_cast<int>(wc))
           << r.cell << "  " << std::right << std::setw(3) << r.n << "  " << std::fixed << std::setprecision(3)
           << r.mean << " (" << r.std << ")" << (r.n == 1 ? "  n=1" : "") << '\n';
        os.unsetf(std::ios::fixed);
    }
    return os.str();
}

}  // namespace aecl
