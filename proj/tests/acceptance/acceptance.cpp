// End-to-end acceptance run: trains both agents through both flows on the small
// preset, then prints one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails.
#include <malloc.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aecl/config.h"
#include "aecl/diagnostics.h"
#include "aecl/harness.h"
#include "support/bandit_env.h"

using namespace aecl;
namespace fs = std::filesystem;

namespace {

// tolerances
constexpr double kPairSeedFraction = 7.0 / 8.0;
constexpr double kRetentionBand = 0.05;
constexpr double kVanillaAllMax = 0.45;
constexpr double kVanillaPriorMax = 0.15;
constexpr double kRoutingMin = 0.95;
constexpr int kRoutingEpisodesMin = 90;
constexpr double kSeparationMin = 0.90;
constexpr double kFlagTarget = 0.10;
constexpr double kFlagBand = 0.05;
constexpr int kFlagBatchesMin = 50;
constexpr double kDenseGradMax = 1e-4;
constexpr double kConvGradMax = 1e-3;
constexpr int kBanditSteps = 5000;
constexpr double kSmallGapMin = 0.25;
constexpr double kPaperGapMin = 0.35;

int failures = 0;

void report(int criterion, bool pass, const std::string& what, const std::string& detail) {
    if (!pass) ++failures;
    std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << std::setw(2) << criterion << "  " << what << "  ["
              << detail << "]" << std::endl;
}

std::string num(double v, int precision = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct Retention {
    std::vector<double> before, after;
};

Retention read_retention(const fs::path& p) {
    std::ifstream is(p);
    if (!is) throw std::runtime_error("missing " + p.string());
    std::string line;
    std::getline(is, line);
    Retention r;
    while (std::getline(is, line)) {
        std::stringstream ss(line);
        std::string seed, before, after;
        std::getline(ss, seed, ',');
        std::getline(ss, before, ',');
        std::getline(ss, after, ',');
        r.before.push_back(std::stod(before));
        r.after.push_back(std::stod(after));
    }
    return r;
}

double cell(const std::vector<AggregateRow>& rows, const std::string& agent, const std::string& name) {
    for (const auto& r : rows) {
        if (r.agent == agent && r.cell == name) return r.mean;
    }
    return std::nan("");
}

int task_index(const RunConfig& cfg, EnvKind k) {
    return static_cast<int>(std::find(cfg.task_sequence.begin(), cfg.task_sequence.end(), k) - cfg.task_sequence.begin());
}

// Same pipeline, a few thousand steps per task: checks determinism quickly.
RunConfig reduced_config(const fs::path& out, int flow) {
    RunConfig c = RunConfig::preset_defaults(Preset::Small);
    c.flow = flow;
    c.seeds = {11};
    c.output_dir = out;
    c.budget_steps = 4096;
    c.min_steps = 0;
    c.convergence_window = 0;
    c.n_steps = 1024;
    c.ppo_epochs = 2;
    c.collection_stride = 1;
    c.collection_capacity = 4000;
    c.ae_min_observations = 2000;
    c.ae_max_epochs = 4;
    c.eval_episodes_per_task = 5;
    c.flow2_episodes = 20;
    c.trace_length = 10;
    return c;
}

fs::path run_or_reuse(const RunConfig& cfg, bool reuse) {
    const fs::path root = cfg.output_dir;
    if (reuse && fs::exists(root / "aggregate.csv") && fs::exists(root / "config.ini") &&
        RunConfig::load(root / "config.ini").to_ini() == cfg.to_ini()) {
        std::clog << "reusing " << root << std::endl;
        return root;
    }
    fs::remove_all(root);
    const auto rep = run_flow(cfg);
    if (!rep.ok()) {
        for (const auto& s : rep.seeds) {
            if (!s.error.empty()) std::cerr << "seed " << s.seed << " aborted: " << s.error << '\n';
        }
    }
    return root;
}

}  // namespace

int main(int argc, char** argv) {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);

    CLI::App app{"acceptance criteria"};
    std::string out = "acceptance_runs";
    std::string config_path;
    bool reuse = false;
    std::vector<std::uint64_t> seeds;
    app.add_option("--out", out, "working directory for the runs");
    app.add_option("--config", config_path, "run config (default: small preset)")->check(CLI::ExistingFile);
    app.add_option("--seeds", seeds, "override seeds")->delimiter(',');
    app.add_flag("--reuse", reuse, "reuse finished runs whose config matches");
    CLI11_PARSE(app, argc, argv);

    RunConfig base = config_path.empty() ? RunConfig::preset_defaults(Preset::Small) : RunConfig::load(config_path);
    if (!seeds.empty()) base.seeds = seeds;
    const bool paper = base.preset == Preset::Paper;
    std::cout << "preset " << to_string(base.preset) << ", " << base.seeds.size() << " seeds, budget "
              << base.budget_steps << " steps per task" << std::endl;

    try {
        RunConfig c1 = base, c2 = base;
        c1.flow = 1;
        c1.output_dir = fs::path(out) / "flow1";
        c2.flow = 2;
        c2.output_dir = fs::path(out) / "flow2";
        const fs::path f1 = run_or_reuse(c1, reuse);
        const fs::path f2 = run_or_reuse(c2, reuse);
        const auto agg1 = aggregate_directory(f1);
        const auto agg2 = aggregate_directory(f2);
        const std::size_t kinds = base.task_sequence.size();

        // 1: registry size after the flow-2 stream
        {
            int exact = 0;
            std::string sizes;
            for (auto seed : base.seeds) {
                const auto dir = seed_dir(f2, seed) / "aecl";
                std::size_t n = 0;
                while (fs::exists(dir / "checkpoints" / ("pair_" + std::to_string(n) + "_policy.bin"))) ++n;
                exact += n == kinds;
                sizes += (sizes.empty() ? "" : " ") + std::to_string(n);
                if (n != kinds && fs::exists(dir / "routing_notes.txt")) {
                    std::cout << "  seed " << seed << " novel decisions:\n" << slurp(dir / "routing_notes.txt");
                }
            }
            const double frac = static_cast<double>(exact) / static_cast<double>(base.seeds.size());
            report(1, frac >= kPairSeedFraction, "flow-2 registry holds exactly " + std::to_string(kinds) + " pairs",
                   std::to_string(exact) + "/" + std::to_string(base.seeds.size()) + " seeds, sizes " + sizes +
                       ", need >= 7/8");
        }

        // 2: retention of the retrospective mean
        {
            bool ok = true;
            std::string detail;
            for (auto seed : base.seeds) {
                const auto s = summarize(seed, "aecl", read_episodes_csv(seed_dir(f1, seed) / "aecl" / "episodes.csv"), 1,
                                         base.eval_episodes_per_task, base.task_sequence);
                const double c1m = s.cells.at("checkpoint_1/all");
                const double c3m = s.cells.at("checkpoint_" + std::to_string(kinds) + "/all");
                ok = ok && std::abs(c3m - c1m) <= kRetentionBand;
                detail += (detail.empty() ? "" : "; ") + ("seed " + std::to_string(seed) + " " + num(c1m, 3) + " -> " + num(c3m, 3));
            }
            report(2, ok, "AE-CL checkpoint-3 mean within 0.05 of checkpoint 1", detail);
        }

        // 3: frozen pair 0 replays identically
        {
            bool ok = true;
            std::size_t episodes = 0;
            for (auto seed : base.seeds) {
                const auto r = read_retention(seed_dir(f1, seed) / "aecl" / "retention.csv");
                ok = ok && r.before == r.after && r.before.size() == 30;
                episodes += r.before.size();
            }
            report(3, ok, "pair 0 greedy returns bitwise equal before task 2 and after task 3",
                   std::to_string(episodes) + " fixed-seed episodes");
        }

        // 4: Vanilla forgets
        {
            const std::string last = "checkpoint_" + std::to_string(kinds) + "/";
            const double all = cell(agg1, "vanilla", last + "all");
            const double prior = cell(agg1, "vanilla", last + "prior");
            report(4, all <= kVanillaAllMax && prior <= kVanillaPriorMax,
                   "Vanilla checkpoint-3 mean <= 0.45 and tasks 1-2 mean <= 0.15",
                   "all " + num(all, 3) + ", tasks 1-2 " + num(prior, 3));
        }

        // 5: routing accuracy with every pair trained
        {
            int correct = 0, total = 0;
            for (auto seed : base.seeds) {
                const auto cps = flow1_checkpoints(read_episodes_csv(seed_dir(f1, seed) / "aecl" / "episodes.csv"),
                                                   base.eval_episodes_per_task, static_cast<int>(kinds));
                for (const auto& r : cps.back()) {
                    correct += r.decision == Decision::Match && r.routed_pair_id == task_index(base, r.true_kind);
                    ++total;
                }
            }
            const double acc = total ? static_cast<double>(correct) / total : 0.0;
            report(5, total >= kRoutingEpisodesMin && acc >= kRoutingMin, "routing selects the true task's pair",
                   std::to_string(correct) + "/" + std::to_string(total) + " = " + num(acc, 3) + ", need >= 0.95");
        }

        // 6 and 7 use the reloaded flow-1 pairs
        bool sep_ok = true;
        double worst_sep = 1.0;
        int flagged = 0, held_out = 0;
        bool mu_exact = true;
        for (auto seed : base.seeds) {
            const auto registry = load_registry(seed_dir(f1, seed) / "aecl");
            if (registry.size() != kinds) throw std::runtime_error("flow-1 registry of seed " + std::to_string(seed) + " is incomplete");
            const int batch = base.calibration_batch;
            std::cout << "  seed " << seed << " mean batch error (row: autoencoder, column: task), threshold\n";
            for (std::size_t i = 0; i < kinds; ++i) {
                const auto& ae = registry.at(static_cast<int>(i)).detector;
                std::cout << "    " << std::setw(16) << to_string(base.task_sequence[i]);
                for (std::size_t j = 0; j < kinds; ++j) {
                    const auto means = batch_mean_errors(ae.autoencoder, registry.at(static_cast<int>(j)).validation, batch,
                                                         derive_seed(seed, 100 * i + j));
                    double mean = 0.0;
                    std::size_t above = 0;
                    for (double m : means) {
                        mean += m;
                        above += m >= ae.threshold.threshold;
                    }
                    mean /= static_cast<double>(means.size());
                    std::cout << "  " << std::setw(9) << num(mean, 5);
                    if (i == j) {
                        sep_ok = sep_ok && mean < ae.threshold.threshold;
                    } else {
                        const double frac = static_cast<double>(above) / static_cast<double>(means.size());
                        worst_sep = std::min(worst_sep, frac);
                        sep_ok = sep_ok && frac >= kSeparationMin;
                    }
                }
                std::cout << "  | " << num(ae.threshold.threshold, 5) << '\n';

                // split-half calibration check
                std::vector<Observation> frames = registry.at(static_cast<int>(i)).validation;
                std::mt19937_64 rng(derive_seed(seed, 900 + i));
                std::shuffle(frames.begin(), frames.end(), rng);
                const std::vector<Observation> half_a(frames.begin(), frames.begin() + static_cast<std::ptrdiff_t>(frames.size() / 2));
                const std::vector<Observation> half_b(frames.begin() + static_cast<std::ptrdiff_t>(frames.size() / 2), frames.end());
                const auto fit_means = batch_mean_errors(ae.autoencoder, half_a, batch, derive_seed(seed, 910 + i));
                const auto t90 = fit_threshold(fit_means, 0.90, batch);
                const auto t50 = fit_threshold(fit_means, 0.50, batch);
                mu_exact = mu_exact && t50.threshold == t50.mu;
                for (double m : batch_mean_errors(ae.autoencoder, half_b, batch, derive_seed(seed, 920 + i))) {
                    flagged += m > t90.threshold;
                    ++held_out;
                }
            }
        }
        report(6, sep_ok, "own-task error below threshold, other tasks above it in >= 90% of batches",
               "worst off-diagonal exceedance " + num(worst_sep, 3));
        const double rate = held_out ? static_cast<double>(flagged) / held_out : 1.0;
        report(7, held_out >= kFlagBatchesMin && std::abs(rate - kFlagTarget) <= kFlagBand && mu_exact,
               "confidence 0.90 flags 0.10 +- 0.05 of held-out batches; confidence 0.5 gives mu",
               std::to_string(flagged) + "/" + std::to_string(held_out) + " = " + num(rate, 3) +
                   (mu_exact ? ", threshold(0.5) == mu" : ", threshold(0.5) != mu"));

        // 8: numerical core
        {
            const auto g = run_gradcheck_suite(20, 2024);
            int learned = 0;
            for (int seed = 1; seed <= 5; ++seed) {
                const int arm = seed % kNumActions;
                test_support::Bandit env(arm);
                ConvergenceRule never;
                never.window = 0;
                const auto trained = train_policy(env, PpoConfig{}, kBanditSteps, never, ObservationCollection{},
                                                  static_cast<std::uint64_t>(seed));
                std::mt19937_64 rng(0);
                learned += trained.session.steps <= kBanditSteps &&
                           act(trained.model, env.reset(), ActMode::Greedy, rng).action == arm;
            }
            report(8, g.dense_max_error < kDenseGradMax && g.conv_max_error < kConvGradMax && learned == 5,
                   "gradient checks and bandit sanity",
                   "dense " + num(g.dense_max_error * 1e6, 3) + "e-6, conv " + num(g.conv_max_error * 1e6, 3) +
                       "e-6 over 20 instances each; bandit " + std::to_string(learned) + "/5");
        }

        // 9: ongoing gap
        {
            const double a = cell(agg2, "aecl", "net/all");
            const double v = cell(agg2, "vanilla", "net/all");
            const double need = paper ? kPaperGapMin : kSmallGapMin;
            report(9, a - v >= need, "flow-2 AE-CL net mean exceeds Vanilla by >= " + num(need, 2),
                   "AE-CL " + num(a, 3) + ", Vanilla " + num(v, 3) + ", gap " + num(a - v, 3));
        }

        // 10: reproducibility on a reduced config
        {
            bool same = true;
            std::string detail;
            for (int flow : {1, 2}) {
                const auto a = fs::path(out) / ("repro_flow" + std::to_string(flow) + "_a");
                const auto b = fs::path(out) / ("repro_flow" + std::to_string(flow) + "_b");
                fs::remove_all(a);
                fs::remove_all(b);
                run_flow(reduced_config(a, flow));
                run_flow(reduced_config(b, flow));
                for (const char* agent : {"aecl", "vanilla"}) {
                    const auto ea = slurp(seed_dir(a, 11) / agent / "episodes.csv");
                    const auto eb = slurp(seed_dir(b, 11) / agent / "episodes.csv");
                    same = same && !ea.empty() && ea == eb;
                    detail += (detail.empty() ? "" : ", ") + ("flow " + std::to_string(flow) + " " + agent + " " +
                                                              std::to_string(ea.size()) + " bytes");
                }
            }
            report(10, same, "identical config and seed give byte-identical episodes.csv", detail);
        }
    } catch (const std::exception& e) {
        std::cout << "FAIL  acceptance run aborted: " << e.what() << std::endl;
        return 2;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
