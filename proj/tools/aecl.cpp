#include <malloc.h>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aecl/config.h"
#include "aecl/diagnostics.h"
#include "aecl/harness.h"

namespace {

struct FlowOptions {
    std::string config;
    std::string preset;
    std::vector<std::uint64_t> seeds;
    std::string out;
    std::string agent;
};

void add_flow_options(CLI::App* cmd, FlowOptions& o) {
    auto* config = cmd->add_option("--config", o.config, "INI run config")->check(CLI::ExistingFile);
    cmd->add_option("--preset", o.preset, "paper or small (ignored keys keep preset defaults)")
        ->check(CLI::IsMember({"paper", "small"}))
        ->excludes(config);
    cmd->add_option("--seed,--seeds", o.seeds, "seed list, e.g. --seeds 1,2,3")->delimiter(',');
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--agent", o.agent, "aecl, vanilla or both")->check(CLI::IsMember({"aecl", "vanilla", "both"}));
}

int run_flow_command(int flow, const FlowOptions& o) {
    std::string source;
    aecl::RunConfig cfg;
    if (!o.config.empty()) {
        std::ifstream is(o.config);
        std::stringstream ss;
        ss << is.rdbuf();
        source = ss.str();
        cfg = aecl::RunConfig::from_ini(source);
    } else {
        cfg = aecl::RunConfig::preset_defaults(o.preset.empty() ? aecl::Preset::Small : aecl::parse_preset(o.preset));
    }
    cfg.flow = flow;
    if (!o.seeds.empty()) cfg.seeds = o.seeds;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (!o.agent.empty()) cfg.agents = aecl::parse_agents(o.agent);
    cfg.validate();

    const auto report = aecl::run_flow(cfg, source);
    std::cout << aecl::format_aggregate_table(report.aggregate);
    for (const auto& s : report.seeds) {
        if (!s.error.empty()) std::cerr << "seed " << s.seed << " failed: " << s.error << '\n';
        if (s.aecl_agent) std::cout << "seed " << s.seed << ": aecl holds " << s.aecl_agent->registry().size() << " pairs\n";
    }
    std::cout << "outputs in " << cfg.output_dir.string() << '\n';
    return report.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    // keep freed training buffers instead of returning them to the kernel every update
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);

    CLI::App app{"Autoencoder-routed continual RL experiments"};
    app.require_subcommand(1);

    FlowOptions f1, f2;
    auto* flow1 = app.add_subcommand("flow1", "train tasks in sequence, evaluate retrospectively");
    add_flow_options(flow1, f1);
    auto* flow2 = app.add_subcommand("flow2", "random task stream, train at first exposure");
    add_flow_options(flow2, f2);

    std::string agg_dir;
    auto* agg = app.add_subcommand("aggregate", "recompute aggregate tables from episode logs");
    agg->add_option("--out,dir", agg_dir, "flow output directory")->required()->check(CLI::ExistingDirectory);

    int instances = 20;
    std::uint64_t gc_seed = 1;
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient checks");
    gc->add_option("--instances", instances, "random networks per family")->check(CLI::PositiveNumber);
    gc->add_option("--seed", gc_seed, "seed");

    std::string show_preset = "small";
    auto* show = app.add_subcommand("config", "print the fully resolved config of a preset");
    show->add_option("--preset", show_preset, "paper or small")->check(CLI::IsMember({"paper", "small"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*flow1) return run_flow_command(1, f1);
        if (*flow2) return run_flow_command(2, f2);
        if (*agg) {
            const auto rows = aecl::aggregate_directory(agg_dir);
            aecl::write_aggregate_csv(std::filesystem::path(agg_dir) / "aggregate.csv", rows);
            std::ofstream(std::filesystem::path(agg_dir) / "aggregate.txt") << aecl::format_aggregate_table(rows);
            std::cout << aecl::format_aggregate_table(rows);
            return 0;
        }
        if (*show) {
            std::cout << aecl::RunConfig::preset_defaults(aecl::parse_preset(show_preset)).to_ini();
            return 0;
        }
        if (*gc) {
            const auto s = aecl::run_gradcheck_suite(instances, gc_seed);
            const bool ok = s.dense_max_error < 1e-4 && s.conv_max_error < 1e-3;
            std::cout << "instances " << s.instances << "\ndense max relative error " << s.dense_max_error
                      << " (limit 1e-4)\nconv max relative error " << s.conv_max_error << " (limit 1e-3)\n"
                      << (ok ? "ok" : "FAILED") << '\n';
            return ok ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
