#include "aecl/config.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace aecl {

namespace {

std::string fmt(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

template <typename T>
T parse_number(const std::string& s, std::string_view key) {
    T v{};
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
        throw std::invalid_argument("config: bad value '" + s + "' for " + std::string(key));
    }
    return v;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

struct Field {
    std::string section;
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

template <typename T>
Field number(std::string section, std::string key, T RunConfig::*member) {
    const std::string name = section + "." + key;
    return {section, key,
            [member](const RunConfig& c) {
                if constexpr (std::is_floating_point_v<T>) {
                    return fmt(c.*member);
                } else {
                    return std::to_string(c.*member);
                }
            },
            [member, name](RunConfig& c, const std::string& v) { c.*member = parse_number<T>(v, name); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back({"run", "preset", [](const RunConfig& c) { return std::string(to_string(c.preset)); },
                     [](RunConfig& c, const std::string& v) { c.preset = parse_preset(v); }});
        f.push_back(number("run", "flow", &RunConfig::flow));
        f.push_back({"run", "task_sequence",
                     [](const RunConfig& c) {
                         std::string s;
                         for (auto k : c.task_sequence) s += (s.empty() ? "" : ", ") + std::string(to_string(k));
                         return s;
                     },
                     [](RunConfig& c, const std::string& v) {
                         c.task_sequence.clear();
                         for (const auto& item : split_list(v)) c.task_sequence.push_back(parse_env_kind(item));
                     }});
        f.push_back({"run", "seeds",
                     [](const RunConfig& c) {
                         std::string s;
                         for (auto seed : c.seeds) s += (s.empty() ? "" : ", ") + std::to_string(seed);
                         return s;
                     },
                     [](RunConfig& c, const std::string& v) {
                         c.seeds.clear();
                         for (const auto& item : split_list(v)) c.seeds.push_back(parse_number<std::uint64_t>(item, "run.seeds"));
                     }});
        f.push_back({"run", "agents", [](const RunConfig& c) { return std::string(to_string(c.agents)); },
                     [](RunConfig& c, const std::string& v) { c.agents = parse_agents(v); }});
        f.push_back({"run", "output_dir", [](const RunConfig& c) { return c.output_dir.string(); },
                     [](RunConfig& c, const std::string& v) { c.output_dir = v; }});

        f.push_back(number("training", "budget_steps", &RunConfig::budget_steps));
        f.push_back(number("training", "min_steps", &RunConfig::min_steps));
        f.push_back(number("training", "convergence_window", &RunConfig::convergence_window));
        f.push_back(number("training", "convergence_tolerance", &RunConfig::convergence_tolerance));

        f.push_back(number("ppo", "n_steps", &RunConfig::n_steps));
        f.push_back(number("ppo", "epochs", &RunConfig::ppo_epochs));
        f.push_back(number("ppo", "minibatch", &RunConfig::minibatch));
        f.push_back(number("ppo", "gamma", &RunConfig::gamma));
        f.push_back(number("ppo", "gae_lambda", &RunConfig::gae_lambda));
        f.push_back(number("ppo", "clip", &RunConfig::clip));
        f.push_back(number("ppo", "vf_coef", &RunConfig::vf_coef));
        f.push_back(number("ppo", "lr", &RunConfig::lr));
        f.push_back(number("ppo", "max_grad_norm", &RunConfig::max_grad_norm));
        for (EnvKind kind : kAllKinds) {
            const auto i = static_cast<std::size_t>(kind);
            f.push_back({"ppo", "ent_coef_" + std::string(to_string(kind)),
                         [i](const RunConfig& c) { return fmt(c.ent_coef[i]); },
                         [i](RunConfig& c, const std::string& v) { c.ent_coef[i] = parse_number<double>(v, "ppo.ent_coef"); }});
        }

        f.push_back(number("collection", "stride", &RunConfig::collection_stride));
        f.push_back(number("collection", "capacity", &RunConfig::collection_capacity));

        f.push_back(number("autoencoder", "max_epochs", &RunConfig::ae_max_epochs));
        f.push_back(number("autoencoder", "batch_size", &RunConfig::ae_batch_size));
        f.push_back(number("autoencoder", "validation_fraction", &RunConfig::ae_validation_fraction));
        f.push_back(number("autoencoder", "patience", &RunConfig::ae_patience));
        f.push_back(number("autoencoder", "lr", &RunConfig::ae_lr));
        f.push_back(number("autoencoder", "min_observations", &RunConfig::ae_min_observations));

        f.push_back(number("novelty", "confidence", &RunConfig::confidence));
        f.push_back(number("novelty", "probe_size", &RunConfig::probe_size));
        f.push_back(number("novelty", "calibration_batch", &RunConfig::calibration_batch));

        f.push_back(number("evaluation", "episodes_per_task", &RunConfig::eval_episodes_per_task));
        f.push_back(number("evaluation", "flow2_episodes", &RunConfig::flow2_episodes));
        f.push_back(number("evaluation", "trace_length", &RunConfig::trace_length));
        f.push_back({"evaluation", "act_mode",
                     [](const RunConfig& c) { return std::string(c.eval_mode == ActMode::Greedy ? "greedy" : "sample"); },
                     [](RunConfig& c, const std::string& v) {
                         if (v == "greedy") {
                             c.eval_mode = ActMode::Greedy;
                         } else if (v == "sample") {
                             c.eval_mode = ActMode::Sample;
                         } else {
                             throw std::invalid_argument("config: act_mode must be greedy or sample, got " + v);
                         }
                     }});
        f.push_back({"normalization", "bounds", [](const RunConfig& c) { return std::string(to_string(c.bounds)); },
                     [](RunConfig& c, const std::string& v) {
                         if (v == "observed") {
                             c.bounds = BoundsMode::Observed;
                         } else if (v == "analytic") {
                             c.bounds = BoundsMode::Analytic;
                         } else {
                             throw std::invalid_argument("config: bounds must be observed or analytic, got " + v);
                         }
                     }});
        return f;
    }();
    return table;
}

}  // namespace

std::string_view to_string(Preset p) { return p == Preset::Paper ? "paper" : "small"; }

std::string_view to_string(AgentSelection a) {
    switch (a) {
        case AgentSelection::Aecl: return "aecl";
        case AgentSelection::Vanilla: return "vanilla";
        case AgentSelection::Both: return "both";
    }
    return "both";
}

std::string_view to_string(BoundsMode b) { return b == BoundsMode::Observed ? "observed" : "analytic"; }

Preset parse_preset(std::string_view s) {
    if (s == "paper") return Preset::Paper;
    if (s == "small") return Preset::Small;
    throw std::invalid_argument("unknown preset '" + std::string(s) + "' (paper|small)");
}

AgentSelection parse_agents(std::string_view s) {
    if (s == "aecl") return AgentSelection::Aecl;
    if (s == "vanilla") return AgentSelection::Vanilla;
    if (s == "both") return AgentSelection::Both;
    throw std::invalid_argument("unknown agent selection '" + std::string(s) + "' (aecl|vanilla|both)");
}

RunConfig RunConfig::preset_defaults(Preset p) {
    RunConfig c;
    c.preset = p;
    if (p == Preset::Paper) {
        c.seeds = {1, 2, 3, 4, 5, 6, 7, 8};
        c.output_dir = "runs/paper";
        c.budget_steps = 501760;
        c.min_steps = 122880;
    } else {
        c.collection_capacity = 10000;
        c.flow2_episodes = 90;
    }
    return c;
}

EnvParams RunConfig::env_params(EnvKind kind) const {
    return preset == Preset::Paper ? EnvParams::paper(kind) : EnvParams::small(kind);
}

LearningSettings RunConfig::learning(EnvKind kind) const {
    LearningSettings s;
    s.ppo.n_steps = n_steps;
    s.ppo.epochs = ppo_epochs;
    s.ppo.minibatch = minibatch;
    s.ppo.gamma = gamma;
    s.ppo.gae_lambda = gae_lambda;
    s.ppo.clip = clip;
    s.ppo.vf_coef = vf_coef;
    s.ppo.ent_coef = ent_coef[static_cast<std::size_t>(kind)];
    s.ppo.lr = lr;
    s.ppo.max_grad_norm = max_grad_norm;
    s.budget_steps = budget_steps;
    s.convergence.window = convergence_window;
    s.convergence.tolerance = convergence_tolerance;
    s.convergence.min_steps = min_steps;
    s.collection.stride = collection_stride;
    s.collection.capacity = collection_capacity;
    s.autoencoder.max_epochs = ae_max_epochs;
    s.autoencoder.batch_size = ae_batch_size;
    s.autoencoder.validation_fraction = ae_validation_fraction;
    s.autoencoder.patience = ae_patience;
    s.autoencoder.lr = ae_lr;
    s.autoencoder.min_observations = ae_min_observations;
    s.confidence = confidence;
    s.calibration_batch = calibration_batch;
    return s;
}

AgentConfig RunConfig::agent() const { return {probe_size, eval_mode}; }

std::string RunConfig::to_ini() const {
    std::ostringstream os;
    std::string section;
    for (const auto& f : fields()) {
        if (f.section != section) {
            os << (section.empty() ? "" : "\n") << '[' << f.section << "]\n";
            section = f.section;
        }
        os << f.key << " = " << f.get(*this) << '\n';
    }
    return os.str();
}

RunConfig RunConfig::from_ini(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    RunConfig c;
    if (const auto preset = tree.get_optional<std::string>("run.preset")) c = preset_defaults(parse_preset(*preset));

    for (const auto& [section, keys] : tree) {
        if (keys.empty() && !keys.data().empty()) {
            throw std::invalid_argument("config: key '" + section + "' must sit inside a section");
        }
        for (const auto& [key, value] : keys) {
            const auto it = std::find_if(fields().begin(), fields().end(),
                                         [&](const Field& f) { return f.section == section && f.key == key; });
            if (it == fields().end()) throw std::invalid_argument("config: unknown key [" + section + "] " + key);
            if (key != "preset" || section != "run") it->set(c, value.data());
        }
    }
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return from_ini(ss.str());
}

void RunConfig::save(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("config: cannot write " + path.string());
    os << to_ini();
}

void RunConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw std::invalid_argument("config: " + what);
    };
    require(flow == 1 || flow == 2, "flow must be 1 or 2");
    require(!task_sequence.empty(), "task_sequence is empty");
    require(!seeds.empty(), "seeds is empty");
    std::set<EnvKind> distinct(task_sequence.begin(), task_sequence.end());
    require(distinct.size() == task_sequence.size(), "task_sequence repeats a kind");
    require(budget_steps >= n_steps, "budget_steps must cover at least one rollout of n_steps");
    require(n_steps > 0 && ppo_epochs > 0 && minibatch > 0, "ppo sizes must be positive");
    require(confidence > 0.0 && confidence < 1.0, "confidence must lie in (0, 1)");
    require(probe_size >= 1, "probe_size must be positive");
    require(calibration_batch >= 1, "calibration_batch must be positive");
    require(collection_stride >= 1 && collection_capacity >= ae_min_observations,
            "collection capacity must hold at least ae min_observations frames");
    require(ae_validation_fraction > 0.0 && ae_validation_fraction < 1.0, "validation_fraction must lie in (0, 1)");
    require(eval_episodes_per_task >= 1 && flow2_episodes >= 1 && trace_length >= 1, "episode counts must be positive");
}

}  // namespace aecl
