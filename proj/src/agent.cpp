#include "aecl/agent.h"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace aecl {

const PolicyAutoencoderPair& PairRegistry::at(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= pairs_.size()) {
        throw std::out_of_range("pair registry: no pair " + std::to_string(id));
    }
    return *pairs_[static_cast<std::size_t>(id)];
}

const PolicyAutoencoderPair& PairRegistry::append(PolicyAutoencoderPair pair) {
    if (pair.id != static_cast<int>(pairs_.size())) {
        throw std::invalid_argument("pair registry: expected id " + std::to_string(pairs_.size()) + ", got " +
                                    std::to_string(pair.id));
    }
    if (!pair.policy.frozen() || !pair.detector.autoencoder.trained()) {
        throw std::invalid_argument("pair registry: policy must be frozen and autoencoder trained");
    }
    pairs_.push_back(std::make_unique<PolicyAutoencoderPair>(std::move(pair)));
    return *pairs_.back();
}

std::vector<const Detector*> PairRegistry::detectors() const {
    std::vector<const Detector*> out;
    out.reserve(pairs_.size());
    for (const auto& p : pairs_) out.push_back(&p->detector);
    return out;
}

RouteResult route_episode(const PairRegistry& registry, Environment& env, const AgentConfig& cfg,
                          std::mt19937_64& rng) {
    if (cfg.probe_size < 1) throw std::invalid_argument("route_episode: probe size must be positive");
    RouteResult r;
    r.progress.observation = env.reset();
    r.probe.push_back(r.progress.observation);

    if (!registry.empty()) {
        const std::span<const Observation> first(r.probe);
        double best = 0.0;
        for (std::size_t i = 0; i < registry.size(); ++i) {
            const double e = reconstruction_error(registry.at(static_cast<int>(i)).detector.autoencoder, first).mean;
            if (r.provisional_pair < 0 || e < best) {
                best = e;
                r.provisional_pair = static_cast<int>(i);
            }
        }
    }

    std::uniform_int_distribution<int> random_action(0, kNumActions - 1);
    while (static_cast<int>(r.probe.size()) < cfg.probe_size) {
        const int action = r.provisional_pair < 0
                               ? random_action(rng)
                               : act(registry.at(r.provisional_pair).policy, r.progress.observation, cfg.act_mode, rng)
                                     .action;
        const StepOutcome out = env.step(action);
        r.progress.episode_return += out.reward;
        ++r.progress.length;
        r.progress.observation = out.observation;
        if (out.done()) {
            r.progress.done = true;
            break;
        }
        r.probe.push_back(out.observation);
    }
    r.decision = decide(registry.detectors(), r.probe);
    return r;
}

EpisodeProgress run_episode_with(const PolicyAutoencoderPair& pair, Environment& env, EpisodeProgress progress,
                                 ActMode mode, std::mt19937_64& rng) {
    while (!progress.done) {
        const StepOutcome out = env.step(act(pair.policy, progress.observation, mode, rng).action);
        progress.episode_return += out.reward;
        ++progress.length;
        progress.observation = out.observation;
        progress.done = out.done();
    }
    return progress;
}

const PolicyAutoencoderPair& handle_novel(PairRegistry& registry, Environment& env,
                                          const LearningSettings& settings, std::uint64_t seed) {
    TrainedPolicy trained =
        train_policy(env, settings.ppo, settings.budget_steps, settings.convergence, settings.collection, seed);
    TrainedAutoencoder ae = train_autoencoder(trained.observations, settings.autoencoder, seed + 1);
    ThresholdModel threshold =
        calibrate_threshold(ae.model, ae.validation, settings.confidence, settings.calibration_batch, seed + 2);
    PolicyAutoencoderPair pair{static_cast<int>(registry.size()), std::move(trained.model),
                               Detector{std::move(ae.model), threshold}, std::move(trained.session),
                               std::move(ae.history), std::move(ae.validation)};
    return registry.append(std::move(pair));
}

std::string_view to_string(Decision d) { return d == Decision::Match ? "match" : "novel"; }

const PolicyAutoencoderPair& AeclAgent::learn(Environment& env, const LearningSettings& settings,
                                              std::uint64_t seed) {
    return handle_novel(registry_, env, settings, seed);
}

AeclAgent::Outcome AeclAgent::play(Environment& env, std::mt19937_64& rng, const LearningSettings* learning,
                                   std::uint64_t seed) {
    Outcome o;
    o.route = route_episode(registry_, env, cfg_, rng);
    if (!o.route.decision.novel()) {
        o.played_pair = o.route.decision.pair;
    } else if (learning != nullptr) {
        o.played_pair = learn(env, *learning, seed).id;
        o.trained = true;
        return o;
    } else {
        o.played_pair = o.route.provisional_pair;
    }
    if (o.played_pair < 0) {
        // nothing to act with: finish the episode with random actions
        std::uniform_int_distribution<int> random_action(0, kNumActions - 1);
        o.result = o.route.progress;
        while (!o.result.done) {
            const auto out = env.step(random_action(rng));
            o.result.episode_return += out.reward;
            ++o.result.length;
            o.result.done = out.done();
        }
        return o;
    }
    o.result = run_episode_with(registry_.at(o.played_pair), env, o.route.progress, cfg_.act_mode, rng);
    return o;
}

VanillaAgent::VanillaAgent(std::uint64_t seed) : model_(seed) {}

TrainingSession VanillaAgent::train_on(Environment& env, const LearningSettings& settings, std::uint64_t seed) {
    if (!opt_) opt_ = PolicyOptimizer::for_model(model_, settings.ppo.lr);
    TrainingSession s =
        run_ppo(model_, *opt_, env, settings.ppo, settings.budget_steps, settings.convergence, seed, nullptr);
    ++tasks_trained_;
    return s;
}

EpisodeResult VanillaAgent::play(Environment& env, ActMode mode, std::mt19937_64& rng) const {
    return play_episode(model_, env, mode, rng);
}

}  // namespace aecl
