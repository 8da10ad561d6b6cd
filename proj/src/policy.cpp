#include "aecl/policy.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "aecl/nn/checkpoint.h"

namespace aecl {

namespace {

std::vector<nn::LayerSpec> torso_layers() {
    return {nn::Conv2D{16},
            nn::Activation{nn::ActivationKind::Relu},
            nn::Conv2D{32},
            nn::Activation{nn::ActivationKind::Relu},
            nn::Flatten{},
            nn::Dense{kViewSize * kViewSize * 32, PolicyModel::kFeatures},
            nn::Activation{nn::ActivationKind::Relu}};
}

double state_value(const PolicyModel& model, const Observation& obs) {
    return model.evaluate(stack_observations({obs})).values[0];
}

template <typename Fn>
void for_each_gradient(std::vector<nn::Tensor<float>>& a, std::vector<nn::Tensor<float>>& b,
                       std::vector<nn::Tensor<float>>& c, Fn fn) {
    for (auto* list : {&a, &b, &c})
        for (auto& g : *list)
            for (auto& v : g.data) fn(v);
}

}  // namespace

PolicyModel::PolicyModel(std::uint64_t seed)
    : torso_({kViewSize, kViewSize, kObsChannels}, torso_layers(), seed),
      actor_({kFeatures}, {nn::Dense{kFeatures, kNumActions}}, seed + 1),
      critic_({kFeatures}, {nn::Dense{kFeatures, 1}}, seed + 2) {}

PolicyModel::PolicyModel(nn::Network<float> torso, nn::Network<float> actor, nn::Network<float> critic)
    : torso_(std::move(torso)), actor_(std::move(actor)), critic_(std::move(critic)) {
    if (torso_.input_shape() != nn::Shape{kViewSize, kViewSize, kObsChannels} ||
        torso_.output_shape() != nn::Shape{kFeatures} || actor_.input_shape() != nn::Shape{kFeatures} ||
        actor_.output_shape() != nn::Shape{kNumActions} || critic_.input_shape() != nn::Shape{kFeatures} ||
        critic_.output_shape() != nn::Shape{1}) {
        throw std::invalid_argument("policy: networks do not form a 7x7x3 -> (5 logits, value) actor-critic");
    }
}

PolicyModel::Batch PolicyModel::evaluate(const nn::Tensor<float>& observations) const {
    const auto features = torso_.forward(observations);
    Batch out;
    out.logits = actor_.forward(features);
    out.values = critic_.forward(features).data;
    return out;
}

void PolicyModel::require_unfrozen() const {
    if (frozen_) throw std::logic_error("policy: model is frozen");
}

nn::Network<float>& PolicyModel::mutable_torso() {
    require_unfrozen();
    return torso_;
}
nn::Network<float>& PolicyModel::mutable_actor() {
    require_unfrozen();
    return actor_;
}
nn::Network<float>& PolicyModel::mutable_critic() {
    require_unfrozen();
    return critic_;
}

std::uint64_t PolicyModel::fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto* net : {&torso_, &actor_, &critic_}) {
        for (const auto& p : net->parameters()) {
            for (float v : p.data) {
                h ^= std::bit_cast<std::uint32_t>(v);
                h *= 1099511628211ULL;
            }
        }
    }
    return h;
}

void PolicyModel::save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("policy: cannot open " + path.string());
    nn::save_network(os, torso_);
    nn::save_network(os, actor_);
    nn::save_network(os, critic_);
}

PolicyModel PolicyModel::load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("policy: cannot open " + path.string());
    auto torso = nn::load_network(is);
    auto actor = nn::load_network(is);
    auto critic = nn::load_network(is);
    return PolicyModel(std::move(torso), std::move(actor), std::move(critic));
}

std::array<double, kNumActions> log_softmax(std::span<const float> logits) {
    std::array<double, kNumActions> out{};
    double mx = -INFINITY;
    for (float l : logits) mx = std::max(mx, static_cast<double>(l));
    double sum = 0.0;
    for (float l : logits) sum += std::exp(static_cast<double>(l) - mx);
    const double lse = mx + std::log(sum);
    for (int a = 0; a < kNumActions; ++a) out[static_cast<std::size_t>(a)] = static_cast<double>(logits[a]) - lse;
    return out;
}

ActResult act(const PolicyModel& model, const Observation& obs, ActMode mode, std::mt19937_64& rng) {
    const auto batch = model.evaluate(stack_observations({obs}));
    const std::span<const float> logits(batch.logits.data.data(), kNumActions);
    for (float l : logits) {
        if (!std::isfinite(l)) throw std::domain_error("policy: non-finite logit from the actor head");
    }
    const auto logp = log_softmax(logits);
    ActResult r;
    r.value = batch.values[0];
    if (mode == ActMode::Greedy) {
        r.action = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    } else {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        double acc = 0.0;
        r.action = kNumActions - 1;
        for (int a = 0; a < kNumActions; ++a) {
            acc += std::exp(logp[static_cast<std::size_t>(a)]);
            if (u < acc) {
                r.action = a;
                break;
            }
        }
    }
    r.log_prob = logp[static_cast<std::size_t>(r.action)];
    return r;
}

void RolloutBuffer::clear() {
    observations.clear();
    actions.clear();
    log_probs.clear();
    values.clear();
    rewards.clear();
    dones.clear();
}

void RolloutBuffer::push(const Observation& obs, int action, double log_prob, double value, double reward, bool done) {
    observations.push_back(obs);
    actions.push_back(action);
    log_probs.push_back(log_prob);
    values.push_back(value);
    rewards.push_back(reward);
    dones.push_back(done);
}

Advantages compute_gae(const RolloutBuffer& buffer, double gamma, double lambda, double bootstrap_value) {
    const std::size_t n = buffer.size();
    Advantages out;
    out.advantages.assign(n, 0.0);
    out.returns.assign(n, 0.0);
    double next_adv = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        const double live = buffer.dones[i] ? 0.0 : 1.0;
        const double next_value = i + 1 < n ? buffer.values[i + 1] : bootstrap_value;
        const double delta = buffer.rewards[i] + gamma * next_value * live - buffer.values[i];
        next_adv = delta + gamma * lambda * live * next_adv;
        out.advantages[i] = next_adv;
        out.returns[i] = next_adv + buffer.values[i];
    }
    return out;
}

void normalize_advantages(std::vector<double>& adv) {
    if (adv.empty()) return;
    const double n = static_cast<double>(adv.size());
    const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / n);
    for (double& a : adv) a = (a - mean) / (sd + 1e-8);
}

double clipped_surrogate(double ratio, double advantage, double clip) {
    return std::min(ratio * advantage, std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage);
}

PolicyOptimizer PolicyOptimizer::for_model(const PolicyModel& model, double lr) {
    return {nn::make_adam(model.torso().parameters(), lr), nn::make_adam(model.actor().parameters(), lr),
            nn::make_adam(model.critic().parameters(), lr)};
}

UpdateDiagnostics ppo_update(PolicyModel& model, PolicyOptimizer& opt, const RolloutBuffer& buffer,
                             const Advantages& adv, const PpoConfig& cfg, std::mt19937_64& rng) {
    if (model.frozen()) throw std::logic_error("ppo_update: model is frozen");
    const std::size_t n = buffer.size();
    if (n == 0 || adv.advantages.size() != n) throw std::invalid_argument("ppo_update: empty or mismatched rollout");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    UpdateDiagnostics diag;
    std::size_t batches = 0;
    double kl_sum = 0.0, clipped = 0.0, samples = 0.0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.minibatch)) {
            const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.minibatch));
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                               order.begin() + static_cast<std::ptrdiff_t>(end));
            const int b = static_cast<int>(idx.size());
            const double inv_b = 1.0 / b;

            std::vector<double> a_norm(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) a_norm[i] = adv.advantages[idx[i]];
            if (idx.size() > 1) normalize_advantages(a_norm);

            const auto& torso = model.torso();
            const auto& actor = model.actor();
            const auto& critic = model.critic();
            nn::Tape<float> t_tape, a_tape, c_tape;
            const auto feats = torso.forward(stack_observations(buffer.observations, idx), t_tape);
            const auto logits = actor.forward(feats, a_tape);
            const auto values = critic.forward(feats, c_tape);

            nn::Tensor<float> dlogits({b, kNumActions});
            nn::Tensor<float> dvalues({b, 1});
            double pl = 0.0, vl = 0.0, ent = 0.0;
            for (int i = 0; i < b; ++i) {
                const std::size_t k = idx[static_cast<std::size_t>(i)];
                const auto logp = log_softmax(
                    std::span<const float>(logits.data.data() + static_cast<std::ptrdiff_t>(i) * kNumActions, kNumActions));
                const int action = buffer.actions[k];
                const double log_ratio = logp[static_cast<std::size_t>(action)] - buffer.log_probs[k];
                const double ratio = std::exp(log_ratio);
                const double a = a_norm[static_cast<std::size_t>(i)];
                const double unclipped = ratio * a;
                const double surrogate = clipped_surrogate(ratio, a, cfg.clip);
                pl -= surrogate * inv_b;

                const bool outside = ratio < 1.0 - cfg.clip || ratio > 1.0 + cfg.clip;
                const bool gradient_flows = unclipped <= surrogate || !outside;
                const double dlogp = gradient_flows ? -unclipped * inv_b : 0.0;

                double entropy = 0.0;
                for (double lp : logp) entropy -= std::exp(lp) * lp;
                ent += entropy * inv_b;

                for (int j = 0; j < kNumActions; ++j) {
                    const double p = std::exp(logp[static_cast<std::size_t>(j)]);
                    const double d_policy = dlogp * ((j == action ? 1.0 : 0.0) - p);
                    // loss carries -ent_coef * H; dH/dz_j = -p_j (log p_j + H)
                    const double d_entropy = cfg.ent_coef * p * (logp[static_cast<std::size_t>(j)] + entropy) * inv_b;
                    dlogits.data[static_cast<std::size_t>(i * kNumActions + j)] = static_cast<float>(d_policy + d_entropy);
                }

                const double err = values.data[static_cast<std::size_t>(i)] - adv.returns[k];
                vl += err * err * inv_b;
                dvalues.data[static_cast<std::size_t>(i)] = static_cast<float>(cfg.vf_coef * 2.0 * err * inv_b);

                kl_sum += (ratio - 1.0) - log_ratio;
                clipped += outside ? 1.0 : 0.0;
                samples += 1.0;
            }

            auto g_torso = torso.zero_gradients();
            auto g_actor = actor.zero_gradients();
            auto g_critic = critic.zero_gradients();
            auto dfeat = actor.backward(a_tape, dlogits, g_actor);
            const auto dfeat_c = critic.backward(c_tape, dvalues, g_critic);
            for (std::size_t i = 0; i < dfeat.size(); ++i) dfeat.data[i] += dfeat_c.data[i];
            torso.backward(t_tape, dfeat, g_torso);

            double sq = 0.0;
            for_each_gradient(g_torso, g_actor, g_critic, [&](float& v) { sq += static_cast<double>(v) * v; });
            const double norm = std::sqrt(sq);
            if (norm > cfg.max_grad_norm) {
                const double scale = cfg.max_grad_norm / norm;
                for_each_gradient(g_torso, g_actor, g_critic,
                                  [&](float& v) { v = static_cast<float>(static_cast<double>(v) * scale); });
            }
            nn::adam_step(model.mutable_torso().mutable_parameters(), g_torso, opt.torso);
            nn::adam_step(model.mutable_actor().mutable_parameters(), g_actor, opt.actor);
            nn::adam_step(model.mutable_critic().mutable_parameters(), g_critic, opt.critic);

            diag.policy_loss += pl;
            diag.value_loss += vl;
            diag.entropy += ent;
            ++batches;
        }
    }
    diag.policy_loss /= static_cast<double>(batches);
    diag.value_loss /= static_cast<double>(batches);
    diag.entropy /= static_cast<double>(batches);
    diag.approx_kl = kl_sum / samples;
    diag.clip_fraction = clipped / samples;
    return diag;
}

void LearningCurve::write_csv(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("learning curve: cannot open " + path.string());
    os << "step,episode_return,policy_loss,value_loss,entropy\n";
    os.precision(9);
    for (const auto& p : points) {
        os << p.step << ',' << p.episode_return << ',' << p.policy_loss << ',' << p.value_loss << ',' << p.entropy
           << '\n';
    }
}

bool has_converged(const std::vector<double>& returns, const ConvergenceRule& rule) {
    const auto w = static_cast<std::size_t>(rule.window);
    if (w == 0 || returns.size() < 2 * w) return false;
    const auto last = returns.end();
    const double recent = std::accumulate(last - static_cast<std::ptrdiff_t>(w), last, 0.0) / static_cast<double>(w);
    const double previous =
        std::accumulate(last - static_cast<std::ptrdiff_t>(2 * w), last - static_cast<std::ptrdiff_t>(w), 0.0) /
        static_cast<double>(w);
    return std::abs(recent - previous) < rule.tolerance * std::max(std::abs(previous), 1e-8);
}

TrainingSession run_ppo(PolicyModel& model, PolicyOptimizer& opt, Environment& env, const PpoConfig& cfg,
                        std::int64_t budget_steps, const ConvergenceRule& rule, std::uint64_t seed,
                        ObservationBuffer* collect) {
    if (model.frozen()) throw std::logic_error("run_ppo: model is frozen");
    std::mt19937_64 rng(seed);
    TrainingSession session;
    RolloutBuffer buffer;
    std::vector<double> returns;
    UpdateDiagnostics last;

    Observation obs = env.reset();
    if (collect) collect->offer(obs);
    double episode_return = 0.0;

    while (session.steps + cfg.n_steps <= budget_steps) {
        buffer.clear();
        for (int t = 0; t < cfg.n_steps; ++t) {
            const ActResult a = act(model, obs, ActMode::Sample, rng);
            const StepOutcome out = env.step(a.action);
            episode_return += out.reward;
            double reward = out.reward;
            if (out.truncated) reward += cfg.gamma * state_value(model, out.observation);
            buffer.push(obs, a.action, a.log_prob, a.value, reward, out.done());
            ++session.steps;
            if (out.done()) {
                session.curve.points.push_back(
                    {session.steps, episode_return, last.policy_loss, last.value_loss, last.entropy});
                returns.push_back(episode_return);
                episode_return = 0.0;
                obs = env.reset();
            } else {
                obs = out.observation;
            }
            if (collect) collect->offer(obs);
        }
        const double bootstrap = buffer.dones.back() ? 0.0 : state_value(model, obs);
        const Advantages adv = compute_gae(buffer, cfg.gamma, cfg.gae_lambda, bootstrap);
        last = ppo_update(model, opt, buffer, adv, cfg, rng);
        if (session.steps >= rule.min_steps && has_converged(returns, rule)) {
            session.converged = true;
            break;
        }
    }
    return session;
}

TrainedPolicy train_policy(Environment& env, const PpoConfig& cfg, std::int64_t budget_steps,
                           const ConvergenceRule& rule, const ObservationCollection& collection, std::uint64_t seed) {
    if (budget_steps < cfg.n_steps) {
        throw std::invalid_argument("train_policy: budget of " + std::to_string(budget_steps) +
                                    " steps is smaller than one rollout of " + std::to_string(cfg.n_steps));
    }
    TrainedPolicy out{PolicyModel(seed), ObservationBuffer(collection.stride, collection.capacity, seed ^ 0xA5A5A5A5ULL),
                      {}};
    auto opt = PolicyOptimizer::for_model(out.model, cfg.lr);
    out.session = run_ppo(out.model, opt, env, cfg, budget_steps, rule, seed + 17, &out.observations);
    out.model.freeze();
    return out;
}

EpisodeResult play_episode(const PolicyModel& model, Environment& env, ActMode mode, std::mt19937_64& rng) {
    EpisodeResult r;
    Observation obs = env.reset();
    while (true) {
        const auto out = env.step(act(model, obs, mode, rng).action);
        r.episode_return += out.reward;
        ++r.length;
        if (out.done()) break;
        obs = out.observation;
    }
    return r;
}

}  // namespace aecl
