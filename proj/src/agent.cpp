#include "safedqn/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace safedqn::agent {

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
    throw std::invalid_argument("AgentConfig." + field + ": " + why);
}

nn::BellmanBatch gather(const ReplayBuffer& buffer, std::span<const std::size_t> slots,
                        const std::vector<double>& targets) {
    nn::BellmanBatch batch;
    batch.inputs.reserve(slots.size() * buffer.obs_dim());
    for (std::size_t i = 0; i < slots.size(); ++i) batch.add(buffer.x_t(slots[i]), buffer.action(slots[i]), targets[i]);
    return batch;
}

}  // namespace

std::string_view to_string(Mode m) noexcept { return m == Mode::SafeDQN ? "safe" : "coupled"; }
std::string_view to_string(TargetMode m) noexcept { return m == TargetMode::Joint ? "joint" : "per_head"; }
std::string_view to_string(LrDecayCadence m) noexcept {
    return m == LrDecayCadence::PerUpdate ? "per_update" : "per_episode";
}

void validate(const AgentConfig& c) {
    if (!(c.gamma > 0.0 && c.gamma <= 1.0)) bad("gamma", "must lie in (0, 1]");
    if (c.batch_size == 0) bad("batch_size", "must be positive");
    if (c.buffer_capacity < c.batch_size) bad("buffer_capacity", "must be >= batch_size");
    if (c.target_sync_tau == 0) bad("target_sync_tau", "must be positive");
    if (!(c.eta_start >= 0.0 && c.eta_start <= 1.0)) bad("eta_start", "must lie in [0, 1]");
    if (!(c.eta_end >= 0.0 && c.eta_end <= c.eta_start)) bad("eta_end", "must lie in [0, eta_start]");
    if (!(c.eta_decay >= 0.0 && c.eta_decay <= 1.0)) bad("eta_decay", "must lie in [0, 1]");
    if (c.k == 0) bad("k", "must be positive");
    if (c.train_every == 0) bad("train_every", "must be positive");
    if (!(c.learning_rate > 0.0)) bad("learning_rate", "must be positive");
    if (!(c.lr_decay > 0.0 && c.lr_decay <= 1.0)) bad("lr_decay", "must lie in (0, 1]");
    if (c.hidden.empty() || std::find(c.hidden.begin(), c.hidden.end(), 0u) != c.hidden.end())
        bad("hidden", "widths must be positive");
}

double eta_decay_factor(const AgentConfig& c) noexcept {
    if (c.eta_decay > 0.0) return c.eta_decay;
    if (c.eta_start <= 0.0 || c.eta_end <= 0.0 || c.eta_end >= c.eta_start) return 1.0;
    const double horizon = std::max(1.0, 0.8 * static_cast<double>(c.episodes));
    return std::pow(c.eta_end / c.eta_start, 1.0 / horizon);
}

double eta_at(const AgentConfig& c, std::size_t episode) noexcept {
    const double eta = c.eta_start * std::pow(eta_decay_factor(c), static_cast<double>(episode));
    return std::clamp(std::max(eta, c.eta_end), 0.0, 1.0);
}

nn::NetShape net_shape(const AgentConfig& c) {
    nn::NetShape s;
    s.input_dim = env::observation_size(c.k);
    s.hidden = c.hidden;
    s.action_count = env::kActionCount;
    s.residual_projection = c.residual_projection;
    return s;
}

PolicyBundle make_bundle(const AgentConfig& config, std::uint64_t seed) {
    validate(config);
    const nn::NetShape shape = net_shape(config);
    const std::uint64_t init_seed = derive_seed(seed, Stream::Init);
    PolicyBundle b;
    b.config = config;
    b.goal_net = nn::init_net(shape, derive_seed(init_seed, std::uint64_t{0}));
    b.safety_net = config.mode == Mode::SafeDQN ? nn::init_net(shape, derive_seed(init_seed, std::uint64_t{1}))
                                                : nn::DuelingNet(shape);
    b.goal_target = b.goal_net;
    b.safety_target = b.safety_net;
    b.goal_adam = nn::make_adam(b.goal_net.param_count(), config.learning_rate, config.lr_decay);
    b.safety_adam = nn::make_adam(b.safety_net.param_count(), config.learning_rate, config.lr_decay);
    const bool per_update = config.lr_decay_cadence == LrDecayCadence::PerUpdate;
    b.goal_adam.decay_per_update = per_update;
    b.safety_adam.decay_per_update = per_update;
    return b;
}

double safety_threshold(std::span<const double> q_g) noexcept {
    if (q_g.empty()) return 0.0;
    return std::accumulate(q_g.begin(), q_g.end(), 0.0) / static_cast<double>(q_g.size());
}

GateResult gated_argmax(std::span<const double> q_c, std::span<const double> q_g, double delta) {
    if (q_c.size() != q_g.size() || q_c.empty()) throw std::invalid_argument("gated_argmax: size mismatch");
    std::vector<bool> alive(q_c.size(), true);
    for (std::size_t remaining = q_c.size(); remaining > 0; --remaining) {
        std::size_t best = q_c.size();
        for (std::size_t u = 0; u < q_c.size(); ++u) {
            if (!alive[u]) continue;
            if (best == q_c.size() || q_c[u] + q_g[u] > q_c[best] + q_g[best]) best = u;
        }
        if (!(q_g[best] < delta)) return {best, false};
        alive[best] = false;
    }
    return {nn::argmax(q_g), true};
}

QPair evaluate_q(const PolicyBundle& bundle, std::span<const double> obs) {
    QPair q;
    q.q_c = nn::q_values(bundle.goal_net, obs);
    if (bundle.config.mode == Mode::SafeDQN)
        q.q_g = nn::q_values(bundle.safety_net, obs);
    else
        q.q_g.assign(q.q_c.size(), 0.0);
    return q;
}

env::ActionIndex greedy_action(const PolicyBundle& bundle, const QPair& q, const SelectOptions& options) {
    if (bundle.config.mode == Mode::CoupledDQN) return env::ActionIndex(nn::argmax(q.q_c));
    double delta = -std::numeric_limits<double>::infinity();
    if (options.gate) delta = options.delta_override.value_or(safety_threshold(q.q_g));
    return env::ActionIndex(gated_argmax(q.q_c, q.q_g, delta).action);
}

env::ActionIndex select_action(const PolicyBundle& bundle, std::span<const double> obs, double eta, Rng& rng,
                               const SelectOptions& options) {
    if (eta > 0.0 && uniform01(rng) < eta)
        return env::ActionIndex(static_cast<std::size_t>(uniform_int(rng, 0, env::kActionCount - 1)));
    return greedy_action(bundle, evaluate_q(bundle, obs), options);
}

Targets compute_targets(const PolicyBundle& bundle, const ReplayBuffer& buffer, std::span<const std::size_t> slots) {
    const std::size_t B = slots.size();
    const std::size_t A = bundle.goal_target.action_count();
    const double gamma = bundle.config.gamma;
    const bool coupled = bundle.config.mode == Mode::CoupledDQN;

    std::vector<double> next;
    next.reserve(B * buffer.obs_dim());
    for (std::size_t s : slots) {
        const auto x = buffer.x_next(s);
        next.insert(next.end(), x.begin(), x.end());
    }
    nn::ForwardTrace tc, tg;
    nn::forward_batch(bundle.goal_target, next, B, tc);
    if (!coupled) nn::forward_batch(bundle.safety_target, next, B, tg);

    Targets out;
    out.y_c.resize(B);
    if (!coupled) out.y_g.resize(B);
    std::vector<double> sum(A);
    for (std::size_t i = 0; i < B; ++i) {
        const std::size_t s = slots[i];
        const double live = buffer.done(s) ? 0.0 : 1.0;
        const std::span<const double> qc(tc.q.data() + i * A, A);
        if (coupled) {
            out.y_c[i] = buffer.r_c(s) + buffer.r_g(s) + gamma * qc[nn::argmax(qc)] * live;
            continue;
        }
        const std::span<const double> qg(tg.q.data() + i * A, A);
        std::size_t a_c, a_g;
        if (bundle.config.target_mode == TargetMode::Joint) {
            for (std::size_t u = 0; u < A; ++u) sum[u] = qc[u] + qg[u];
            a_c = a_g = nn::argmax(sum);
        } else {
            a_c = nn::argmax(qc);
            a_g = nn::argmax(qg);
        }
        out.y_c[i] = buffer.r_c(s) + gamma * qc[a_c] * live;
        out.y_g[i] = buffer.r_g(s) + gamma * qg[a_g] * live;
    }
    return out;
}

TrainLosses train_on_slots(PolicyBundle& bundle, const ReplayBuffer& buffer, std::span<const std::size_t> slots) {
    const Targets y = compute_targets(bundle, buffer, slots);
    TrainLosses losses;
    {
        const auto lg = nn::bellman_loss_grad(bundle.goal_net, gather(buffer, slots, y.y_c));
        nn::adam_update(bundle.goal_net, lg.grads, bundle.goal_adam);
        losses.loss_c = lg.loss;
    }
    if (bundle.config.mode == Mode::SafeDQN) {
        const auto lg = nn::bellman_loss_grad(bundle.safety_net, gather(buffer, slots, y.y_g));
        nn::adam_update(bundle.safety_net, lg.grads, bundle.safety_adam);
        losses.loss_g = lg.loss;
    }
    return losses;
}

TrainLosses train_step(PolicyBundle& bundle, const ReplayBuffer& buffer, Rng& rng) {
    if (buffer.size() < bundle.config.batch_size)
        throw std::logic_error("train_step: buffer holds fewer transitions than batch_size");
    const auto slots = buffer.sample_indices(bundle.config.batch_size, rng);
    return train_on_slots(bundle, buffer, slots);
}

void sync_targets(PolicyBundle& bundle) {
    bundle.goal_target = bundle.goal_net;
    bundle.safety_target = bundle.safety_net;
}

double state_safety_value(const PolicyBundle& bundle, std::span<const double> obs) {
    return nn::forward(bundle.safety_net, obs).v;
}

env::EnvConfig Trainer::training_env(const AgentConfig& config, env::EnvConfig env_config) {
    env_config.route_count = config.route_training;
    env_config.k_neighbors = config.k;
    return env_config;
}

Trainer::Trainer(const AgentConfig& config, const env::EnvConfig& env_config, std::uint64_t seed) {
    validate(config);
    state_.env_config = training_env(config, env_config);
    env::validate(state_.env_config);
    state_.bundle = make_bundle(config, seed);
    state_.buffer = ReplayBuffer(config.buffer_capacity, env::observation_size(config.k));
    state_.seed = seed;
    state_.agent_rng.seed(derive_seed(seed, Stream::Agent));
}

Trainer::Trainer(TrainerState state) : state_(std::move(state)) {}

EpisodeLog Trainer::run_episode() {
    if (finished()) throw std::logic_error("Trainer::run_episode: all episodes already ran");
    PolicyBundle& bundle = state_.bundle;
    const AgentConfig& cfg = bundle.config;
    const std::size_t episode = state_.next_episode;
    const double eta = eta_at(cfg, episode);
    const std::uint64_t env_seed = derive_seed(derive_seed(state_.seed, Stream::Env), std::uint64_t{episode});

    env::AirspaceEnv env(state_.env_config);
    env::Observation obs = env.reset(env_seed);
    SelectOptions select;
    select.gate = cfg.gate_in_training;
    const std::size_t warm = std::max(cfg.batch_size, cfg.warmup);

    EpisodeLog log;
    log.episode = episode;
    log.eta = eta;
    for (;;) {
        const env::ActionIndex action = select_action(bundle, obs.values, eta, state_.agent_rng, select);
        env::StepOutcome out = env.step(action);
        state_.buffer.push(obs.values, out.observation.values, action.index(), out.r_g, out.r_c, out.done);
        log.score += out.r_c + out.r_g;
        ++log.steps;
        ++state_.global_step;
        if (state_.buffer.size() >= warm && state_.global_step % cfg.train_every == 0)
            train_step(bundle, state_.buffer, state_.agent_rng);
        if (state_.global_step % cfg.target_sync_tau == 0) {
            sync_targets(bundle);
            ++state_.sync_count;
        }
        obs = std::move(out.observation);
        if (out.done) {
            log.termination = out.termination;
            break;
        }
    }
    if (cfg.lr_decay_cadence == LrDecayCadence::PerEpisode) {
        bundle.goal_adam.decay_lr();
        bundle.safety_adam.decay_lr();
    }
    log.lr = bundle.goal_adam.lr;
    ++state_.next_episode;
    return log;
}

std::vector<EpisodeLog> train_until_done(Trainer& trainer, const TrainHooks& hooks) {
    std::vector<EpisodeLog> logs;
    while (!trainer.finished()) {
        EpisodeLog log;
        try {
            log = trainer.run_episode();
        } catch (const nn::NumericError&) {
            if (hooks.on_numeric_failure) hooks.on_numeric_failure(trainer);
            throw;
        }
        logs.push_back(log);
        if (hooks.on_episode) hooks.on_episode(log, trainer);
    }
    return logs;
}

TrainResult train(const AgentConfig& config, const env::EnvConfig& env_config, std::uint64_t seed,
                  const TrainHooks& hooks) {
    Trainer trainer(config, env_config, seed);
    TrainResult r;
    r.log = train_until_done(trainer, hooks);
    r.bundle = trainer.bundle();
    return r;
}

}  // namespace safedqn::agent
