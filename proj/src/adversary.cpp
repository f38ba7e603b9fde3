#include "safedqn/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace safedqn::adversary {

void validate(const AttackConfig& c) {
    if (!(c.epsilon >= 0.0) || !std::isfinite(c.epsilon)) throw std::invalid_argument("AttackConfig.epsilon: must be >= 0");
    if (!(c.temperature > 0.0)) throw std::invalid_argument("AttackConfig.temperature: must be > 0");
    if (const auto* u = std::get_if<UniformRandom>(&c.timing)) {
        if (!(u->frequency >= 0.0 && u->frequency <= 1.0))
            throw std::invalid_argument("AttackConfig.frequency: must lie in [0, 1]");
    }
    if (const auto* s = std::get_if<StrategicallyTimed>(&c.timing)) {
        if (!std::isfinite(s->beta)) throw std::invalid_argument("AttackConfig.beta: must be finite");
    }
}

std::string_view to_string(Orientation o) noexcept {
    switch (o) {
        case Orientation::SafetyOriented: return "safety";
        case Orientation::GoalOriented: return "goal";
        case Orientation::Overall: return "overall";
    }
    return "safety";
}

std::optional<Orientation> orientation_from_string(std::string_view s) noexcept {
    for (auto o : {Orientation::SafetyOriented, Orientation::GoalOriented, Orientation::Overall})
        if (to_string(o) == s) return o;
    return std::nullopt;
}

std::string_view timing_name(const Timing& t) noexcept {
    if (std::holds_alternative<EveryStep>(t)) return "every";
    if (std::holds_alternative<UniformRandom>(t)) return "uniform";
    return "st";
}

double timing_parameter(const Timing& t) noexcept {
    if (const auto* u = std::get_if<UniformRandom>(&t)) return u->frequency;
    if (const auto* s = std::get_if<StrategicallyTimed>(&t)) return s->beta;
    return 1.0;
}

std::vector<double> fgsm_step(std::span<const double> obs, std::span<const double> gradient, double epsilon,
                              bool clamp) {
    if (obs.size() != gradient.size()) throw std::invalid_argument("fgsm_step: gradient/observation size mismatch");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("fgsm_step: epsilon must be >= 0");
    std::vector<double> out(obs.begin(), obs.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += epsilon * sign(gradient[i]);
        if (clamp) out[i] = std::clamp(out[i], 0.0, 1.0);
        // Rounding of x + epsilon can overshoot the bound by an ulp.
        while (std::abs(out[i] - obs[i]) > epsilon) out[i] = std::nextafter(out[i], obs[i]);
    }
    return out;
}

std::vector<double> fgsm(std::span<const double> obs, const nn::DuelingNet& net, double epsilon, bool clamp) {
    return fgsm_step(obs, nn::input_gradient(net, obs), epsilon, clamp);
}

std::vector<double> attack_gradient(const agent::PolicyBundle& bundle, std::span<const double> obs,
                                    Orientation orientation) {
    if (bundle.config.mode == agent::Mode::CoupledDQN) return nn::input_gradient(bundle.goal_net, obs);
    switch (orientation) {
        case Orientation::SafetyOriented: return nn::input_gradient(bundle.safety_net, obs);
        case Orientation::GoalOriented: return nn::input_gradient(bundle.goal_net, obs);
        case Orientation::Overall: break;
    }
    auto q = nn::q_values(bundle.goal_net, obs);
    const auto q_g = nn::q_values(bundle.safety_net, obs);
    for (std::size_t u = 0; u < q.size(); ++u) q[u] += q_g[u];
    const auto dq = nn::cross_entropy_dq(q);
    auto g = nn::input_vjp(bundle.goal_net, obs, dq);
    const auto g_s = nn::input_vjp(bundle.safety_net, obs, dq);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += g_s[i];
    return g;
}

std::vector<double> craft(const agent::PolicyBundle& bundle, std::span<const double> obs, const AttackConfig& config) {
    if (config.epsilon == 0.0) return {obs.begin(), obs.end()};
    return fgsm_step(obs, attack_gradient(bundle, obs, config.orientation), config.epsilon, config.clamp);
}

double preference(std::span<const double> q, double temperature) {
    if (!(temperature > 0.0)) throw std::invalid_argument("preference: temperature must be > 0");
    if (q.empty()) return 0.0;
    const auto p = nn::softmax(q, temperature);
    const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
    return *hi - *lo;
}

bool should_attack(const AttackConfig& config, std::span<const double> q_c, std::span<const double> q_g, Rng& rng,
                   AttackStats& stats) {
    AttackDecision d;
    d.t = stats.steps_total;
    d.p_c = preference(q_c, config.temperature);
    d.p_g = preference(q_g, config.temperature);

    bool fire = false;
    if (std::holds_alternative<EveryStep>(config.timing)) {
        fire = true;
    } else if (const auto* u = std::get_if<UniformRandom>(&config.timing)) {
        fire = uniform01(rng) < u->frequency;
    } else {
        const double beta = std::get<StrategicallyTimed>(config.timing).beta;
        double p = 0.0;
        switch (config.orientation) {
            case Orientation::SafetyOriented: p = d.p_g; break;
            case Orientation::GoalOriented: p = d.p_c; break;
            case Orientation::Overall: {
                std::vector<double> sum(q_c.begin(), q_c.end());
                for (std::size_t i = 0; i < sum.size() && i < q_g.size(); ++i) sum[i] += q_g[i];
                p = preference(sum, config.temperature);
                break;
            }
        }
        fire = p > beta;
    }
    if (config.budget && stats.steps_attacked >= *config.budget) fire = false;

    d.attacked = fire;
    ++stats.steps_total;
    if (fire) ++stats.steps_attacked;
    stats.log.push_back(d);
    return fire;
}

EpisodeRecord rollout(const env::EnvConfig& env_config, const agent::PolicyBundle& bundle, std::uint64_t seed,
                      const AttackConfig* attack, std::uint64_t attack_seed, AttackStats* stats, bool keep_steps) {
    if (env::observation_size(env_config.k_neighbors) != bundle.input_dim())
        throw std::invalid_argument("rollout: bundle input_dim " + std::to_string(bundle.input_dim()) +
                                    " does not match observation size " +
                                    std::to_string(env::observation_size(env_config.k_neighbors)));
    if (attack) validate(*attack);
    const bool coupled = bundle.config.mode == agent::Mode::CoupledDQN;
    AttackStats local_stats;
    AttackStats& st = stats ? *stats : local_stats;
    Rng attack_rng(attack_seed);

    env::AirspaceEnv env(env_config);
    env::Observation obs = env.reset(seed);
    EpisodeRecord rec;
    rec.seed = seed;
    rec.initial = env.state();
    for (;;) {
        agent::QPair q = agent::evaluate_q(bundle, obs.values);
        env::ActionIndex action;
        bool attacked = false;
        if (attack) {
            const std::span<const double> q_g = coupled ? std::span<const double>(q.q_c) : std::span<const double>(q.q_g);
            attacked = should_attack(*attack, q.q_c, q_g, attack_rng, st);
        }
        if (attacked) {
            const auto adv = craft(bundle, obs.values, *attack);
            double linf = 0.0;
            for (std::size_t i = 0; i < adv.size(); ++i) linf = std::max(linf, std::abs(adv[i] - obs.values[i]));
            st.log.back().linf_applied = linf;
            action = agent::greedy_action(bundle, agent::evaluate_q(bundle, adv));
        } else {
            action = agent::greedy_action(bundle, q);
        }
        env::StepOutcome out = env.step(action);
        rec.score += out.r_c + out.r_g;
        if (out.conflict_this_step) ++rec.conflict_steps;
        StepRecord sr;
        sr.t = env.state().step;
        sr.action = action.index();
        sr.r_c = out.r_c;
        sr.r_g = out.r_g;
        sr.conflict = out.conflict_this_step;
        sr.termination = out.termination;
        if (keep_steps) {
            sr.ownship = env.state().ownship;
            sr.intruders = env.state().intruders;
        }
        rec.steps.push_back(std::move(sr));
        obs = std::move(out.observation);
        if (out.done) {
            rec.termination = out.termination;
            break;
        }
    }
    return rec;
}

AttackedRollout attacked_rollout(const env::EnvConfig& env_config, const agent::PolicyBundle& bundle,
                                 const AttackConfig& attack, std::uint64_t seed) {
    AttackedRollout r;
    r.episode = rollout(env_config, bundle, seed, &attack, derive_seed(seed, Stream::Attack), &r.stats);
    return r;
}

void write_attack_log_csv(std::ostream& os, const AttackStats& stats) {
    os << "t,p_c,p_g,attacked,linf_applied\n";
    os.precision(17);
    for (const auto& d : stats.log)
        os << d.t << ',' << d.p_c << ',' << d.p_g << ',' << (d.attacked ? 1 : 0) << ',' << d.linf_applied << '\n';
}

}  // namespace safedqn::adversary
