#pragma once

// Observation-space FGSM attacks against the agent and their timing rules.
// Only the agent's view is perturbed; the environment state never is.

#include "safedqn/agent.hpp"
#include "safedqn/airspace_env.hpp"
#include "safedqn/dueling_net.hpp"
#include "safedqn/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace safedqn::adversary {

enum class Orientation { SafetyOriented, GoalOriented, Overall };

struct EveryStep {
    bool operator==(const EveryStep&) const = default;
};
struct UniformRandom {
    double frequency = 1.0;
    bool operator==(const UniformRandom&) const = default;
};
struct StrategicallyTimed {
    double beta = 0.5;
    bool operator==(const StrategicallyTimed&) const = default;
};
using Timing = std::variant<EveryStep, UniformRandom, StrategicallyTimed>;

struct AttackConfig {
    Orientation orientation = Orientation::SafetyOriented;
    double epsilon = 0.03;
    Timing timing = EveryStep{};
    std::optional<std::size_t> budget;
    double temperature = 1.0;
    // Clamp perturbed observations to [0, 1].
    bool clamp = true;

    bool operator==(const AttackConfig&) const = default;
};

void validate(const AttackConfig& config);

std::string_view to_string(Orientation o) noexcept;
std::optional<Orientation> orientation_from_string(std::string_view s) noexcept;
std::string_view timing_name(const Timing& t) noexcept;
// beta for ST timing, frequency for uniform timing, 1 for every-step.
double timing_parameter(const Timing& t) noexcept;

struct AttackDecision {
    std::size_t t = 0;
    double p_c = 0.0;
    double p_g = 0.0;
    bool attacked = false;
    double linf_applied = 0.0;
};

struct AttackStats {
    std::size_t steps_total = 0;
    std::size_t steps_attacked = 0;
    std::vector<AttackDecision> log;

    double achieved_frequency() const noexcept {
        return steps_total == 0 ? 0.0 : static_cast<double>(steps_attacked) / static_cast<double>(steps_total);
    }
};

// sign with sign(0) = 0.
constexpr double sign(double x) noexcept { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// x + epsilon * sign(gradient), optionally clamped to [0, 1].
std::vector<double> fgsm_step(std::span<const double> obs, std::span<const double> gradient, double epsilon,
                              bool clamp = true);

// FGSM against one network's argmax cross-entropy.
std::vector<double> fgsm(std::span<const double> obs, const nn::DuelingNet& net, double epsilon, bool clamp = true);

// Input gradient of the cross-entropy built from the orientation's Q-vector:
// safety net, goal net, or the sum of both. Coupled bundles always use the
// goal (single) net.
std::vector<double> attack_gradient(const agent::PolicyBundle& bundle, std::span<const double> obs,
                                    Orientation orientation);

std::vector<double> craft(const agent::PolicyBundle& bundle, std::span<const double> obs, const AttackConfig& config);

// max softmax(q/T) - min softmax(q/T).
double preference(std::span<const double> q, double temperature = 1.0);

// Decides k_t for this step and appends it to stats.log (linf_applied 0; the
// caller fills it once the perturbation exists).
bool should_attack(const AttackConfig& config, std::span<const double> q_c, std::span<const double> q_g, Rng& rng,
                   AttackStats& stats);

struct StepRecord {
    std::size_t t = 0;
    env::Ownship ownship;
    std::vector<env::Intruder> intruders;
    std::size_t action = 0;
    double r_c = 0.0;
    double r_g = 0.0;
    bool conflict = false;
    env::Termination termination = env::Termination::None;
};

struct EpisodeRecord {
    std::uint64_t seed = 0;
    env::AirspaceState initial;
    std::vector<StepRecord> steps;
    env::Termination termination = env::Termination::None;
    std::size_t conflict_steps = 0;
    double score = 0.0;

    std::size_t length() const noexcept { return steps.size(); }
};

// Greedy (eta = 0) gated episode on env seed `seed`; attack may be null.
// attack_seed drives the uniform-random timing draws.
EpisodeRecord rollout(const env::EnvConfig& env_config, const agent::PolicyBundle& bundle, std::uint64_t seed,
                      const AttackConfig* attack, std::uint64_t attack_seed, AttackStats* stats,
                      bool keep_steps = true);

struct AttackedRollout {
    EpisodeRecord episode;
    AttackStats stats;
};

AttackedRollout attacked_rollout(const env::EnvConfig& env_config, const agent::PolicyBundle& bundle,
                                 const AttackConfig& attack, std::uint64_t seed);

// Per-step CSV: t,p_c,p_g,attacked,linf_applied
void write_attack_log_csv(std::ostream& os, const AttackStats& stats);

}  // namespace safedqn::adversary
