#pragma once

// Paired evaluation over seeded scenario sets, aggregate metrics and attack sweeps.

#include "safedqn/adversary.hpp"
#include "safedqn/agent.hpp"
#include "safedqn/airspace_env.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace safedqn::eval {

struct ScenarioSet {
    std::size_t case_count = 500;
    env::RouteCount route_spec = env::FixedRoutes{10};
    std::uint64_t base_seed = 0;

    std::uint64_t case_seed(std::size_t index) const noexcept { return base_seed + index; }
    bool operator==(const ScenarioSet&) const = default;
};

enum class ConflictRateMode { PerStep, PerEpisode };

struct EvalOptions {
    ConflictRateMode conflict_rate = ConflictRateMode::PerStep;
};

struct MetricsReport {
    std::string model;
    std::string routes;
    std::size_t case_count = 0;
    double collision_rate = 0.0;
    double conflict_rate = 0.0;
    double max_step_rate = 0.0;
    double goal_rate = 0.0;
    double avg_steps = 0.0;  // goal-reaching episodes only; 0 when none
    double avg_score = 0.0;
    std::optional<adversary::AttackConfig> attack;
    double achieved_attack_rate = 0.0;

    bool operator==(const MetricsReport&) const = default;
};

struct EpisodeSummary {
    std::size_t case_index = 0;
    std::uint64_t seed = 0;
    env::Termination termination = env::Termination::None;
    std::size_t steps = 0;
    std::size_t conflict_steps = 0;
    double score = 0.0;
    std::size_t attacked_steps = 0;
    bool operator==(const EpisodeSummary&) const = default;
};

struct EvalResult {
    MetricsReport report;
    std::vector<EpisodeSummary> episodes;
};

// Environment used for a scenario set: the base config with the set's route
// spec and the bundle's k applied.
env::EnvConfig scenario_env(const env::EnvConfig& base, const ScenarioSet& scenarios, const agent::PolicyBundle& bundle);

std::string routes_label(const env::RouteCount& spec);

MetricsReport aggregate(const std::vector<EpisodeSummary>& episodes, std::size_t max_steps, const EvalOptions& options = {});

// Greedy gated rollouts over every case. Throws std::invalid_argument on an
// empty scenario set or a bundle/observation dimension mismatch.
EvalResult run_eval(const agent::PolicyBundle& bundle, const env::EnvConfig& base_env, const ScenarioSet& scenarios,
                    const adversary::AttackConfig* attack = nullptr, const EvalOptions& options = {},
                    const std::string& model_name = "model");

enum class SweepAxis { Epsilon, Frequency, Beta };

struct SweepGrid {
    SweepAxis axis = SweepAxis::Epsilon;
    std::vector<double> values;
};

// One report per grid value on the same scenario set. `base_attack` fixes the
// orientation, magnitude and (for the epsilon axis) timing; the swept value
// replaces epsilon, sets UniformRandom{f}, or sets StrategicallyTimed{beta}.
std::vector<MetricsReport> sweep(const agent::PolicyBundle& bundle, const env::EnvConfig& base_env,
                                 const ScenarioSet& scenarios, const SweepGrid& grid,
                                 const adversary::AttackConfig& base_attack, const EvalOptions& options = {},
                                 const std::string& model_name = "model");

struct NamedBundle {
    std::string name;
    const agent::PolicyBundle* bundle = nullptr;
};

std::vector<MetricsReport> compare_models(const std::vector<NamedBundle>& bundles, const env::EnvConfig& base_env,
                                          const ScenarioSet& scenarios, const adversary::AttackConfig* attack = nullptr,
                                          const EvalOptions& options = {});

// model,routes,cases,collision_rate,conflict_rate,max_step_rate,avg_steps,avg_score,
// attack_orientation,epsilon,timing,beta,achieved_attack_rate
void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const MetricsReport& r);
void write_metrics_csv(std::ostream& os, const std::vector<MetricsReport>& rows);

// Fixed-width table for terminals.
void write_metrics_table(std::ostream& os, const std::vector<MetricsReport>& rows);

}  // namespace safedqn::eval
