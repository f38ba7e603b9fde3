#pragma once

// Run configuration: the INI file read by the command-line tool, plus the
// string codecs shared with the checkpoint config echo.
//
//   [env]    world_size, route_count, max_steps, dt, collision_radius, ...
//   [agent]  gamma, batch_size, episodes, mode, k, hidden, ...
//   [attack] orientation, epsilon, timing, frequency, beta, budget, ...
//   [eval]   cases, routes, base_seed, conflict_rate
//   [io]     output_dir, checkpoint_path, log_level
//
// Unknown sections or keys are errors. Omitted keys keep the defaults of the
// owning module. write_run_config emits every key.

#include "safedqn/adversary.hpp"
#include "safedqn/agent.hpp"
#include "safedqn/airspace_env.hpp"
#include "safedqn/eval_harness.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace safedqn::config {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class LogLevel { Error, Warn, Info, Debug };

struct EvalParams {
    std::size_t cases = 500;
    env::RouteCount routes = env::FixedRoutes{10};
    std::uint64_t base_seed = 0;
    eval::ConflictRateMode conflict_rate = eval::ConflictRateMode::PerStep;

    eval::ScenarioSet scenarios() const { return {cases, routes, base_seed}; }
    bool operator==(const EvalParams&) const = default;
};

struct IoConfig {
    std::string output_dir = "out";
    std::string checkpoint_path = "checkpoint.json";
    LogLevel log_level = LogLevel::Info;
    bool operator==(const IoConfig&) const = default;
};

struct RunConfig {
    env::EnvConfig env;
    agent::AgentConfig agent;
    std::optional<adversary::AttackConfig> attack;
    EvalParams eval;
    IoConfig io;
    bool operator==(const RunConfig&) const = default;
};

using Fields = std::vector<std::pair<std::string, std::string>>;

// Key/value views of each section, in documentation order.
Fields env_fields(const env::EnvConfig& c);
Fields agent_fields(const agent::AgentConfig& c);
Fields attack_fields(const adversary::AttackConfig& c);
Fields eval_fields(const EvalParams& c);
Fields io_fields(const IoConfig& c);

// Set one field from its string form; ConfigError names section.key on an
// unknown key or a malformed value.
void apply_env_field(env::EnvConfig& c, std::string_view key, std::string_view value);
void apply_agent_field(agent::AgentConfig& c, std::string_view key, std::string_view value);
void apply_attack_field(adversary::AttackConfig& c, std::string_view key, std::string_view value);
void apply_eval_field(EvalParams& c, std::string_view key, std::string_view value);
void apply_io_field(IoConfig& c, std::string_view key, std::string_view value);

RunConfig parse_run_config(std::istream& is);
RunConfig load_run_config(const std::filesystem::path& path);
void write_run_config(std::ostream& os, const RunConfig& c);

// Range-checks every section (module validators plus cross-field checks).
void validate(const RunConfig& c);

// "10" or "3-25".
std::string format_route_count(const env::RouteCount& r);
env::RouteCount parse_route_count(std::string_view s);

std::string format_double(double v);
double parse_double(std::string_view s);
std::uint64_t parse_uint(std::string_view s);
bool parse_bool(std::string_view s);
// Comma-separated list of reals; empty input gives an empty list.
std::vector<double> parse_double_list(std::string_view s);

std::string_view to_string(LogLevel l) noexcept;
std::optional<LogLevel> log_level_from_string(std::string_view s) noexcept;
std::optional<agent::Mode> mode_from_string(std::string_view s) noexcept;
std::optional<agent::TargetMode> target_mode_from_string(std::string_view s) noexcept;
std::optional<agent::LrDecayCadence> cadence_from_string(std::string_view s) noexcept;

}  // namespace safedqn::config
