#pragma once

// 2D free-flight airspace: one controlled ownship crossing traffic on
// straight routes toward a goal point.
//
// Conventions: the world is the square [0, world_size]^2, headings are
// radians counter-clockwise from +x and kept in [0, 2*pi), "left" turns
// increase the heading. The ownship reflects off the boundary. Only
// ownship-intruder separation is evaluated.

#include "safedqn/rng.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace safedqn::env {

inline constexpr std::size_t kActionCount = 9;
inline constexpr int kMaxRoutes = 25;
inline constexpr int kMinRoutes = 3;

struct FixedRoutes {
    int count = 5;
    bool operator==(const FixedRoutes&) const = default;
};

struct RandomRoutes {
    int lo = kMinRoutes;
    int hi = kMaxRoutes;
    bool operator==(const RandomRoutes&) const = default;
};

using RouteCount = std::variant<FixedRoutes, RandomRoutes>;

struct EnvConfig {
    double world_size = 1.0;
    RouteCount route_count = RandomRoutes{};
    std::size_t k_neighbors = 3;
    std::size_t max_steps = 1000;
    double dt = 1.0;
    double collision_radius = 0.01;
    double conflict_radius = 0.04;
    double goal_radius = 0.05;
    double ownship_speed_min = 0.004;
    double ownship_speed_max = 0.016;
    double speed_delta = 0.001;
    double heading_delta = std::numbers::pi / 12.0;
    double intruder_speed_min = 0.002;
    double intruder_speed_max = 0.006;
    std::uint64_t seed = 0;
    // Test hook: permits route counts below the 3..25 band (including zero).
    bool allow_sparse_routes = false;

    bool operator==(const EnvConfig&) const = default;
};

// Throws std::invalid_argument naming the first offending field.
void validate(const EnvConfig& config);

// Number of observation components for k neighbours.
constexpr std::size_t observation_size(std::size_t k) noexcept { return 4 * k + 8; }

// Upper bound of the velocity encoding range [-v_hi, v_hi].
double velocity_scale(const EnvConfig& config) noexcept;

struct RouteSpec {
    double entry_x = 0.0;
    double entry_y = 0.0;
    double heading = 0.0;
    double speed = 0.0;
};

struct Ownship {
    double x = 0.0, y = 0.0;
    double vx = 0.0, vy = 0.0;
    double speed = 0.0;
    double heading = 0.0;
};

struct Intruder {
    double x = 0.0, y = 0.0;
    double vx = 0.0, vy = 0.0;
};

struct AirspaceState {
    Ownship ownship;
    std::vector<Intruder> intruders;
    std::vector<RouteSpec> routes;
    double goal_x = 0.0;
    double goal_y = 0.0;
    std::size_t step = 0;
    bool terminal = false;
    std::uint64_t seed = 0;
};

struct Observation {
    std::vector<double> values;
    std::size_t size() const noexcept { return values.size(); }
    bool operator==(const Observation&) const = default;
};

enum class Termination { None, GoalReached, MaxStep, Collision };

std::string_view to_string(Termination t) noexcept;
std::optional<Termination> termination_from_string(std::string_view s) noexcept;

struct StepOutcome {
    Observation observation;
    double r_c = 0.0;
    double r_g = 0.0;
    bool done = false;
    Termination termination = Termination::None;
    bool conflict_this_step = false;
};

enum class SpeedAction { Accelerate = 0, Keep = 1, Decelerate = 2 };
enum class HeadingAction { Left = 0, Keep = 1, Right = 2 };

class ActionIndex {
public:
    constexpr ActionIndex() = default;
    // Throws std::out_of_range for indices outside 0..8.
    explicit ActionIndex(std::size_t index);
    constexpr ActionIndex(SpeedAction s, HeadingAction h) noexcept
        : index_(static_cast<std::size_t>(s) * 3 + static_cast<std::size_t>(h)) {}

    constexpr std::size_t index() const noexcept { return index_; }
    constexpr SpeedAction speed() const noexcept { return static_cast<SpeedAction>(index_ / 3); }
    constexpr HeadingAction heading() const noexcept { return static_cast<HeadingAction>(index_ % 3); }
    constexpr bool operator==(const ActionIndex&) const = default;

private:
    std::size_t index_ = 4;  // (keep, keep)
};

struct Separation {
    bool collision = false;
    bool conflict = false;
    double min_distance = 0.0;  // +inf with no intruders
};

// Number of routes an episode with this config and rng draws.
int draw_route_count(const RouteCount& spec, Rng& rng);

// New episode. Identical (config, seed) pairs give bit-identical states.
AirspaceState reset_state(const EnvConfig& config, std::uint64_t seed);

// Indices of the k intruders closest to the ownship, nearest first; ties go
// to the lower index. Throws std::logic_error when fewer than k intruders exist.
std::vector<std::size_t> nearest_neighbors(const AirspaceState& state, std::size_t k);

// Normalised 4k+8 observation. Slots past the available intruder count are
// zero-filled.
Observation build_observation(const AirspaceState& state, const EnvConfig& config);

Separation detect_separation(const AirspaceState& state, const EnvConfig& config);

// Advances state in place. Throws std::logic_error on a terminal state.
StepOutcome step_state(AirspaceState& state, const EnvConfig& config, ActionIndex action);

// Stateful wrapper pairing a config with the current episode.
class AirspaceEnv {
public:
    explicit AirspaceEnv(EnvConfig config);

    Observation reset(std::uint64_t seed);
    StepOutcome step(ActionIndex action);

    const AirspaceState& state() const noexcept { return state_; }
    AirspaceState& mutable_state() noexcept { return state_; }
    const EnvConfig& config() const noexcept { return config_; }

private:
    EnvConfig config_;
    AirspaceState state_;
};

// (state, observation) pair for the given seed.
struct ResetResult {
    AirspaceState state;
    Observation observation;
};
ResetResult reset(const EnvConfig& config, std::uint64_t seed);

double wrap_heading(double h) noexcept;

}  // namespace safedqn::env
