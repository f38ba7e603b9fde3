#include "safedqn/airspace_env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace safedqn::env {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kStepPenalty = -0.0001;
constexpr double kGoalReward = 1.0;
constexpr double kCollisionPenalty = -1.0;
constexpr double kConflictPenalty = -0.5;
constexpr int kMaxRejections = 10000;

[[noreturn]] void bad(const std::string& field, const std::string& why) {
    throw std::invalid_argument("EnvConfig." + field + ": " + why);
}

double clamp01(double v) noexcept { return std::clamp(v, 0.0, 1.0); }

bool outside(double x, double y, double w) noexcept { return x < 0.0 || x > w || y < 0.0 || y > w; }

// Point on edge e (0 bottom, 1 right, 2 top, 3 left) at fraction t.
std::pair<double, double> edge_point(int e, double t, double w) noexcept {
    switch (e) {
        case 0: return {t * w, 0.0};
        case 1: return {w, t * w};
        case 2: return {t * w, w};
        default: return {0.0, t * w};
    }
}

void set_velocity(Ownship& o) noexcept {
    o.vx = o.speed * std::cos(o.heading);
    o.vy = o.speed * std::sin(o.heading);
}

}  // namespace

double wrap_heading(double h) noexcept {
    h = std::fmod(h, kTwoPi);
    if (h < 0.0) h += kTwoPi;
    if (h >= kTwoPi) h = 0.0;
    return h;
}

std::string_view to_string(Termination t) noexcept {
    switch (t) {
        case Termination::None: return "none";
        case Termination::GoalReached: return "goal";
        case Termination::MaxStep: return "max_step";
        case Termination::Collision: return "collision";
    }
    return "none";
}

std::optional<Termination> termination_from_string(std::string_view s) noexcept {
    for (auto t : {Termination::None, Termination::GoalReached, Termination::MaxStep, Termination::Collision})
        if (to_string(t) == s) return t;
    return std::nullopt;
}

ActionIndex::ActionIndex(std::size_t index) : index_(index) {
    if (index >= kActionCount) throw std::out_of_range("action index " + std::to_string(index) + " outside 0..8");
}

void validate(const EnvConfig& c) {
    if (!(c.world_size > 0.0) || !std::isfinite(c.world_size)) bad("world_size", "must be positive");
    if (!(c.collision_radius > 0.0)) bad("collision_radius", "must be positive");
    if (!(c.collision_radius < c.conflict_radius)) bad("conflict_radius", "must exceed collision_radius");
    if (!(c.conflict_radius < c.world_size)) bad("conflict_radius", "must be below world_size");
    if (!(c.goal_radius > 0.0)) bad("goal_radius", "must be positive");
    if (!(c.ownship_speed_min > 0.0)) bad("ownship_speed_min", "must be positive");
    if (!(c.ownship_speed_min <= c.ownship_speed_max)) bad("ownship_speed_max", "must be >= ownship_speed_min");
    if (!(c.intruder_speed_min > 0.0) || !(c.intruder_speed_min <= c.intruder_speed_max))
        bad("intruder_speed_min", "need 0 < intruder_speed_min <= intruder_speed_max");
    if (!(c.speed_delta >= 0.0)) bad("speed_delta", "must be non-negative");
    if (!(c.heading_delta >= 0.0)) bad("heading_delta", "must be non-negative");
    if (!(c.dt > 0.0)) bad("dt", "must be positive");
    if (c.max_steps == 0) bad("max_steps", "must be positive");
    if (c.k_neighbors == 0) bad("k_neighbors", "must be positive");
    const int floor = c.allow_sparse_routes ? 0 : kMinRoutes;
    if (const auto* f = std::get_if<FixedRoutes>(&c.route_count)) {
        if (f->count < floor || f->count > kMaxRoutes)
            bad("route_count", "fixed count " + std::to_string(f->count) + " outside [3, 25]");
    } else {
        const auto& r = std::get<RandomRoutes>(c.route_count);
        if (r.lo < floor || r.hi > kMaxRoutes || r.lo > r.hi)
            bad("route_count", "random range [" + std::to_string(r.lo) + ", " + std::to_string(r.hi) +
                                   "] outside [3, 25]");
    }
}

double velocity_scale(const EnvConfig& c) noexcept { return std::max(c.ownship_speed_max, c.intruder_speed_max); }

int draw_route_count(const RouteCount& spec, Rng& rng) {
    if (const auto* f = std::get_if<FixedRoutes>(&spec)) return f->count;
    const auto& r = std::get<RandomRoutes>(spec);
    return static_cast<int>(uniform_int(rng, r.lo, r.hi));
}

AirspaceState reset_state(const EnvConfig& config, std::uint64_t seed) {
    validate(config);
    Rng rng(seed);
    const double w = config.world_size;

    AirspaceState s;
    s.seed = seed;
    const int n_routes = draw_route_count(config.route_count, rng);

    const int corner = static_cast<int>(uniform_int(rng, 0, 3));
    const double cx = (corner == 1 || corner == 2) ? w : 0.0;
    const double cy = (corner >= 2) ? w : 0.0;
    s.ownship.x = cx;
    s.ownship.y = cy;
    s.ownship.heading = wrap_heading(std::atan2(0.5 * w - cy, 0.5 * w - cx));
    s.ownship.speed = 0.5 * (config.ownship_speed_min + config.ownship_speed_max);
    set_velocity(s.ownship);

    const double keep_clear = 2.0 * config.conflict_radius;
    s.routes.reserve(static_cast<std::size_t>(n_routes));
    for (int r = 0; r < n_routes; ++r) {
        RouteSpec route;
        for (int attempt = 0;; ++attempt) {
            const int e_in = static_cast<int>(uniform_int(rng, 0, 3));
            const int e_out = (e_in + 1 + static_cast<int>(uniform_int(rng, 0, 2))) % 4;
            const auto [x0, y0] = edge_point(e_in, uniform01(rng), w);
            const auto [x1, y1] = edge_point(e_out, uniform01(rng), w);
            const double len = std::hypot(x1 - x0, y1 - y0);
            const double from_start = std::hypot(x0 - cx, y0 - cy);
            if ((len >= 0.25 * w && from_start >= keep_clear) || attempt >= kMaxRejections) {
                route.entry_x = x0;
                route.entry_y = y0;
                route.heading = wrap_heading(std::atan2(y1 - y0, x1 - x0));
                break;
            }
        }
        route.speed = uniform(rng, config.intruder_speed_min, config.intruder_speed_max);
        s.routes.push_back(route);
    }

    s.intruders.reserve(s.routes.size());
    for (const auto& route : s.routes) {
        s.intruders.push_back({route.entry_x, route.entry_y, route.speed * std::cos(route.heading),
                               route.speed * std::sin(route.heading)});
    }

    const double lo = 0.1 * w, hi = 0.9 * w;
    for (int attempt = 0;; ++attempt) {
        s.goal_x = uniform(rng, lo, hi);
        s.goal_y = uniform(rng, lo, hi);
        const bool clear = std::all_of(s.routes.begin(), s.routes.end(), [&](const RouteSpec& rt) {
            return std::hypot(rt.entry_x - s.goal_x, rt.entry_y - s.goal_y) >= keep_clear;
        });
        if (clear || attempt >= kMaxRejections) break;
    }
    return s;
}

std::vector<std::size_t> nearest_neighbors(const AirspaceState& state, std::size_t k) {
    const auto& in = state.intruders;
    if (in.size() < k)
        throw std::logic_error("nearest_neighbors: " + std::to_string(in.size()) + " intruders, need " +
                               std::to_string(k));
    std::vector<double> d2(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double dx = in[i].x - state.ownship.x;
        const double dy = in[i].y - state.ownship.y;
        d2[i] = dx * dx + dy * dy;
    }
    std::vector<std::size_t> idx(in.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto closer = [&](std::size_t a, std::size_t b) { return d2[a] < d2[b] || (d2[a] == d2[b] && a < b); };
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), closer);
    idx.resize(k);
    return idx;
}

Observation build_observation(const AirspaceState& state, const EnvConfig& config) {
    const std::size_t k = config.k_neighbors;
    const double w = config.world_size;
    const double vs = velocity_scale(config);
    const double span = config.ownship_speed_max - config.ownship_speed_min;
    auto pos = [w](double p) { return clamp01(p / w); };
    auto vel = [vs](double v) { return clamp01((v + vs) / (2.0 * vs)); };

    Observation obs;
    obs.values.assign(observation_size(k), 0.0);
    const auto slots = nearest_neighbors(state, std::min(k, state.intruders.size()));
    double* out = obs.values.data();
    for (std::size_t slot = 0; slot < slots.size(); ++slot) {
        const Intruder& it = state.intruders[slots[slot]];
        out[4 * slot + 0] = pos(it.x);
        out[4 * slot + 1] = pos(it.y);
        out[4 * slot + 2] = vel(it.vx);
        out[4 * slot + 3] = vel(it.vy);
    }
    double* own = out + 4 * k;
    const Ownship& o = state.ownship;
    own[0] = pos(o.x);
    own[1] = pos(o.y);
    own[2] = vel(o.vx);
    own[3] = vel(o.vy);
    own[4] = span > 0.0 ? clamp01((o.speed - config.ownship_speed_min) / span) : 0.0;
    own[5] = clamp01(wrap_heading(o.heading) / kTwoPi);
    own[6] = pos(state.goal_x);
    own[7] = pos(state.goal_y);
    return obs;
}

Separation detect_separation(const AirspaceState& state, const EnvConfig& config) {
    Separation sep;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& it : state.intruders)
        best = std::min(best, std::hypot(it.x - state.ownship.x, it.y - state.ownship.y));
    sep.min_distance = best;
    sep.collision = best < config.collision_radius;
    sep.conflict = best < config.conflict_radius;
    return sep;
}

StepOutcome step_state(AirspaceState& s, const EnvConfig& config, ActionIndex action) {
    if (s.terminal) throw std::logic_error("step called on a terminal state");
    const double w = config.world_size;

    Ownship& o = s.ownship;
    switch (action.speed()) {
        case SpeedAction::Accelerate: o.speed += config.speed_delta; break;
        case SpeedAction::Decelerate: o.speed -= config.speed_delta; break;
        case SpeedAction::Keep: break;
    }
    o.speed = std::clamp(o.speed, config.ownship_speed_min, config.ownship_speed_max);
    switch (action.heading()) {
        case HeadingAction::Left: o.heading += config.heading_delta; break;
        case HeadingAction::Right: o.heading -= config.heading_delta; break;
        case HeadingAction::Keep: break;
    }
    o.heading = wrap_heading(o.heading);
    set_velocity(o);
    o.x += o.vx * config.dt;
    o.y += o.vy * config.dt;
    // The boundary reflects the ownship like a mirror, so it can never park
    // against a wall.
    bool bounced = false;
    if (o.x < 0.0 || o.x > w) {
        o.x = std::clamp(o.x < 0.0 ? -o.x : 2.0 * w - o.x, 0.0, w);
        o.heading = wrap_heading(std::numbers::pi - o.heading);
        bounced = true;
    }
    if (o.y < 0.0 || o.y > w) {
        o.y = std::clamp(o.y < 0.0 ? -o.y : 2.0 * w - o.y, 0.0, w);
        o.heading = wrap_heading(-o.heading);
        bounced = true;
    }
    if (bounced) set_velocity(o);

    for (std::size_t i = 0; i < s.intruders.size(); ++i) {
        Intruder& it = s.intruders[i];
        it.x += it.vx * config.dt;
        it.y += it.vy * config.dt;
        if (outside(it.x, it.y, w)) {
            it.x = s.routes[i].entry_x;
            it.y = s.routes[i].entry_y;
        }
    }
    ++s.step;

    StepOutcome out;
    const Separation sep = detect_separation(s, config);
    out.conflict_this_step = sep.conflict;
    const bool at_goal = std::hypot(o.x - s.goal_x, o.y - s.goal_y) < config.goal_radius;

    if (sep.collision) {
        out.termination = Termination::Collision;
    } else if (at_goal) {
        out.termination = Termination::GoalReached;
    } else if (s.step >= config.max_steps) {
        out.termination = Termination::MaxStep;
    }
    out.r_c = out.termination == Termination::GoalReached ? kGoalReward : kStepPenalty;
    out.r_g = sep.collision ? kCollisionPenalty : (sep.conflict ? kConflictPenalty : 0.0);
    out.done = out.termination != Termination::None;
    s.terminal = out.done;
    out.observation = build_observation(s, config);
    return out;
}

ResetResult reset(const EnvConfig& config, std::uint64_t seed) {
    ResetResult r{reset_state(config, seed), {}};
    r.observation = build_observation(r.state, config);
    return r;
}

AirspaceEnv::AirspaceEnv(EnvConfig config) : config_(std::move(config)) { validate(config_); }

Observation AirspaceEnv::reset(std::uint64_t seed) {
    state_ = reset_state(config_, seed);
    return build_observation(state_, config_);
}

StepOutcome AirspaceEnv::step(ActionIndex action) { return step_state(state_, config_, action); }

}  // namespace safedqn::env
