#pragma once

// Newline-delimited JSON episode traces.
//
// Line 1 is a header: {"kind":"header", world_size, radii, goal, routes,
// initial ownship and intruders, seed}. Every further line is one step:
// {t, ownship{x,y,s,h}, intruders[{x,y,vx,vy}], action, r_c, r_g, conflict,
// termination}.

#include "safedqn/adversary.hpp"
#include "safedqn/airspace_env.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace safedqn::trace {

class TraceError : public std::runtime_error {
public:
    TraceError(std::size_t line, const std::string& what)
        : std::runtime_error("trace line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct TraceHeader {
    double world_size = 1.0;
    double collision_radius = 0.0;
    double conflict_radius = 0.0;
    double goal_radius = 0.0;
    double goal_x = 0.0, goal_y = 0.0;
    std::uint64_t seed = 0;
    std::vector<env::RouteSpec> routes;
    env::Ownship ownship;
    std::vector<env::Intruder> intruders;
};

struct TraceStep {
    std::size_t t = 0;
    double x = 0.0, y = 0.0, speed = 0.0, heading = 0.0;
    std::vector<env::Intruder> intruders;
    std::size_t action = 0;
    double r_c = 0.0;
    double r_g = 0.0;
    bool conflict = false;
    env::Termination termination = env::Termination::None;
};

struct Trace {
    // Absent for an empty file.
    bool has_header = false;
    TraceHeader header;
    std::vector<TraceStep> steps;
};

TraceHeader make_header(const env::EnvConfig& config, const adversary::EpisodeRecord& episode);

// Requires an episode recorded with keep_steps.
void write_jsonl(std::ostream& os, const env::EnvConfig& config, const adversary::EpisodeRecord& episode);

// Throws TraceError with the 1-based line number of the first malformed line.
Trace read_jsonl(std::istream& is);

}  // namespace safedqn::trace
