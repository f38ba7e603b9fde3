#include "safedqn/trace.hpp"

#include <json.hpp>

#include <istream>
#include <ostream>

namespace safedqn::trace {

using nlohmann::json;

namespace {

json intruder_json(const env::Intruder& it) { return {{"x", it.x}, {"y", it.y}, {"vx", it.vx}, {"vy", it.vy}}; }

env::Intruder intruder_from(const json& j) {
    return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("vx").get<double>(), j.at("vy").get<double>()};
}

json intruders_json(const std::vector<env::Intruder>& v) {
    json a = json::array();
    for (const auto& it : v) a.push_back(intruder_json(it));
    return a;
}

std::vector<env::Intruder> intruders_from(const json& j) {
    std::vector<env::Intruder> out;
    for (const auto& e : j) out.push_back(intruder_from(e));
    return out;
}

json header_json(const TraceHeader& h) {
    json routes = json::array();
    for (const auto& r : h.routes)
        routes.push_back({{"entry_x", r.entry_x}, {"entry_y", r.entry_y}, {"heading", r.heading}, {"speed", r.speed}});
    const auto& o = h.ownship;
    return {{"kind", "header"},
            {"world_size", h.world_size},
            {"collision_radius", h.collision_radius},
            {"conflict_radius", h.conflict_radius},
            {"goal_radius", h.goal_radius},
            {"goal", {{"x", h.goal_x}, {"y", h.goal_y}}},
            {"seed", h.seed},
            {"routes", routes},
            {"ownship", {{"x", o.x}, {"y", o.y}, {"s", o.speed}, {"h", o.heading}}},
            {"intruders", intruders_json(h.intruders)}};
}

TraceHeader header_from(const json& j) {
    TraceHeader h;
    h.world_size = j.at("world_size").get<double>();
    h.collision_radius = j.at("collision_radius").get<double>();
    h.conflict_radius = j.at("conflict_radius").get<double>();
    h.goal_radius = j.at("goal_radius").get<double>();
    h.goal_x = j.at("goal").at("x").get<double>();
    h.goal_y = j.at("goal").at("y").get<double>();
    h.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& r : j.at("routes"))
        h.routes.push_back({r.at("entry_x").get<double>(), r.at("entry_y").get<double>(),
                            r.at("heading").get<double>(), r.at("speed").get<double>()});
    const auto& o = j.at("ownship");
    h.ownship.x = o.at("x").get<double>();
    h.ownship.y = o.at("y").get<double>();
    h.ownship.speed = o.at("s").get<double>();
    h.ownship.heading = o.at("h").get<double>();
    h.intruders = intruders_from(j.at("intruders"));
    if (!(h.world_size > 0.0)) throw std::invalid_argument("world_size must be positive");
    return h;
}

json step_json(const adversary::StepRecord& s) {
    return {{"t", s.t},
            {"ownship", {{"x", s.ownship.x}, {"y", s.ownship.y}, {"s", s.ownship.speed}, {"h", s.ownship.heading}}},
            {"intruders", intruders_json(s.intruders)},
            {"action", s.action},
            {"r_c", s.r_c},
            {"r_g", s.r_g},
            {"conflict", s.conflict},
            {"termination", std::string(env::to_string(s.termination))}};
}

TraceStep step_from(const json& j) {
    TraceStep s;
    s.t = j.at("t").get<std::size_t>();
    const auto& o = j.at("ownship");
    s.x = o.at("x").get<double>();
    s.y = o.at("y").get<double>();
    s.speed = o.at("s").get<double>();
    s.heading = o.at("h").get<double>();
    s.intruders = intruders_from(j.at("intruders"));
    s.action = j.at("action").get<std::size_t>();
    if (s.action >= env::kActionCount) throw std::invalid_argument("action out of range");
    s.r_c = j.at("r_c").get<double>();
    s.r_g = j.at("r_g").get<double>();
    s.conflict = j.at("conflict").get<bool>();
    const auto term = env::termination_from_string(j.at("termination").get<std::string>());
    if (!term) throw std::invalid_argument("unknown termination '" + j.at("termination").get<std::string>() + "'");
    s.termination = *term;
    return s;
}

}  // namespace

TraceHeader make_header(const env::EnvConfig& config, const adversary::EpisodeRecord& episode) {
    TraceHeader h;
    h.world_size = config.world_size;
    h.collision_radius = config.collision_radius;
    h.conflict_radius = config.conflict_radius;
    h.goal_radius = config.goal_radius;
    h.goal_x = episode.initial.goal_x;
    h.goal_y = episode.initial.goal_y;
    h.seed = episode.seed;
    h.routes = episode.initial.routes;
    h.ownship = episode.initial.ownship;
    h.intruders = episode.initial.intruders;
    return h;
}

void write_jsonl(std::ostream& os, const env::EnvConfig& config, const adversary::EpisodeRecord& episode) {
    os << header_json(make_header(config, episode)).dump() << '\n';
    for (const auto& s : episode.steps) os << step_json(s).dump() << '\n';
}

Trace read_jsonl(std::istream& is) {
    Trace tr;
    std::string line;
    std::size_t number = 0;
    while (std::getline(is, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            if (!j.is_object()) throw std::invalid_argument("expected a JSON object");
            if (j.value("kind", "") == "header") {
                if (tr.has_header || !tr.steps.empty()) throw std::invalid_argument("header must be the first record");
                tr.header = header_from(j);
                tr.has_header = true;
            } else {
                if (!tr.has_header) throw std::invalid_argument("step record before the header");
                tr.steps.push_back(step_from(j));
            }
        } catch (const TraceError&) {
            throw;
        } catch (const std::exception& e) {
            throw TraceError(number, e.what());
        }
    }
    return tr;
}

}  // namespace safedqn::trace
