#include "safedqn/run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

namespace safedqn::config {

namespace {

[[noreturn]] void fail(std::string_view section, std::string_view key, const std::string& what) {
    throw ConfigError(std::string(section) + "." + std::string(key) + ": " + what);
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

template <class F>
auto field(std::string_view section, std::string_view key, F&& parse) -> decltype(parse()) {
    try {
        return parse();
    } catch (const ConfigError& e) {
        fail(section, key, e.what());
    }
}

std::string format_uint(std::uint64_t v) { return std::to_string(v); }
std::string format_bool(bool v) { return v ? "true" : "false"; }

std::string format_hidden(const std::vector<std::size_t>& h) {
    std::string out;
    for (std::size_t i = 0; i < h.size(); ++i) out += (i ? "," : "") + std::to_string(h[i]);
    return out;
}

std::vector<std::size_t> parse_hidden(std::string_view s) {
    std::vector<std::size_t> out;
    for (double v : parse_double_list(s)) {
        if (v < 1.0 || v != static_cast<double>(static_cast<std::size_t>(v)))
            throw ConfigError("expected positive integer widths, got '" + std::string(s) + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) throw ConfigError("expected at least one hidden width");
    return out;
}

template <class E>
E parse_enum(std::string_view s, std::optional<E> (*from)(std::string_view) noexcept, std::string_view options) {
    if (auto v = from(trim(s))) return *v;
    throw ConfigError("expected one of " + std::string(options) + ", got '" + std::string(s) + "'");
}

std::optional<adversary::Orientation> orientation_of(std::string_view s) noexcept {
    return adversary::orientation_from_string(s);
}

std::optional<eval::ConflictRateMode> conflict_mode_of(std::string_view s) noexcept {
    if (s == "per_step") return eval::ConflictRateMode::PerStep;
    if (s == "per_episode") return eval::ConflictRateMode::PerEpisode;
    return std::nullopt;
}

std::string_view conflict_mode_name(eval::ConflictRateMode m) noexcept {
    return m == eval::ConflictRateMode::PerStep ? "per_step" : "per_episode";
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_double(std::string_view raw) {
    const std::string s = trim(raw);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw ConfigError("expected a real number, got '" + std::string(raw) + "'");
    return v;
}

std::uint64_t parse_uint(std::string_view raw) {
    const std::string s = trim(raw);
    std::uint64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw ConfigError("expected a non-negative integer, got '" + std::string(raw) + "'");
    return v;
}

bool parse_bool(std::string_view raw) {
    const std::string s = trim(raw);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("expected true/false, got '" + std::string(raw) + "'");
}

std::vector<double> parse_double_list(std::string_view raw) {
    std::vector<double> out;
    const std::string s = trim(raw);
    if (s.empty()) return out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = s.find(',', start);
        out.push_back(parse_double(std::string_view(s).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string format_route_count(const env::RouteCount& r) {
    if (const auto* f = std::get_if<env::FixedRoutes>(&r)) return std::to_string(f->count);
    const auto& rr = std::get<env::RandomRoutes>(r);
    return std::to_string(rr.lo) + "-" + std::to_string(rr.hi);
}

env::RouteCount parse_route_count(std::string_view raw) {
    const std::string s = trim(raw);
    const auto dash = s.find('-');
    if (dash == std::string::npos) return env::FixedRoutes{static_cast<int>(parse_uint(s))};
    const auto lo = parse_uint(std::string_view(s).substr(0, dash));
    const auto hi = parse_uint(std::string_view(s).substr(dash + 1));
    if (lo > hi) throw ConfigError("route range '" + s + "' has lo > hi");
    return env::RandomRoutes{static_cast<int>(lo), static_cast<int>(hi)};
}

std::string_view to_string(LogLevel l) noexcept {
    switch (l) {
        case LogLevel::Error: return "error";
        case LogLevel::Warn: return "warn";
        case LogLevel::Info: return "info";
        case LogLevel::Debug: return "debug";
    }
    return "info";
}

std::optional<LogLevel> log_level_from_string(std::string_view s) noexcept {
    for (auto l : {LogLevel::Error, LogLevel::Warn, LogLevel::Info, LogLevel::Debug})
        if (to_string(l) == s) return l;
    return std::nullopt;
}

std::optional<agent::Mode> mode_from_string(std::string_view s) noexcept {
    for (auto m : {agent::Mode::SafeDQN, agent::Mode::CoupledDQN})
        if (agent::to_string(m) == s) return m;
    return std::nullopt;
}

std::optional<agent::TargetMode> target_mode_from_string(std::string_view s) noexcept {
    for (auto m : {agent::TargetMode::Joint, agent::TargetMode::PerHead})
        if (agent::to_string(m) == s) return m;
    return std::nullopt;
}

std::optional<agent::LrDecayCadence> cadence_from_string(std::string_view s) noexcept {
    for (auto m : {agent::LrDecayCadence::PerUpdate, agent::LrDecayCadence::PerEpisode})
        if (agent::to_string(m) == s) return m;
    return std::nullopt;
}

Fields env_fields(const env::EnvConfig& c) {
    return {
        {"world_size", format_double(c.world_size)},
        {"route_count", format_route_count(c.route_count)},
        {"max_steps", format_uint(c.max_steps)},
        {"dt", format_double(c.dt)},
        {"collision_radius", format_double(c.collision_radius)},
        {"conflict_radius", format_double(c.conflict_radius)},
        {"goal_radius", format_double(c.goal_radius)},
        {"ownship_speed_min", format_double(c.ownship_speed_min)},
        {"ownship_speed_max", format_double(c.ownship_speed_max)},
        {"speed_delta", format_double(c.speed_delta)},
        {"heading_delta", format_double(c.heading_delta)},
        {"intruder_speed_min", format_double(c.intruder_speed_min)},
        {"intruder_speed_max", format_double(c.intruder_speed_max)},
        {"seed", format_uint(c.seed)},
        {"allow_sparse_routes", format_bool(c.allow_sparse_routes)},
    };
}

void apply_env_field(env::EnvConfig& c, std::string_view key, std::string_view v) {
    field("env", key, [&] {
        if (key == "world_size") c.world_size = parse_double(v);
        else if (key == "route_count") c.route_count = parse_route_count(v);
        else if (key == "max_steps") c.max_steps = parse_uint(v);
        else if (key == "dt") c.dt = parse_double(v);
        else if (key == "collision_radius") c.collision_radius = parse_double(v);
        else if (key == "conflict_radius") c.conflict_radius = parse_double(v);
        else if (key == "goal_radius") c.goal_radius = parse_double(v);
        else if (key == "ownship_speed_min") c.ownship_speed_min = parse_double(v);
        else if (key == "ownship_speed_max") c.ownship_speed_max = parse_double(v);
        else if (key == "speed_delta") c.speed_delta = parse_double(v);
        else if (key == "heading_delta") c.heading_delta = parse_double(v);
        else if (key == "intruder_speed_min") c.intruder_speed_min = parse_double(v);
        else if (key == "intruder_speed_max") c.intruder_speed_max = parse_double(v);
        else if (key == "seed") c.seed = parse_uint(v);
        else if (key == "allow_sparse_routes") c.allow_sparse_routes = parse_bool(v);
        else throw ConfigError("unknown key");
    });
}

Fields agent_fields(const agent::AgentConfig& c) {
    return {
        {"mode", std::string(agent::to_string(c.mode))},
        {"episodes", format_uint(c.episodes)},
        {"gamma", format_double(c.gamma)},
        {"batch_size", format_uint(c.batch_size)},
        {"buffer_capacity", format_uint(c.buffer_capacity)},
        {"target_sync_tau", format_uint(c.target_sync_tau)},
        {"eta_start", format_double(c.eta_start)},
        {"eta_end", format_double(c.eta_end)},
        {"eta_decay", format_double(c.eta_decay)},
        {"k", format_uint(c.k)},
        {"route_training", format_route_count(c.route_training)},
        {"target_mode", std::string(agent::to_string(c.target_mode))},
        {"warmup", format_uint(c.warmup)},
        {"train_every", format_uint(c.train_every)},
        {"learning_rate", format_double(c.learning_rate)},
        {"lr_decay", format_double(c.lr_decay)},
        {"lr_decay_cadence", std::string(agent::to_string(c.lr_decay_cadence))},
        {"hidden", format_hidden(c.hidden)},
        {"residual_projection", format_bool(c.residual_projection)},
        {"gate_in_training", format_bool(c.gate_in_training)},
    };
}

void apply_agent_field(agent::AgentConfig& c, std::string_view key, std::string_view v) {
    field("agent", key, [&] {
        if (key == "mode") c.mode = parse_enum(v, &mode_from_string, "safe|coupled");
        else if (key == "episodes") c.episodes = parse_uint(v);
        else if (key == "gamma") c.gamma = parse_double(v);
        else if (key == "batch_size") c.batch_size = parse_uint(v);
        else if (key == "buffer_capacity") c.buffer_capacity = parse_uint(v);
        else if (key == "target_sync_tau") c.target_sync_tau = parse_uint(v);
        else if (key == "eta_start") c.eta_start = parse_double(v);
        else if (key == "eta_end") c.eta_end = parse_double(v);
        else if (key == "eta_decay") c.eta_decay = parse_double(v);
        else if (key == "k") c.k = parse_uint(v);
        else if (key == "route_training") c.route_training = parse_route_count(v);
        else if (key == "target_mode") c.target_mode = parse_enum(v, &target_mode_from_string, "joint|per_head");
        else if (key == "warmup") c.warmup = parse_uint(v);
        else if (key == "train_every") c.train_every = parse_uint(v);
        else if (key == "learning_rate") c.learning_rate = parse_double(v);
        else if (key == "lr_decay") c.lr_decay = parse_double(v);
        else if (key == "lr_decay_cadence")
            c.lr_decay_cadence = parse_enum(v, &cadence_from_string, "per_update|per_episode");
        else if (key == "hidden") c.hidden = parse_hidden(v);
        else if (key == "residual_projection") c.residual_projection = parse_bool(v);
        else if (key == "gate_in_training") c.gate_in_training = parse_bool(v);
        else throw ConfigError("unknown key");
    });
}

Fields attack_fields(const adversary::AttackConfig& c) {
    Fields f{
        {"orientation", std::string(adversary::to_string(c.orientation))},
        {"epsilon", format_double(c.epsilon)},
        {"timing", std::string(adversary::timing_name(c.timing))},
    };
    if (const auto* u = std::get_if<adversary::UniformRandom>(&c.timing))
        f.emplace_back("frequency", format_double(u->frequency));
    if (const auto* s = std::get_if<adversary::StrategicallyTimed>(&c.timing))
        f.emplace_back("beta", format_double(s->beta));
    f.emplace_back("budget", c.budget ? format_uint(*c.budget) : std::string("none"));
    f.emplace_back("temperature", format_double(c.temperature));
    f.emplace_back("clamp", format_bool(c.clamp));
    return f;
}

void apply_attack_field(adversary::AttackConfig& c, std::string_view key, std::string_view v) {
    field("attack", key, [&] {
        if (key == "orientation") {
            c.orientation = parse_enum(v, &orientation_of, "safety|goal|overall");
        } else if (key == "epsilon") {
            c.epsilon = parse_double(v);
        } else if (key == "timing") {
            const std::string t = trim(v);
            if (t == "every") {
                c.timing = adversary::EveryStep{};
            } else if (t == "uniform") {
                if (!std::holds_alternative<adversary::UniformRandom>(c.timing)) c.timing = adversary::UniformRandom{};
            } else if (t == "st") {
                if (!std::holds_alternative<adversary::StrategicallyTimed>(c.timing))
                    c.timing = adversary::StrategicallyTimed{};
            } else {
                throw ConfigError("expected one of every|uniform|st, got '" + std::string(v) + "'");
            }
        } else if (key == "frequency") {
            auto* u = std::get_if<adversary::UniformRandom>(&c.timing);
            if (!u) throw ConfigError("only valid with timing = uniform (set timing first)");
            u->frequency = parse_double(v);
        } else if (key == "beta") {
            auto* s = std::get_if<adversary::StrategicallyTimed>(&c.timing);
            if (!s) throw ConfigError("only valid with timing = st (set timing first)");
            s->beta = parse_double(v);
        } else if (key == "budget") {
            if (trim(v) == "none") c.budget.reset();
            else c.budget = parse_uint(v);
        } else if (key == "temperature") {
            c.temperature = parse_double(v);
        } else if (key == "clamp") {
            c.clamp = parse_bool(v);
        } else {
            throw ConfigError("unknown key");
        }
    });
}

Fields eval_fields(const EvalParams& c) {
    return {
        {"cases", format_uint(c.cases)},
        {"routes", format_route_count(c.routes)},
        {"base_seed", format_uint(c.base_seed)},
        {"conflict_rate", std::string(conflict_mode_name(c.conflict_rate))},
    };
}

void apply_eval_field(EvalParams& c, std::string_view key, std::string_view v) {
    field("eval", key, [&] {
        if (key == "cases") c.cases = parse_uint(v);
        else if (key == "routes") c.routes = parse_route_count(v);
        else if (key == "base_seed") c.base_seed = parse_uint(v);
        else if (key == "conflict_rate") c.conflict_rate = parse_enum(v, &conflict_mode_of, "per_step|per_episode");
        else throw ConfigError("unknown key");
    });
}

Fields io_fields(const IoConfig& c) {
    return {
        {"output_dir", c.output_dir},
        {"checkpoint_path", c.checkpoint_path},
        {"log_level", std::string(to_string(c.log_level))},
    };
}

void apply_io_field(IoConfig& c, std::string_view key, std::string_view v) {
    field("io", key, [&] {
        if (key == "output_dir") c.output_dir = trim(v);
        else if (key == "checkpoint_path") c.checkpoint_path = trim(v);
        else if (key == "log_level") c.log_level = parse_enum(v, &log_level_from_string, "error|warn|info|debug");
        else throw ConfigError("unknown key");
    });
}

RunConfig parse_run_config(std::istream& is) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config: " + std::string(e.what()));
    }
    RunConfig c;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("config: key '" + section + "' outside any section");
        if (section == "attack") c.attack.emplace();
        // Apply timing before its parameters so key order inside [attack] is free.
        if (section == "attack") {
            if (auto t = body.get_optional<std::string>("timing")) apply_attack_field(*c.attack, "timing", *t);
        }
        for (const auto& [key, node] : body) {
            const std::string value = node.data();
            if (section == "env") apply_env_field(c.env, key, value);
            else if (section == "agent") apply_agent_field(c.agent, key, value);
            else if (section == "attack") apply_attack_field(*c.attack, key, value);
            else if (section == "eval") apply_eval_field(c.eval, key, value);
            else if (section == "io") apply_io_field(c.io, key, value);
            else throw ConfigError("config: unknown section [" + section + "]");
        }
    }
    c.env.k_neighbors = c.agent.k;
    validate(c);
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
    return parse_run_config(in);
}

void validate(const RunConfig& c) {
    try {
        env::validate(c.env);
        agent::validate(c.agent);
        if (c.attack) adversary::validate(*c.attack);
        env::EnvConfig eval_env = c.env;
        eval_env.route_count = c.eval.routes;
        env::validate(eval_env);
        env::EnvConfig train_env = c.env;
        train_env.route_count = c.agent.route_training;
        env::validate(train_env);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (c.eval.cases == 0) throw ConfigError("eval.cases: empty scenario set (cases = 0)");
}

void write_run_config(std::ostream& os, const RunConfig& c) {
    std::ostringstream out;
    auto section = [&out](std::string_view name, const Fields& fields) {
        out << '[' << name << "]\n";
        for (const auto& [k, v] : fields) out << k << " = " << v << '\n';
        out << '\n';
    };
    section("env", env_fields(c.env));
    section("agent", agent_fields(c.agent));
    if (c.attack) section("attack", attack_fields(*c.attack));
    section("eval", eval_fields(c.eval));
    section("io", io_fields(c.io));
    os << out.str();
}

}  // namespace safedqn::config
