#include "safedqn/inspect.hpp"

#include "safedqn/dueling_net.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace safedqn::inspect {

namespace {

std::string num(double v, const char* fmt = "%.2f") {
    char buf[32];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

// White to dark red.
std::string heat(double p) {
    const int shade = static_cast<int>(std::lround(255.0 * (1.0 - std::clamp(p, 0.0, 1.0))));
    char buf[16];
    std::snprintf(buf, sizeof buf, "#ff%02x%02x", shade, shade);
    return buf;
}

}  // namespace

Grid probability_grid(std::span<const double> q, double temperature) {
    if (q.size() != env::kActionCount) throw std::invalid_argument("probability_grid: expected 9 Q-values");
    const auto p = nn::softmax(q, temperature);
    Grid g{};
    for (std::size_t i = 0; i < env::kActionCount; ++i) g[i / 3][i % 3] = p[i];
    return g;
}

StateReport inspect_observation(const agent::PolicyBundle& bundle, std::span<const double> obs, std::size_t t) {
    const auto q = agent::evaluate_q(bundle, obs);
    std::vector<double> sum(q.q_c);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += q.q_g[i];
    StateReport r;
    r.t = t;
    r.safety_value = agent::state_safety_value(bundle, obs);
    r.overall = probability_grid(sum);
    r.goal = probability_grid(q.q_c);
    r.safety = probability_grid(q.q_g);
    return r;
}

env::AirspaceState state_at(const trace::Trace& tr, std::size_t index) {
    if (!tr.has_header) throw std::invalid_argument("state_at: trace has no header");
    if (index > tr.steps.size()) throw std::out_of_range("state_at: index past the last step");
    env::AirspaceState s;
    s.routes = tr.header.routes;
    s.goal_x = tr.header.goal_x;
    s.goal_y = tr.header.goal_y;
    s.seed = tr.header.seed;
    if (index == 0) {
        s.ownship = tr.header.ownship;
        s.intruders = tr.header.intruders;
    } else {
        const auto& st = tr.steps[index - 1];
        s.ownship.x = st.x;
        s.ownship.y = st.y;
        s.ownship.speed = st.speed;
        s.ownship.heading = st.heading;
        s.intruders = st.intruders;
        s.step = st.t;
    }
    s.ownship.vx = s.ownship.speed * std::cos(s.ownship.heading);
    s.ownship.vy = s.ownship.speed * std::sin(s.ownship.heading);
    return s;
}

std::vector<StateReport> inspect_trace(const agent::PolicyBundle& bundle, const env::EnvConfig& env_config,
                                       const trace::Trace& tr) {
    std::vector<StateReport> out;
    if (!tr.has_header) return out;
    env::EnvConfig e = env_config;
    e.k_neighbors = bundle.config.k;
    e.world_size = tr.header.world_size;
    for (std::size_t i = 0; i <= tr.steps.size(); ++i) {
        const auto obs = env::build_observation(state_at(tr, i), e);
        out.push_back(inspect_observation(bundle, obs.values, i));
    }
    return out;
}

void write_csv(std::ostream& os, const std::vector<StateReport>& reports) {
    std::ostringstream out;
    out << "t,safety_value,map,acc_left,acc_keep,acc_right,keep_left,keep_keep,keep_right,dec_left,dec_keep,dec_right\n";
    out.precision(10);
    for (const auto& r : reports) {
        const std::pair<const char*, const Grid*> maps[] = {{"overall", &r.overall}, {"goal", &r.goal}, {"safety", &r.safety}};
        for (const auto& [name, g] : maps) {
            out << r.t << ',' << r.safety_value << ',' << name;
            for (const auto& row : *g)
                for (double p : row) out << ',' << p;
            out << '\n';
        }
    }
    os << out.str();
}

std::string render_svg(const StateReport& r) {
    constexpr double cell = 60.0, gap = 40.0, top = 50.0;
    const double width = 3 * (3 * cell) + 4 * gap;
    const double height = top + 3 * cell + 30.0;
    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) + "\">\n";
    s += "<text x=\"" + num(gap) + "\" y=\"20.00\" font-family=\"sans-serif\" font-size=\"14\">t = " +
         std::to_string(r.t) + ", safety value = " + num(r.safety_value, "%.4f") + "</text>\n";
    const std::pair<const char*, const Grid*> maps[] = {{"Overall", &r.overall}, {"Goal", &r.goal}, {"Safety", &r.safety}};
    for (std::size_t m = 0; m < 3; ++m) {
        const double x0 = gap + static_cast<double>(m) * (3 * cell + gap);
        s += "<text x=\"" + num(x0) + "\" y=\"" + num(top - 8.0) +
             "\" font-family=\"sans-serif\" font-size=\"12\">" + maps[m].first + "</text>\n";
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) {
                const double p = (*maps[m].second)[i][j];
                const double x = x0 + static_cast<double>(j) * cell, y = top + static_cast<double>(i) * cell;
                s += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(cell) + "\" height=\"" +
                     num(cell) + "\" fill=\"" + heat(p) + "\" stroke=\"black\"/>\n";
                s += "<text x=\"" + num(x + cell / 2) + "\" y=\"" + num(y + cell / 2 + 4) +
                     "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + num(p, "%.3f") +
                     "</text>\n";
            }
    }
    s += "</svg>\n";
    return s;
}

}  // namespace safedqn::inspect
