#include "safedqn/eval_harness.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace safedqn::eval {

std::string routes_label(const env::RouteCount& spec) {
    if (const auto* f = std::get_if<env::FixedRoutes>(&spec)) return std::to_string(f->count);
    const auto& r = std::get<env::RandomRoutes>(spec);
    return std::to_string(r.lo) + "-" + std::to_string(r.hi);
}

env::EnvConfig scenario_env(const env::EnvConfig& base, const ScenarioSet& scenarios, const agent::PolicyBundle& bundle) {
    env::EnvConfig e = base;
    e.route_count = scenarios.route_spec;
    e.k_neighbors = bundle.config.k;
    return e;
}

MetricsReport aggregate(const std::vector<EpisodeSummary>& episodes, std::size_t max_steps, const EvalOptions& options) {
    MetricsReport r;
    r.case_count = episodes.size();
    if (episodes.empty()) return r;
    std::size_t collisions = 0, max_hits = 0, goals = 0, total_steps = 0, conflict_steps = 0, conflicted_eps = 0;
    std::size_t goal_steps = 0, attacked = 0;
    double score = 0.0;
    for (const auto& e : episodes) {
        switch (e.termination) {
            case env::Termination::Collision: ++collisions; break;
            case env::Termination::MaxStep: ++max_hits; break;
            case env::Termination::GoalReached:
                ++goals;
                goal_steps += e.steps;
                break;
            case env::Termination::None: throw std::logic_error("aggregate: unterminated episode");
        }
        total_steps += e.steps;
        conflict_steps += e.conflict_steps;
        if (e.conflict_steps > 0) ++conflicted_eps;
        score += e.score;
        attacked += e.attacked_steps;
    }
    const double n = static_cast<double>(episodes.size());
    r.collision_rate = static_cast<double>(collisions) / n;
    r.max_step_rate = static_cast<double>(max_hits) / n;
    r.goal_rate = static_cast<double>(goals) / n;
    r.conflict_rate = options.conflict_rate == ConflictRateMode::PerStep
                          ? (total_steps ? static_cast<double>(conflict_steps) / static_cast<double>(total_steps) : 0.0)
                          : static_cast<double>(conflicted_eps) / n;
    r.avg_steps = goals ? static_cast<double>(goal_steps) / static_cast<double>(goals) : 0.0;
    r.avg_steps = std::min(r.avg_steps, static_cast<double>(max_steps));
    r.avg_score = score / n;
    r.achieved_attack_rate = total_steps ? static_cast<double>(attacked) / static_cast<double>(total_steps) : 0.0;
    return r;
}

EvalResult run_eval(const agent::PolicyBundle& bundle, const env::EnvConfig& base_env, const ScenarioSet& scenarios,
                    const adversary::AttackConfig* attack, const EvalOptions& options, const std::string& model_name) {
    if (scenarios.case_count == 0) throw std::invalid_argument("run_eval: empty scenario set (cases = 0)");
    const env::EnvConfig e = scenario_env(base_env, scenarios, bundle);
    env::validate(e);
    const std::size_t obs_dim = env::observation_size(e.k_neighbors);
    if (bundle.input_dim() != obs_dim)
        throw std::invalid_argument("run_eval: bundle input_dim " + std::to_string(bundle.input_dim()) +
                                    " != scenario observation size " + std::to_string(obs_dim));

    EvalResult out;
    out.episodes.reserve(scenarios.case_count);
    for (std::size_t i = 0; i < scenarios.case_count; ++i) {
        const std::uint64_t seed = scenarios.case_seed(i);
        adversary::AttackStats stats;
        const auto rec = adversary::rollout(e, bundle, seed, attack, derive_seed(seed, Stream::Attack),
                                            attack ? &stats : nullptr, false);
        EpisodeSummary s;
        s.case_index = i;
        s.seed = seed;
        s.termination = rec.termination;
        s.steps = rec.length();
        s.conflict_steps = rec.conflict_steps;
        s.score = rec.score;
        s.attacked_steps = stats.steps_attacked;
        out.episodes.push_back(s);
    }
    out.report = aggregate(out.episodes, e.max_steps, options);
    out.report.model = model_name;
    out.report.routes = routes_label(scenarios.route_spec);
    if (attack) out.report.attack = *attack;
    return out;
}

std::vector<MetricsReport> sweep(const agent::PolicyBundle& bundle, const env::EnvConfig& base_env,
                                 const ScenarioSet& scenarios, const SweepGrid& grid,
                                 const adversary::AttackConfig& base_attack, const EvalOptions& options,
                                 const std::string& model_name) {
    if (grid.values.empty()) throw std::invalid_argument("sweep: empty grid");
    std::vector<MetricsReport> rows;
    rows.reserve(grid.values.size());
    for (double v : grid.values) {
        adversary::AttackConfig a = base_attack;
        switch (grid.axis) {
            case SweepAxis::Epsilon: a.epsilon = v; break;
            case SweepAxis::Frequency: a.timing = adversary::UniformRandom{v}; break;
            case SweepAxis::Beta: a.timing = adversary::StrategicallyTimed{v}; break;
        }
        rows.push_back(run_eval(bundle, base_env, scenarios, &a, options, model_name).report);
    }
    return rows;
}

std::vector<MetricsReport> compare_models(const std::vector<NamedBundle>& bundles, const env::EnvConfig& base_env,
                                          const ScenarioSet& scenarios, const adversary::AttackConfig* attack,
                                          const EvalOptions& options) {
    if (bundles.size() < 2) throw std::invalid_argument("compare_models: need at least two bundles");
    std::vector<MetricsReport> rows;
    for (const auto& nb : bundles) {
        if (!nb.bundle) throw std::invalid_argument("compare_models: null bundle '" + nb.name + "'");
        rows.push_back(run_eval(*nb.bundle, base_env, scenarios, attack, options, nb.name).report);
    }
    return rows;
}

void write_metrics_header(std::ostream& os) {
    os << "model,routes,cases,collision_rate,conflict_rate,max_step_rate,avg_steps,avg_score,"
          "attack_orientation,epsilon,timing,beta,achieved_attack_rate\n";
}

void write_metrics_row(std::ostream& os, const MetricsReport& r) {
    std::ostringstream line;
    line << std::setprecision(10);
    line << r.model << ',' << r.routes << ',' << r.case_count << ',' << r.collision_rate << ',' << r.conflict_rate
         << ',' << r.max_step_rate << ',' << r.avg_steps << ',' << r.avg_score << ',';
    if (r.attack) {
        const auto& a = *r.attack;
        line << adversary::to_string(a.orientation) << ',' << a.epsilon << ',' << adversary::timing_name(a.timing);
        if (const auto* u = std::get_if<adversary::UniformRandom>(&a.timing)) line << ':' << u->frequency;
        line << ',';
        if (const auto* s = std::get_if<adversary::StrategicallyTimed>(&a.timing)) line << s->beta;
    } else {
        line << "none,0,none,";
    }
    line << ',' << r.achieved_attack_rate << '\n';
    os << line.str();
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricsReport>& rows) {
    write_metrics_header(os);
    for (const auto& r : rows) write_metrics_row(os, r);
}

void write_metrics_table(std::ostream& os, const std::vector<MetricsReport>& rows) {
    std::ostringstream t;
    t << std::left << std::setw(18) << "model" << std::right << std::setw(8) << "routes" << std::setw(10) << "collision"
      << std::setw(10) << "conflict" << std::setw(10) << "max-step" << std::setw(10) << "avg-steps" << std::setw(10)
      << "avg-score" << std::setw(10) << "attack%" << '\n';
    t << std::fixed;
    for (const auto& r : rows) {
        t << std::left << std::setw(18) << r.model << std::right << std::setw(8) << r.routes << std::setprecision(2)
          << std::setw(9) << 100.0 * r.collision_rate << '%' << std::setw(9) << 100.0 * r.conflict_rate << '%'
          << std::setw(9) << 100.0 * r.max_step_rate << '%' << std::setprecision(1) << std::setw(10) << r.avg_steps
          << std::setprecision(3) << std::setw(10) << r.avg_score << std::setprecision(1) << std::setw(9)
          << 100.0 * r.achieved_attack_rate << "%\n";
    }
    os << t.str();
}

}  // namespace safedqn::eval
