// safedqn: train, evaluate, attack, render and inspect conflict-resolution agents.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 numeric failure.

#include "safedqn/adversary.hpp"
#include "safedqn/agent.hpp"
#include "safedqn/checkpoint.hpp"
#include "safedqn/eval_harness.hpp"
#include "safedqn/inspect.hpp"
#include "safedqn/kernels.hpp"
#include "safedqn/render.hpp"
#include "safedqn/run_config.hpp"
#include "safedqn/trace.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace safedqn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Logger {
    config::LogLevel level = config::LogLevel::Info;
    bool enabled(config::LogLevel l) const { return static_cast<int>(l) <= static_cast<int>(level); }
    void info(const std::string& msg) const {
        if (enabled(config::LogLevel::Info)) std::cerr << msg << '\n';
    }
    void debug(const std::string& msg) const {
        if (enabled(config::LogLevel::Debug)) std::cerr << msg << '\n';
    }
};

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write '" + path.string() + "'");
    return out;
}

void write_training_log_header(std::ostream& os) { os << "episode,score,steps,termination,eta,lr\n"; }

void write_training_log_row(std::ostream& os, const agent::EpisodeLog& l) {
    std::ostringstream line;
    line.precision(17);
    line << l.episode << ',' << l.score << ',' << l.steps << ',' << env::to_string(l.termination) << ',' << l.eta << ','
         << l.lr << '\n';
    os << line.str();
}

config::RunConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return config::RunConfig{};
    return config::load_run_config(path);
}

// Scenario flags shared by eval, attack-sweep and inspect.
struct ScenarioFlags {
    std::optional<std::size_t> cases;
    std::optional<std::string> routes;
    std::optional<std::uint64_t> base_seed;
    std::optional<std::string> conflict_rate;

    void add(CLI::App* app) {
        app->add_option("--cases", cases, "Number of evaluation cases");
        app->add_option("--routes", routes, "Route count, N or LO-HI");
        app->add_option("--base-seed", base_seed, "Seed of case 0; case i uses base + i");
        app->add_option("--conflict-rate", conflict_rate, "per_step or per_episode");
    }

    config::EvalParams apply(config::EvalParams p) const {
        if (cases) p.cases = *cases;
        if (routes) config::apply_eval_field(p, "routes", *routes);
        if (base_seed) p.base_seed = *base_seed;
        if (conflict_rate) config::apply_eval_field(p, "conflict_rate", *conflict_rate);
        if (p.cases == 0) throw UsageError("--cases: empty scenario set (cases = 0)");
        return p;
    }
};

// Environment for evaluation: the config file when given, else the
// checkpoint's echo.
env::EnvConfig eval_env(const std::string& config_path, const config::RunConfig& rc,
                        const checkpoint::LoadedBundle& lb) {
    env::EnvConfig e = config_path.empty() ? lb.env : rc.env;
    e.k_neighbors = lb.bundle.config.k;
    return e;
}

std::string model_name(const fs::path& p) { return p.stem().string(); }

void emit_metrics(const std::vector<eval::MetricsReport>& rows, const std::string& out_path) {
    eval::write_metrics_table(std::cout, rows);
    if (!out_path.empty()) {
        auto out = open_out(out_path);
        eval::write_metrics_csv(out, rows);
    } else {
        std::cout << '\n';
        eval::write_metrics_csv(std::cout, rows);
    }
}

// ----- train -----

struct TrainArgs {
    std::string config;
    std::uint64_t seed = 0;
    std::optional<std::size_t> episodes;
    std::string resume;
    std::size_t checkpoint_every = 1000;
};

int cmd_train(const TrainArgs& a) {
    config::RunConfig rc = load_config_or_default(a.config);
    if (a.episodes) rc.agent.episodes = *a.episodes;
    config::validate(rc);
    Logger log{rc.io.log_level};

    std::optional<agent::Trainer> trainer;
    if (!a.resume.empty()) {
        auto st = checkpoint::load_trainer(a.resume);
        if (a.episodes) st.bundle.config.episodes = *a.episodes;
        trainer.emplace(std::move(st));
        log.info("resuming at episode " + std::to_string(trainer->state().next_episode));
    } else {
        trainer.emplace(rc.agent, rc.env, a.seed);
    }

    const fs::path out_dir = rc.io.output_dir;
    const fs::path ckpt = rc.io.checkpoint_path;
    auto log_csv = open_out(out_dir / "train_log.csv");
    write_training_log_header(log_csv);
    log.info("kernels: " + std::string(kernels::isa_name(kernels::active().isa)));

    agent::TrainHooks hooks;
    hooks.on_episode = [&](const agent::EpisodeLog& l, const agent::Trainer& t) {
        write_training_log_row(log_csv, l);
        if ((l.episode + 1) % 100 == 0)
            log.info("episode " + std::to_string(l.episode + 1) + " eta " + std::to_string(l.eta) + " steps " +
                     std::to_string(l.steps) + " " + std::string(env::to_string(l.termination)));
        if (a.checkpoint_every > 0 && (l.episode + 1) % a.checkpoint_every == 0 && !t.finished()) {
            checkpoint::save_trainer(ckpt, t.state());
            log.debug("checkpoint written to " + ckpt.string());
        }
    };
    hooks.on_numeric_failure = [&](const agent::Trainer& t) {
        const fs::path dump = ckpt.string() + ".failed";
        checkpoint::save_trainer(dump, t.state());
        std::cerr << "numeric failure; state dumped to " << dump << '\n';
    };
    agent::train_until_done(*trainer, hooks);
    checkpoint::save_trainer(ckpt, trainer->state());
    log.info("checkpoint written to " + ckpt.string());
    return kExitOk;
}

// ----- eval -----

struct AttackFlags {
    std::optional<std::string> orientation;
    std::optional<double> epsilon;
    std::optional<std::string> timing;
    std::optional<double> frequency;
    std::optional<double> beta;
    std::optional<std::size_t> budget;

    void add(CLI::App* app, bool with_scalars = true) {
        app->add_option("--orientation", orientation, "safety, goal or overall");
        app->add_option("--timing", timing, "every, uniform or st");
        if (with_scalars) {
            app->add_option("--epsilon", epsilon, "Perturbation magnitude");
            app->add_option("--frequency", frequency, "Attack probability for uniform timing");
            app->add_option("--beta", beta, "Preference threshold for st timing");
        }
        app->add_option("--budget", budget, "Maximum attacked steps per episode");
    }

    bool any() const { return orientation || epsilon || timing || frequency || beta || budget; }

    adversary::AttackConfig apply(adversary::AttackConfig c) const {
        if (orientation) config::apply_attack_field(c, "orientation", *orientation);
        if (timing) config::apply_attack_field(c, "timing", *timing);
        if (frequency) {
            if (!std::holds_alternative<adversary::UniformRandom>(c.timing))
                throw UsageError("--frequency requires --timing uniform");
            std::get<adversary::UniformRandom>(c.timing).frequency = *frequency;
        }
        if (beta) {
            if (!std::holds_alternative<adversary::StrategicallyTimed>(c.timing))
                throw UsageError("--beta requires --timing st");
            std::get<adversary::StrategicallyTimed>(c.timing).beta = *beta;
        }
        if (epsilon) c.epsilon = *epsilon;
        if (budget) c.budget = *budget;
        adversary::validate(c);
        return c;
    }
};

struct EvalArgs {
    std::string checkpoint;
    std::vector<std::string> compare;
    std::string config;
    ScenarioFlags scenario;
    AttackFlags attack;
    std::string out;
    std::string traces_dir;
};

int cmd_eval(const EvalArgs& a) {
    const config::RunConfig rc = load_config_or_default(a.config);
    const config::EvalParams params = a.scenario.apply(rc.eval);
    std::optional<adversary::AttackConfig> attack = rc.attack;
    if (a.attack.any()) attack = a.attack.apply(attack.value_or(adversary::AttackConfig{}));
    eval::EvalOptions opts{params.conflict_rate};

    std::vector<fs::path> paths{a.checkpoint};
    for (const auto& c : a.compare) paths.emplace_back(c);
    std::vector<checkpoint::LoadedBundle> loaded;
    for (const auto& p : paths) loaded.push_back(checkpoint::load_bundle(p));

    std::vector<eval::MetricsReport> rows;
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        const env::EnvConfig e = eval_env(a.config, rc, loaded[i]);
        rows.push_back(eval::run_eval(loaded[i].bundle, e, params.scenarios(), attack ? &*attack : nullptr, opts,
                                      model_name(paths[i]))
                           .report);
        if (!a.traces_dir.empty()) {
            const auto scenario_env = eval::scenario_env(e, params.scenarios(), loaded[i].bundle);
            for (std::size_t c = 0; c < params.cases; ++c) {
                const auto seed = params.scenarios().case_seed(c);
                adversary::AttackStats stats;
                const auto rec = adversary::rollout(scenario_env, loaded[i].bundle, seed, attack ? &*attack : nullptr,
                                                    derive_seed(seed, Stream::Attack), &stats, true);
                auto out = open_out(fs::path(a.traces_dir) / (model_name(paths[i]) + "_case" + std::to_string(c) + ".jsonl"));
                trace::write_jsonl(out, scenario_env, rec);
            }
        }
    }
    emit_metrics(rows, a.out);
    return kExitOk;
}

// ----- attack-sweep -----

struct SweepArgs {
    std::string checkpoint;
    std::string config;
    ScenarioFlags scenario;
    AttackFlags attack;
    std::optional<double> epsilon;
    std::optional<std::string> epsilons, frequencies, betas;
    std::string out;
    std::string attack_log;
};

int cmd_attack_sweep(const SweepArgs& a) {
    const int grids = (a.epsilons ? 1 : 0) + (a.frequencies ? 1 : 0) + (a.betas ? 1 : 0);
    if (grids == 0) throw UsageError("attack-sweep needs one of --epsilons, --frequencies or --betas");
    if (grids > 1) throw UsageError("conflicting grid flags: give exactly one of --epsilons, --frequencies, --betas");

    eval::SweepGrid grid;
    std::string timing_needed;
    if (a.epsilons) {
        grid.axis = eval::SweepAxis::Epsilon;
        grid.values = config::parse_double_list(*a.epsilons);
    } else if (a.frequencies) {
        grid.axis = eval::SweepAxis::Frequency;
        grid.values = config::parse_double_list(*a.frequencies);
        timing_needed = "uniform";
    } else {
        grid.axis = eval::SweepAxis::Beta;
        grid.values = config::parse_double_list(*a.betas);
        timing_needed = "st";
    }
    if (grid.values.empty()) throw UsageError("empty sweep grid");
    if (!timing_needed.empty() && a.attack.timing && *a.attack.timing != timing_needed)
        throw UsageError("conflicting flags: this grid requires --timing " + timing_needed);
    if (grid.axis == eval::SweepAxis::Epsilon && a.epsilon)
        throw UsageError("conflicting flags: --epsilon with an --epsilons grid");

    const config::RunConfig rc = load_config_or_default(a.config);
    const config::EvalParams params = a.scenario.apply(rc.eval);
    adversary::AttackConfig base = a.attack.apply(rc.attack.value_or(adversary::AttackConfig{}));
    if (a.epsilon) base.epsilon = *a.epsilon;
    if (!timing_needed.empty()) config::apply_attack_field(base, "timing", timing_needed);

    const auto lb = checkpoint::load_bundle(a.checkpoint);
    const env::EnvConfig e = eval_env(a.config, rc, lb);
    auto rows = eval::sweep(lb.bundle, e, params.scenarios(), grid, base, {params.conflict_rate},
                            model_name(a.checkpoint));
    emit_metrics(rows, a.out);

    if (!a.attack_log.empty()) {
        // Per-step decisions of case 0 at the first grid point.
        adversary::AttackConfig first = base;
        switch (grid.axis) {
            case eval::SweepAxis::Epsilon: first.epsilon = grid.values.front(); break;
            case eval::SweepAxis::Frequency: first.timing = adversary::UniformRandom{grid.values.front()}; break;
            case eval::SweepAxis::Beta: first.timing = adversary::StrategicallyTimed{grid.values.front()}; break;
        }
        const auto env_cfg = eval::scenario_env(e, params.scenarios(), lb.bundle);
        const auto r = adversary::attacked_rollout(env_cfg, lb.bundle, first, params.scenarios().case_seed(0));
        auto out = open_out(a.attack_log);
        adversary::write_attack_log_csv(out, r.stats);
    }
    return kExitOk;
}

// ----- render -----

struct RenderArgs {
    std::string trace;
    std::string out;
};

int cmd_render(const RenderArgs& a) {
    std::ifstream in(a.trace);
    if (!in) throw UsageError("cannot open trace '" + a.trace + "'");
    const auto tr = trace::read_jsonl(in);
    if (a.out.empty()) {
        render::write_svg(std::cout, tr);
    } else {
        auto out = open_out(a.out);
        render::write_svg(out, tr);
    }
    return kExitOk;
}

// ----- inspect -----

struct InspectArgs {
    std::string checkpoint;
    std::string config;
    std::string trace;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> routes;
    std::string out;
    std::string svg;
    std::optional<std::size_t> svg_step;
};

int cmd_inspect(const InspectArgs& a) {
    if (a.trace.empty() == !a.seed.has_value()) throw UsageError("inspect needs exactly one of --trace or --seed");
    const config::RunConfig rc = load_config_or_default(a.config);
    const auto lb = checkpoint::load_bundle(a.checkpoint);
    env::EnvConfig e = eval_env(a.config, rc, lb);

    trace::Trace tr;
    if (!a.trace.empty()) {
        std::ifstream in(a.trace);
        if (!in) throw UsageError("cannot open trace '" + a.trace + "'");
        tr = trace::read_jsonl(in);
    } else {
        e.route_count = a.routes ? config::parse_route_count(*a.routes) : rc.eval.routes;
        env::validate(e);
        const auto rec = adversary::rollout(e, lb.bundle, *a.seed, nullptr, 0, nullptr, true);
        std::stringstream ss;
        trace::write_jsonl(ss, e, rec);
        tr = trace::read_jsonl(ss);
    }
    const auto reports = inspect::inspect_trace(lb.bundle, e, tr);
    if (a.out.empty()) {
        inspect::write_csv(std::cout, reports);
    } else {
        auto out = open_out(a.out);
        inspect::write_csv(out, reports);
    }
    if (!a.svg.empty()) {
        const std::size_t step = a.svg_step.value_or(0);
        if (step >= reports.size()) throw UsageError("--svg-step past the last state");
        auto out = open_out(a.svg);
        out << inspect::render_svg(reports[step]);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SafeDQN-X conflict resolution: training, evaluation, adversarial attacks and inspection"};
    app.require_subcommand(1);

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Train an agent and write a resumable checkpoint");
    t->add_option("--config", train.config, "INI run configuration");
    t->add_option("--seed", train.seed, "Root seed for every random stream");
    t->add_option("--episodes", train.episodes, "Override agent.episodes");
    t->add_option("--resume", train.resume, "Continue from a trainer checkpoint");
    t->add_option("--checkpoint-every", train.checkpoint_every, "Episodes between checkpoints (0 = only at the end)");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Evaluate one or more checkpoints on a paired scenario set");
    e->add_option("--checkpoint", ev.checkpoint, "Checkpoint to evaluate")->required();
    e->add_option("--compare", ev.compare, "Further checkpoints evaluated on the same cases");
    e->add_option("--config", ev.config, "INI run configuration");
    ev.scenario.add(e);
    ev.attack.add(e);
    e->add_option("--out", ev.out, "Metrics CSV path (stdout when omitted)");
    e->add_option("--traces-dir", ev.traces_dir, "Write one JSONL trace per case here");

    SweepArgs sw;
    auto* s = app.add_subcommand("attack-sweep", "Sweep attack magnitude, frequency or ST threshold");
    s->add_option("--checkpoint", sw.checkpoint, "Checkpoint to attack")->required();
    s->add_option("--config", sw.config, "INI run configuration");
    sw.scenario.add(s);
    sw.attack.add(s, false);
    s->add_option("--epsilon", sw.epsilon, "Magnitude for frequency and beta sweeps");
    s->add_option("--epsilons", sw.epsilons, "Comma-separated magnitudes");
    s->add_option("--frequencies", sw.frequencies, "Comma-separated uniform attack frequencies");
    s->add_option("--betas", sw.betas, "Comma-separated ST thresholds");
    s->add_option("--out", sw.out, "Sweep CSV path (stdout when omitted)");
    s->add_option("--attack-log", sw.attack_log, "Per-step attack CSV of case 0 at the first grid point");

    RenderArgs rd;
    auto* r = app.add_subcommand("render", "Render an episode trace as SVG");
    r->add_option("trace", rd.trace, "Episode JSONL trace")->required();
    r->add_option("--out", rd.out, "SVG path (stdout when omitted)");

    InspectArgs in;
    auto* i = app.add_subcommand("inspect", "Safety value and action-probability maps per state");
    i->add_option("--checkpoint", in.checkpoint, "Checkpoint to inspect")->required();
    i->add_option("--config", in.config, "INI run configuration");
    i->add_option("--trace", in.trace, "Episode JSONL trace");
    i->add_option("--seed", in.seed, "Roll out a greedy episode on this seed instead");
    i->add_option("--routes", in.routes, "Route count for --seed rollouts");
    i->add_option("--out", in.out, "CSV path (stdout when omitted)");
    i->add_option("--svg", in.svg, "Heat-map SVG for one state");
    i->add_option("--svg-step", in.svg_step, "State index for --svg (default 0)");

    auto* d = app.add_subcommand("print-config", "Print the full default configuration");
    std::string print_from;
    d->add_option("--config", print_from, "Echo this configuration with defaults filled in");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (t->parsed()) return cmd_train(train);
        if (e->parsed()) return cmd_eval(ev);
        if (s->parsed()) return cmd_attack_sweep(sw);
        if (r->parsed()) return cmd_render(rd);
        if (i->parsed()) return cmd_inspect(in);
        if (d->parsed()) {
            config::write_run_config(std::cout, load_config_or_default(print_from));
            return kExitOk;
        }
    } catch (const nn::NumericError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
