#include "safedqn/checkpoint.hpp"
#include "safedqn/eval_harness.hpp"
#include "safedqn/inspect.hpp"
#include "safedqn/render.hpp"
#include "safedqn/run_config.hpp"
#include "safedqn/trace.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace safedqn;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        path_ = fs::temp_directory_path() / (std::string("safedqn_") + info->test_suite_name() + "_" + info->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

agent::AgentConfig small_agent(std::size_t episodes) {
    agent::AgentConfig c;
    c.episodes = episodes;
    c.hidden = {16, 8};
    c.batch_size = 8;
    c.buffer_capacity = 3000;
    c.warmup = 16;
    c.target_sync_tau = 40;
    c.train_every = 2;
    return c;
}

env::EnvConfig small_env() {
    env::EnvConfig e;
    e.route_count = env::FixedRoutes{6};
    e.max_steps = 150;
    return e;
}

adversary::EpisodeRecord sample_episode(std::uint64_t seed = 4) {
    const auto bundle = agent::make_bundle(agent::AgentConfig{}, 3);
    return adversary::rollout(small_env(), bundle, seed, nullptr, 0, nullptr);
}

config::RunConfig parse(const std::string& text) {
    std::istringstream is(text);
    return config::parse_run_config(is);
}

}  // namespace

// ----- run configuration -----

TEST(RunConfig, EmptyFileGivesModuleDefaults) {
    const auto c = parse("");
    EXPECT_EQ(c.env, env::EnvConfig{});
    EXPECT_EQ(c.agent, agent::AgentConfig{});
    EXPECT_FALSE(c.attack.has_value());
    EXPECT_EQ(c.eval.cases, 500u);
    EXPECT_EQ(c.io.checkpoint_path, "checkpoint.json");
}

TEST(RunConfig, ParsesEverySection) {
    const auto c = parse(
        "[env]\nroute_count = 10\nmax_steps = 400\ncollision_radius = 0.01\n"
        "[agent]\nmode = coupled\nk = 4\nhidden = 64,32\nroute_training = 3-25\nepisodes = 10\n"
        "[attack]\norientation = goal\ntiming = st\nbeta = 0.2\nepsilon = 0.05\nbudget = 12\n"
        "[eval]\ncases = 20\nroutes = 5\nbase_seed = 9\nconflict_rate = per_episode\n"
        "[io]\noutput_dir = runs\nlog_level = debug\n");
    EXPECT_EQ(std::get<env::FixedRoutes>(c.env.route_count).count, 10);
    EXPECT_EQ(c.env.max_steps, 400u);
    EXPECT_EQ(c.env.collision_radius, 0.01);
    EXPECT_EQ(c.env.k_neighbors, 4u);
    EXPECT_EQ(c.agent.mode, agent::Mode::CoupledDQN);
    EXPECT_EQ(c.agent.hidden, (std::vector<std::size_t>{64, 32}));
    EXPECT_EQ(c.agent.route_training, (env::RouteCount{env::RandomRoutes{3, 25}}));
    ASSERT_TRUE(c.attack.has_value());
    EXPECT_EQ(c.attack->orientation, adversary::Orientation::GoalOriented);
    EXPECT_EQ(c.attack->timing, (adversary::Timing{adversary::StrategicallyTimed{0.2}}));
    EXPECT_EQ(c.attack->budget, std::optional<std::size_t>(12));
    EXPECT_EQ(c.eval.cases, 20u);
    EXPECT_EQ(c.eval.conflict_rate, eval::ConflictRateMode::PerEpisode);
    EXPECT_EQ(c.io.output_dir, "runs");
    EXPECT_EQ(c.io.log_level, config::LogLevel::Debug);
}

TEST(RunConfig, UnknownKeysAndSectionsAreErrors) {
    EXPECT_THROW(parse("[env]\nworld_sise = 1\n"), config::ConfigError);
    EXPECT_THROW(parse("[envv]\nworld_size = 1\n"), config::ConfigError);
    try {
        parse("[agent]\nbogus = 3\n");
        FAIL();
    } catch (const config::ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("agent.bogus"), std::string::npos);
    }
}

TEST(RunConfig, MalformedAndOutOfRangeValuesAreErrors) {
    EXPECT_THROW(parse("[env]\nmax_steps = ten\n"), config::ConfigError);
    EXPECT_THROW(parse("[env]\nroute_count = 40\n"), std::exception);
    EXPECT_THROW(parse("[agent]\ngamma = 1.5\n"), std::exception);
    EXPECT_THROW(parse("[agent]\nmode = sideways\n"), config::ConfigError);
    EXPECT_THROW(parse("[attack]\nfrequency = 2\ntiming = uniform\n"), std::exception);
    EXPECT_THROW(parse("[eval]\ncases = 0\n"), std::exception);
}

TEST(RunConfig, WriteThenParseRoundTrips) {
    auto c = parse("[agent]\nk = 5\nlearning_rate = 0.00031\n[attack]\ntiming = uniform\nfrequency = 0.3\n");
    c.env.conflict_radius = 0.0612345678901234;
    std::ostringstream os;
    config::write_run_config(os, c);
    EXPECT_EQ(parse(os.str()), c);
}

TEST(RunConfig, ScalarCodecs) {
    EXPECT_EQ(config::format_route_count(env::RandomRoutes{3, 25}), "3-25");
    EXPECT_EQ(config::parse_route_count("7"), (env::RouteCount{env::FixedRoutes{7}}));
    EXPECT_EQ(config::parse_double(config::format_double(0.1 + 0.2)), 0.1 + 0.2);
    EXPECT_EQ(config::parse_double_list("0, 0.01,0.03"), (std::vector<double>{0.0, 0.01, 0.03}));
    EXPECT_TRUE(config::parse_double_list("").empty());
    EXPECT_TRUE(config::parse_bool("true"));
    EXPECT_THROW(config::parse_uint("-3"), config::ConfigError);
}

// ----- checkpoints -----

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
    TempDir dir;
    const auto r = agent::train(small_agent(3), small_env(), 1);
    checkpoint::save_bundle(dir / "a.json", r.bundle, small_env());
    const auto loaded = checkpoint::load_bundle(dir / "a.json");
    EXPECT_EQ(loaded.bundle, r.bundle);
    EXPECT_EQ(loaded.env, small_env());
    checkpoint::save_bundle(dir / "b.json", loaded.bundle, loaded.env);
    EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
}

TEST(Checkpoint, LoadedBundleEvaluatesIdentically) {
    TempDir dir;
    const auto r = agent::train(small_agent(3), small_env(), 2);
    checkpoint::save_bundle(dir / "c.json", r.bundle, small_env());
    const auto loaded = checkpoint::load_bundle(dir / "c.json");
    const eval::ScenarioSet set{8, env::FixedRoutes{10}, 50};
    EXPECT_EQ(eval::run_eval(r.bundle, small_env(), set).report, eval::run_eval(loaded.bundle, small_env(), set).report);
}

TEST(Checkpoint, TamperedBodyFailsChecksum) {
    TempDir dir;
    const auto bundle = agent::make_bundle(small_agent(1), 3);
    checkpoint::save_bundle(dir / "t.json", bundle, small_env());
    auto text = slurp(dir / "t.json");
    const auto pos = text.find("\"weights\":[");
    ASSERT_NE(pos, std::string::npos);
    const auto digit = text.find_first_of("123456789", pos + 11);
    text[digit] = text[digit] == '9' ? '8' : static_cast<char>(text[digit] + 1);
    spit(dir / "t.json", text);
    EXPECT_THROW(checkpoint::load_bundle(dir / "t.json"), checkpoint::CheckpointError);
}

TEST(Checkpoint, VersionMismatchRefusesToLoad) {
    TempDir dir;
    const auto bundle = agent::make_bundle(small_agent(1), 4);
    checkpoint::save_bundle(dir / "v.json", bundle, small_env());
    auto text = slurp(dir / "v.json");
    const auto pos = text.find("\"format_version\":1");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 18, "\"format_version\":2");
    spit(dir / "v.json", text);
    EXPECT_THROW(checkpoint::load_bundle(dir / "v.json"), checkpoint::CheckpointError);
}

TEST(Checkpoint, MissingAndGarbageFilesAreErrors) {
    TempDir dir;
    EXPECT_THROW(checkpoint::load_bundle(dir / "nope.json"), checkpoint::CheckpointError);
    spit(dir / "g.json", "{not json");
    EXPECT_THROW(checkpoint::load_bundle(dir / "g.json"), checkpoint::CheckpointError);
}

TEST(Checkpoint, TrainerResumeIsBitIdentical) {
    TempDir dir;
    const auto cfg = small_agent(14);
    agent::Trainer straight(cfg, small_env(), 5);
    for (int i = 0; i < 4; ++i) straight.run_episode();
    checkpoint::save_trainer(dir / "tr.json", straight.state());
    EXPECT_TRUE(fs::exists(checkpoint::replay_sidecar(dir / "tr.json")));

    agent::Trainer resumed(checkpoint::load_trainer(dir / "tr.json"));
    const auto tail_a = agent::train_until_done(straight);
    const auto tail_b = agent::train_until_done(resumed);
    ASSERT_EQ(tail_a.size(), 10u);
    EXPECT_EQ(tail_a, tail_b);
    EXPECT_EQ(straight.bundle(), resumed.bundle());
    EXPECT_EQ(straight.state().buffer, resumed.state().buffer);
    EXPECT_EQ(straight.state().agent_rng, resumed.state().agent_rng);
}

TEST(Checkpoint, TrainerCheckpointAlsoLoadsAsBundle) {
    TempDir dir;
    agent::Trainer t(small_agent(2), small_env(), 6);
    t.run_episode();
    checkpoint::save_trainer(dir / "tb.json", t.state());
    EXPECT_EQ(checkpoint::load_bundle(dir / "tb.json").bundle, t.bundle());
}

TEST(Checkpoint, CorruptReplaySidecarIsDetected) {
    TempDir dir;
    agent::Trainer t(small_agent(2), small_env(), 7);
    t.run_episode();
    checkpoint::save_trainer(dir / "rs.json", t.state());
    const auto side = checkpoint::replay_sidecar(dir / "rs.json");
    auto bytes = slurp(side);
    bytes[bytes.size() / 2] ^= 0x5a;
    spit(side, bytes);
    EXPECT_THROW(checkpoint::load_trainer(dir / "rs.json"), checkpoint::CheckpointError);
}

// ----- traces -----

TEST(Trace, WriteReadRoundTrip) {
    const auto ep = sample_episode();
    std::stringstream ss;
    trace::write_jsonl(ss, small_env(), ep);
    const auto tr = trace::read_jsonl(ss);
    ASSERT_TRUE(tr.has_header);
    EXPECT_EQ(tr.header.goal_x, ep.initial.goal_x);
    EXPECT_EQ(tr.header.routes.size(), ep.initial.routes.size());
    EXPECT_EQ(tr.header.collision_radius, small_env().collision_radius);
    ASSERT_EQ(tr.steps.size(), ep.steps.size());
    for (std::size_t i = 0; i < ep.steps.size(); ++i) {
        EXPECT_EQ(tr.steps[i].t, ep.steps[i].t);
        EXPECT_EQ(tr.steps[i].x, ep.steps[i].ownship.x);
        EXPECT_EQ(tr.steps[i].heading, ep.steps[i].ownship.heading);
        EXPECT_EQ(tr.steps[i].action, ep.steps[i].action);
        EXPECT_EQ(tr.steps[i].r_g, ep.steps[i].r_g);
        EXPECT_EQ(tr.steps[i].conflict, ep.steps[i].conflict);
        EXPECT_EQ(tr.steps[i].termination, ep.steps[i].termination);
        ASSERT_EQ(tr.steps[i].intruders.size(), ep.steps[i].intruders.size());
        EXPECT_EQ(tr.steps[i].intruders[0].vx, ep.steps[i].intruders[0].vx);
    }
}

TEST(Trace, StepLinesCarryTheDocumentedFields) {
    std::stringstream ss;
    trace::write_jsonl(ss, small_env(), sample_episode());
    std::string header, step;
    std::getline(ss, header);
    std::getline(ss, step);
    EXPECT_NE(header.find("\"kind\":\"header\""), std::string::npos);
    for (const char* key : {"\"t\"", "\"ownship\"", "\"intruders\"", "\"action\"", "\"r_c\"", "\"r_g\"", "\"conflict\"",
                            "\"termination\"", "\"s\"", "\"h\"", "\"vx\""})
        EXPECT_NE(step.find(key), std::string::npos) << key;
}

TEST(Trace, MalformedLineReportsItsNumber) {
    std::stringstream ss;
    trace::write_jsonl(ss, small_env(), sample_episode());
    std::string text = ss.str();
    // Corrupt the third line.
    std::size_t pos = 0;
    for (int i = 0; i < 2; ++i) pos = text.find('\n', pos) + 1;
    text.insert(pos, "{\"t\": oops\n");
    std::istringstream is(text);
    try {
        trace::read_jsonl(is);
        FAIL() << "expected TraceError";
    } catch (const trace::TraceError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    std::istringstream missing("{\"t\":1}\n");
    EXPECT_THROW(trace::read_jsonl(missing), trace::TraceError);
}

TEST(Trace, EmptyInputHasNoHeader) {
    std::istringstream is("\n\n");
    const auto tr = trace::read_jsonl(is);
    EXPECT_FALSE(tr.has_header);
    EXPECT_TRUE(tr.steps.empty());
}

// ----- rendering -----

TEST(Render, DeterministicSvgWithExpectedElements) {
    std::stringstream ss;
    trace::write_jsonl(ss, small_env(), sample_episode());
    const auto tr = trace::read_jsonl(ss);
    const auto a = render::render_svg(tr), b = render::render_svg(tr);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.rfind("<?xml", 0), 0u);
    EXPECT_NE(a.find("<svg"), std::string::npos);
    EXPECT_NE(a.find("</svg>"), std::string::npos);
    EXPECT_NE(a.find("<polyline"), std::string::npos);
    EXPECT_NE(a.find("<polygon"), std::string::npos);
    EXPECT_NE(a.find("stroke-dasharray"), std::string::npos);
}

TEST(Render, EmptyTraceGivesBareFrame) {
    const auto svg = render::render_svg(trace::Trace{});
    EXPECT_NE(svg.find("<rect"), std::string::npos);
    EXPECT_EQ(svg.find("<polyline"), std::string::npos);
    EXPECT_EQ(svg.find("<circle"), std::string::npos);
}

// ----- inspection -----

TEST(Inspect, UniformQGivesOneNinth) {
    const auto g = inspect::probability_grid(std::vector<double>(9, -0.3));
    for (const auto& row : g)
        for (double p : row) EXPECT_NEAR(p, 1.0 / 9.0, 1e-15);
    EXPECT_THROW(inspect::probability_grid(std::vector<double>(4, 0.0)), std::invalid_argument);
}

TEST(Inspect, GridLayoutFollowsActionIndex) {
    std::vector<double> q(9, 0.0);
    q[env::ActionIndex(env::SpeedAction::Decelerate, env::HeadingAction::Left).index()] = 5.0;
    const auto g = inspect::probability_grid(q);
    EXPECT_GT(g[2][0], 0.9);
}

TEST(Inspect, TraceReportsSumToOneAndMatchBundle) {
    const auto bundle = agent::make_bundle(agent::AgentConfig{}, 3);
    const auto ep = adversary::rollout(small_env(), bundle, 8, nullptr, 0, nullptr);
    std::stringstream ss;
    trace::write_jsonl(ss, small_env(), ep);
    const auto tr = trace::read_jsonl(ss);
    const auto reports = inspect::inspect_trace(bundle, small_env(), tr);
    ASSERT_EQ(reports.size(), tr.steps.size() + 1);
    for (const auto& r : reports)
        for (const auto* g : {&r.overall, &r.goal, &r.safety}) {
            double total = 0.0;
            for (const auto& row : *g)
                for (double p : row) total += p;
            EXPECT_NEAR(total, 1.0, 1e-12);
        }
    // The initial state reproduces the rollout's first observation.
    auto e = small_env();
    const auto obs0 = env::build_observation(ep.initial, e).values;
    EXPECT_DOUBLE_EQ(reports[0].safety_value, agent::state_safety_value(bundle, obs0));
    std::ostringstream csv;
    inspect::write_csv(csv, reports);
    std::string header;
    std::istringstream lines(csv.str());
    std::getline(lines, header);
    EXPECT_EQ(header, "t,safety_value,map,acc_left,acc_keep,acc_right,keep_left,keep_keep,keep_right,dec_left,"
                      "dec_keep,dec_right");
    EXPECT_NE(inspect::render_svg(reports[0]).find("Safety"), std::string::npos);
}
