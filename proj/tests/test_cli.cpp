#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "safedqn_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        std::ofstream(d / "run.ini") << "[env]\nroute_count = 5\nmax_steps = 120\n"
                                        "[agent]\nepisodes = 3\nhidden = 16,8\nbatch_size = 8\nwarmup = 16\n"
                                        "buffer_capacity = 2000\n"
                                        "[eval]\ncases = 4\nroutes = 5\n"
                                        "[io]\noutput_dir = "
                                     << (d / "out").string() << "\ncheckpoint_path = " << (d / "ckpt.json").string()
                                     << "\n";
        return d;
    }();
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = std::string(SAFEDQN_CLI_PATH) + " " + args + " > " + (workdir() / "stdout.txt").string() +
                            " 2> " + (workdir() / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string cfg() { return "--config " + (workdir() / "run.ini").string(); }

// Trains once and hands out the checkpoint path.
const fs::path& trained() {
    static const fs::path ckpt = [] {
        EXPECT_EQ(run("train " + cfg() + " --seed 3"), 0) << slurp(workdir() / "stderr.txt");
        return workdir() / "ckpt.json";
    }();
    return ckpt;
}

}  // namespace

TEST(Cli, NoSubcommandIsAUsageError) { EXPECT_EQ(run(""), 1); }

TEST(Cli, PrintConfigEchoesEffectiveValues) {
    ASSERT_EQ(run("print-config " + cfg()), 0);
    const auto out = slurp(workdir() / "stdout.txt");
    EXPECT_NE(out.find("route_count = 5"), std::string::npos);
    EXPECT_NE(out.find("[agent]"), std::string::npos);
}

TEST(Cli, UnknownConfigKeyIsRejected) {
    std::ofstream(workdir() / "bad.ini") << "[env]\nnot_a_key = 1\n";
    EXPECT_EQ(run("print-config --config " + (workdir() / "bad.ini").string()), 1);
    EXPECT_NE(slurp(workdir() / "stderr.txt").find("not_a_key"), std::string::npos);
}

TEST(Cli, TrainWritesCheckpointAndLog) {
    ASSERT_TRUE(fs::exists(trained()));
    const auto log = slurp(workdir() / "out" / "train_log.csv");
    EXPECT_EQ(log.rfind("episode,score,steps,termination,eta,lr\n", 0), 0u);
    EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 4);
}

TEST(Cli, EvalWritesMetricsCsv) {
    const auto out = workdir() / "metrics.csv";
    ASSERT_EQ(run("eval " + cfg() + " --checkpoint " + trained().string() + " --out " + out.string()), 0)
        << slurp(workdir() / "stderr.txt");
    const auto csv = slurp(out);
    EXPECT_EQ(csv.rfind("model,routes,cases,", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(Cli, EvalRejectsZeroCasesAndMissingCheckpoint) {
    EXPECT_EQ(run("eval " + cfg() + " --checkpoint " + trained().string() + " --cases 0"), 1);
    EXPECT_EQ(run("eval " + cfg() + " --checkpoint " + (workdir() / "missing.json").string()), 1);
}

TEST(Cli, AttackSweepNeedsExactlyOneGrid) {
    const std::string base = "attack-sweep " + cfg() + " --checkpoint " + trained().string();
    EXPECT_EQ(run(base), 1);
    EXPECT_EQ(run(base + " --epsilons 0,0.01 --betas 0.1"), 1);
    const auto out = workdir() / "sweep.csv";
    ASSERT_EQ(run(base + " --epsilons 0,0.03 --out " + out.string()), 0) << slurp(workdir() / "stderr.txt");
    const auto csv = slurp(out);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Cli, TracesRenderAndInspect) {
    const auto traces = workdir() / "traces";
    ASSERT_EQ(run("eval " + cfg() + " --checkpoint " + trained().string() + " --cases 1 --traces-dir " +
                  traces.string()),
              0)
        << slurp(workdir() / "stderr.txt");
    fs::path trace;
    for (const auto& e : fs::directory_iterator(traces)) trace = e.path();
    ASSERT_FALSE(trace.empty());
    const auto svg = workdir() / "traj.svg";
    ASSERT_EQ(run("render " + trace.string() + " --out " + svg.string()), 0);
    EXPECT_NE(slurp(svg).find("<svg"), std::string::npos);
    const auto csv = workdir() / "inspect.csv";
    ASSERT_EQ(run("inspect " + cfg() + " --checkpoint " + trained().string() + " --trace " + trace.string() +
                  " --out " + csv.string()),
              0)
        << slurp(workdir() / "stderr.txt");
    EXPECT_EQ(slurp(csv).rfind("t,safety_value,map,", 0), 0u);
    EXPECT_EQ(run("render " + (workdir() / "absent.jsonl").string()), 1);
}
