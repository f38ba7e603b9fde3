#include "oracles.hpp"

#include "safedqn/airspace_env.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

using namespace safedqn;
using namespace safedqn::env;

namespace {

EnvConfig fixed(int n) {
    EnvConfig c;
    c.route_count = FixedRoutes{n};
    return c;
}

// Minimal state with the ownship at (x, y) and intruders at the given points.
AirspaceState bare_state(double x, double y, const std::vector<std::pair<double, double>>& pts) {
    AirspaceState s;
    s.ownship = {x, y, 0.0, 0.0, 0.005, 0.0};
    s.ownship.vx = 0.005;
    for (auto [px, py] : pts) {
        s.intruders.push_back({px, py, 0.0, 0.0});
        s.routes.push_back({px, py, 0.0, 0.005});
    }
    s.goal_x = s.goal_y = 0.9;
    return s;
}

}  // namespace

TEST(EnvConfig, DefaultsValidate) { EXPECT_NO_THROW(validate(EnvConfig{})); }

TEST(EnvConfig, RejectsBrokenInvariants) {
    auto c = EnvConfig{};
    c.conflict_radius = c.collision_radius;
    EXPECT_THROW(validate(c), std::invalid_argument);
    c = EnvConfig{};
    c.ownship_speed_min = 0.0;
    EXPECT_THROW(validate(c), std::invalid_argument);
    c = EnvConfig{};
    c.ownship_speed_min = 0.02;
    EXPECT_THROW(validate(c), std::invalid_argument);
    c = fixed(2);
    EXPECT_THROW(validate(c), std::invalid_argument);
    c = fixed(26);
    EXPECT_THROW(validate(c), std::invalid_argument);
    c = EnvConfig{};
    c.route_count = RandomRoutes{1, 25};
    EXPECT_THROW(validate(c), std::invalid_argument);
    c = fixed(0);
    c.allow_sparse_routes = true;
    EXPECT_NO_THROW(validate(c));
    EXPECT_THROW(AirspaceEnv(fixed(30)), std::invalid_argument);
}

TEST(ActionIndex, BijectionWithSpeedHeadingPairs) {
    std::set<std::pair<int, int>> seen;
    for (std::size_t i = 0; i < kActionCount; ++i) {
        const ActionIndex a(i);
        EXPECT_EQ(static_cast<std::size_t>(a.speed()), i / 3);
        EXPECT_EQ(static_cast<std::size_t>(a.heading()), i % 3);
        EXPECT_EQ(ActionIndex(a.speed(), a.heading()), a);
        seen.emplace(static_cast<int>(a.speed()), static_cast<int>(a.heading()));
    }
    EXPECT_EQ(seen.size(), 9u);
    EXPECT_THROW(ActionIndex(9), std::out_of_range);
    EXPECT_EQ(ActionIndex().index(), 4u);
}

TEST(Reset, DeterministicForSeed) {
    const auto c = fixed(5);
    const auto a = reset(c, 7), b = reset(c, 7);
    EXPECT_EQ(a.observation, b.observation);
    ASSERT_EQ(a.state.intruders.size(), b.state.intruders.size());
    for (std::size_t i = 0; i < a.state.intruders.size(); ++i) {
        EXPECT_EQ(a.state.intruders[i].x, b.state.intruders[i].x);
        EXPECT_EQ(a.state.intruders[i].vy, b.state.intruders[i].vy);
    }
    EXPECT_EQ(a.state.goal_x, b.state.goal_x);
    EXPECT_NE(reset(c, 8).observation, a.observation);
}

TEST(Reset, FixedRouteCountGivesThatManyIntruders) {
    const auto c = fixed(5);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto s = reset_state(c, seed);
        EXPECT_EQ(s.intruders.size(), 5u);
        EXPECT_EQ(s.routes.size(), 5u);
    }
}

TEST(Reset, RandomRouteCountStaysInBand) {
    const RouteCount spec = RandomRoutes{};
    int lo = 100, hi = -1;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        Rng rng(seed);
        const int n = draw_route_count(spec, rng);
        lo = std::min(lo, n);
        hi = std::max(hi, n);
        ASSERT_GE(n, 3);
        ASSERT_LE(n, 25);
    }
    EXPECT_EQ(lo, 3);
    EXPECT_EQ(hi, 25);
}

TEST(Reset, InitialStateRespectsLayoutRules) {
    const EnvConfig c;
    const double w = c.world_size;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto s = reset_state(c, seed);
        const auto& o = s.ownship;
        const bool corner = (o.x == 0.0 || o.x == w) && (o.y == 0.0 || o.y == w);
        EXPECT_TRUE(corner) << "seed " << seed;
        // Heading points at the world centre.
        const double want = wrap_heading(std::atan2(w / 2 - o.y, w / 2 - o.x));
        EXPECT_NEAR(o.heading, want, 1e-12);
        EXPECT_GE(o.speed, c.ownship_speed_min);
        EXPECT_LE(o.speed, c.ownship_speed_max);
        EXPECT_GT(s.goal_x, 0.0);
        EXPECT_LT(s.goal_x, w);
        for (const auto& r : s.routes) {
            EXPECT_GE(std::hypot(r.entry_x - s.goal_x, r.entry_y - s.goal_y), 2.0 * c.conflict_radius);
            EXPECT_GE(r.speed, c.intruder_speed_min);
            EXPECT_LE(r.speed, c.intruder_speed_max);
        }
        for (std::size_t i = 0; i < s.intruders.size(); ++i) {
            EXPECT_EQ(s.intruders[i].x, s.routes[i].entry_x);
            EXPECT_EQ(s.intruders[i].y, s.routes[i].entry_y);
        }
    }
}

TEST(Step, KeepKeepAdvancesByVelocityWithStepPenalty) {
    auto c = fixed(0);
    c.allow_sparse_routes = true;
    auto s = reset_state(c, 3);
    s.ownship.x = s.ownship.y = 0.3;
    s.goal_x = s.goal_y = 0.9;
    const auto before = s.ownship;
    const auto out = step_state(s, c, ActionIndex(SpeedAction::Keep, HeadingAction::Keep));
    EXPECT_NEAR(s.ownship.x, before.x + before.vx * c.dt, 1e-15);
    EXPECT_NEAR(s.ownship.y, before.y + before.vy * c.dt, 1e-15);
    EXPECT_EQ(out.r_c, -0.0001);
    EXPECT_EQ(out.r_g, 0.0);
    EXPECT_FALSE(out.done);
    EXPECT_EQ(out.termination, Termination::None);
}

TEST(Step, CollisionEndsEpisodeWithPenalty) {
    EnvConfig c;
    auto s = bare_state(0.5, 0.5, {{0.505, 0.5}, {0.9, 0.1}, {0.1, 0.9}});
    const auto out = step_state(s, c, ActionIndex(SpeedAction::Keep, HeadingAction::Keep));
    EXPECT_EQ(out.r_g, -1.0);
    EXPECT_EQ(out.termination, Termination::Collision);
    EXPECT_TRUE(out.done);
    EXPECT_TRUE(out.conflict_this_step);
    EXPECT_THROW(step_state(s, c, ActionIndex{}), std::logic_error);
}

TEST(Step, ConflictChargedEveryStep) {
    EnvConfig c;
    c.ownship_speed_min = 0.001;
    auto s = bare_state(0.5, 0.5, {{0.53, 0.5}, {0.9, 0.1}, {0.1, 0.9}});
    s.ownship.speed = 0.001;
    s.ownship.heading = std::numbers::pi / 2;
    s.ownship.vx = 0.0;
    s.ownship.vy = 0.001;
    for (int i = 0; i < 3; ++i) {
        const auto out = step_state(s, c, ActionIndex(SpeedAction::Keep, HeadingAction::Keep));
        EXPECT_EQ(out.r_g, -0.5);
        EXPECT_EQ(out.r_c + out.r_g, -0.5 - 0.0001);
        EXPECT_TRUE(out.conflict_this_step);
        EXPECT_FALSE(out.done);
    }
}

TEST(Step, GoalReachedPaysOne) {
    EnvConfig c;
    auto s = bare_state(0.5, 0.5, {{0.1, 0.1}, {0.9, 0.1}, {0.1, 0.9}});
    s.goal_x = 0.51;
    s.goal_y = 0.5;
    const auto out = step_state(s, c, ActionIndex{});
    EXPECT_EQ(out.r_c, 1.0);
    EXPECT_EQ(out.r_g, 0.0);
    EXPECT_EQ(out.termination, Termination::GoalReached);
}

TEST(Step, MaxStepTerminates) {
    auto c = fixed(0);
    c.allow_sparse_routes = true;
    c.max_steps = 1000;
    auto s = bare_state(0.5, 0.5, {});
    s.goal_x = s.goal_y = 0.95;
    StepOutcome out;
    std::size_t n = 0;
    // Circle in place: slowest speed, always turning.
    s.ownship.speed = c.ownship_speed_min;
    while (!(out = step_state(s, c, ActionIndex(SpeedAction::Decelerate, HeadingAction::Left))).done) ++n;
    EXPECT_EQ(n + 1, 1000u);
    EXPECT_EQ(out.termination, Termination::MaxStep);
    EXPECT_EQ(out.r_c, -0.0001);
}

TEST(Step, RewardsOnlyTakeTableValues) {
    const EnvConfig c;
    Rng rng(5);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        AirspaceEnv e(c);
        e.reset(seed);
        StepOutcome out;
        do {
            out = e.step(ActionIndex(static_cast<std::size_t>(uniform_int(rng, 0, 8))));
            const double r = out.r_c + out.r_g;
            const bool ok = r == 1.0 || r == -0.0001 || r == -0.5 - 0.0001 || r == -1.0 - 0.0001;
            EXPECT_TRUE(ok) << r;
            EXPECT_EQ(out.done, out.termination != Termination::None);
        } while (!out.done);
    }
}

TEST(Step, InvariantsHoldAlongRandomEpisodes) {
    const EnvConfig c;
    Rng rng(6);
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        AirspaceEnv e(c);
        e.reset(seed);
        const auto n = e.state().intruders.size();
        StepOutcome out;
        do {
            out = e.step(ActionIndex(static_cast<std::size_t>(uniform_int(rng, 0, 8))));
            const auto& o = e.state().ownship;
            ASSERT_GE(o.speed, c.ownship_speed_min);
            ASSERT_LE(o.speed, c.ownship_speed_max);
            ASSERT_NEAR(o.vx, o.speed * std::cos(o.heading), 1e-9 * o.speed);
            ASSERT_NEAR(o.vy, o.speed * std::sin(o.heading), 1e-9 * o.speed);
            ASSERT_EQ(e.state().intruders.size(), n);
            for (const auto& it : e.state().intruders) {
                ASSERT_GE(it.x, 0.0);
                ASSERT_LE(it.x, c.world_size);
            }
            for (double v : out.observation.values) {
                ASSERT_GE(v, 0.0);
                ASSERT_LE(v, 1.0);
            }
        } while (!out.done);
    }
}

TEST(Step, IdenticalActionSequencesGiveIdenticalEpisodes) {
    const EnvConfig c;
    auto run = [&] {
        AirspaceEnv e(c);
        std::vector<Observation> obs{e.reset(42)};
        Rng rng(9);
        StepOutcome out;
        do {
            out = e.step(ActionIndex(static_cast<std::size_t>(uniform_int(rng, 0, 8))));
            obs.push_back(out.observation);
        } while (!out.done);
        return obs;
    };
    EXPECT_EQ(run(), run());
}

TEST(Step, ExitingIntruderRespawnsAtEntry) {
    EnvConfig c;
    auto s = bare_state(0.1, 0.1, {{0.999, 0.5}, {0.9, 0.9}, {0.5, 0.9}});
    s.routes[0] = {0.0, 0.5, 0.0, 0.005};
    s.intruders[0].vx = 0.005;
    step_state(s, c, ActionIndex{});
    EXPECT_EQ(s.intruders[0].x, 0.0);
    EXPECT_EQ(s.intruders[0].y, 0.5);
}

TEST(Step, OwnshipReflectsOffTheBoundary) {
    EnvConfig c;
    // Heading 30 degrees into the right wall from 0.002 inside it.
    auto s = bare_state(c.world_size - 0.002, 0.5, {{0.1, 0.1}, {0.1, 0.9}, {0.5, 0.1}});
    const double h = std::numbers::pi / 6.0;
    s.ownship.heading = h;
    s.ownship.vx = s.ownship.speed * std::cos(h);
    s.ownship.vy = s.ownship.speed * std::sin(h);
    step_state(s, c, ActionIndex{});
    const double overshoot = 0.005 * std::cos(h) - 0.002;
    EXPECT_NEAR(s.ownship.x, c.world_size - overshoot, 1e-15);
    EXPECT_NEAR(s.ownship.y, 0.5 + 0.005 * std::sin(h), 1e-15);
    EXPECT_NEAR(s.ownship.heading, std::numbers::pi - h, 1e-12);
    EXPECT_LT(s.ownship.vx, 0.0);
    EXPECT_GT(s.ownship.vy, 0.0);

    // Into a corner: both components flip.
    auto t = bare_state(0.001, 0.001, {{0.5, 0.5}, {0.9, 0.9}, {0.5, 0.9}});
    t.ownship.heading = 1.25 * std::numbers::pi;
    t.ownship.vx = t.ownship.speed * std::cos(t.ownship.heading);
    t.ownship.vy = t.ownship.speed * std::sin(t.ownship.heading);
    step_state(t, c, ActionIndex{});
    EXPECT_NEAR(t.ownship.heading, 0.25 * std::numbers::pi, 1e-12);
    EXPECT_GE(t.ownship.x, 0.0);
    EXPECT_GE(t.ownship.y, 0.0);
}

TEST(NearestNeighbors, SortsByDistance) {
    const auto s = bare_state(0.0, 0.0, {{0.4, 0.0}, {0.1, 0.0}, {0.0, 0.3}, {0.2, 0.0}});
    EXPECT_EQ(nearest_neighbors(s, 3), (std::vector<std::size_t>{1, 3, 2}));
}

TEST(NearestNeighbors, TieGoesToLowerIndex) {
    const auto s = bare_state(0.5, 0.5, {{0.6, 0.5}, {0.4, 0.5}, {0.9, 0.9}});
    EXPECT_EQ(nearest_neighbors(s, 1), (std::vector<std::size_t>{0}));
}

TEST(NearestNeighbors, FewerThanKIsAContractViolation) {
    const auto s = bare_state(0.5, 0.5, {{0.6, 0.5}});
    EXPECT_THROW(nearest_neighbors(s, 3), std::logic_error);
}

TEST(NearestNeighbors, MatchesFullSortOracle) {
    const EnvConfig c;
    Rng rng(21);
    for (int i = 0; i < 1000; ++i) {
        const auto s = oracle::random_state(rng, c, 25);
        ASSERT_EQ(nearest_neighbors(s, 3), oracle::nearest_by_full_sort(s, 3)) << "state " << i;
    }
}

TEST(Separation, ZeroDistanceCollides) {
    const EnvConfig c;
    const auto sep = detect_separation(bare_state(0.5, 0.5, {{0.5, 0.5}}), c);
    EXPECT_TRUE(sep.collision);
    EXPECT_TRUE(sep.conflict);
}

TEST(Separation, BeyondConflictRadiusIsClear) {
    const EnvConfig c;
    const auto sep = detect_separation(bare_state(0.5, 0.5, {{0.6, 0.5}}), c);
    EXPECT_FALSE(sep.collision);
    EXPECT_FALSE(sep.conflict);
}

TEST(Separation, MatchesPairwiseOracle) {
    const EnvConfig c;
    Rng rng(22);
    std::size_t collisions = 0, conflicts = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto n = static_cast<std::size_t>(uniform_int(rng, 3, 25));
        const auto s = oracle::random_state(rng, c, n);
        const auto got = detect_separation(s, c);
        const auto want = oracle::separation_by_pairs(s, c);
        ASSERT_EQ(got.collision, want.collision) << "state " << i;
        ASSERT_EQ(got.conflict, want.conflict) << "state " << i;
        ASSERT_NEAR(got.min_distance, want.min_distance, 1e-12);
        collisions += got.collision;
        conflicts += got.conflict;
    }
    // The generator must exercise both outcomes.
    EXPECT_GT(collisions, 0u);
    EXPECT_LT(conflicts, 1000u);
}

TEST(Observation, LengthIsFourKPlusEight) {
    EnvConfig c;
    EXPECT_EQ(reset(c, 1).observation.size(), 20u);
    c.k_neighbors = 5;
    EXPECT_EQ(reset(c, 1).observation.size(), 28u);
}

TEST(Observation, CentreAndZeroVelocityMapToMidpoint) {
    EnvConfig c;
    auto s = bare_state(0.5, 0.5, {{0.5, 0.6}, {0.5, 0.7}, {0.5, 0.8}});
    s.ownship.vx = s.ownship.vy = 0.0;
    const auto obs = build_observation(s, c);
    for (std::size_t slot = 0; slot < 3; ++slot) {
        EXPECT_DOUBLE_EQ(obs.values[4 * slot + 0], 0.5);
        EXPECT_DOUBLE_EQ(obs.values[4 * slot + 2], 0.5);
        EXPECT_DOUBLE_EQ(obs.values[4 * slot + 3], 0.5);
    }
    EXPECT_DOUBLE_EQ(obs.values[12], 0.5);
    EXPECT_DOUBLE_EQ(obs.values[13], 0.5);
    EXPECT_DOUBLE_EQ(obs.values[14], 0.5);
    EXPECT_DOUBLE_EQ(obs.values[15], 0.5);
}

TEST(Observation, DenormalisingRecoversRawState) {
    const EnvConfig c;
    const double vs = velocity_scale(c), w = c.world_size;
    Rng rng(23);
    for (int i = 0; i < 1000; ++i) {
        const auto s = oracle::random_state(rng, c, 10);
        const auto obs = build_observation(s, c).values;
        const auto nn_idx = oracle::nearest_by_full_sort(s, 3);
        for (std::size_t slot = 0; slot < 3; ++slot) {
            const auto& it = s.intruders[nn_idx[slot]];
            ASSERT_NEAR(obs[4 * slot + 0] * w, it.x, 1e-9);
            ASSERT_NEAR(obs[4 * slot + 1] * w, it.y, 1e-9);
            ASSERT_NEAR(obs[4 * slot + 2] * 2 * vs - vs, it.vx, 1e-9);
            ASSERT_NEAR(obs[4 * slot + 3] * 2 * vs - vs, it.vy, 1e-9);
        }
        const auto& o = s.ownship;
        ASSERT_NEAR(obs[12] * w, o.x, 1e-9);
        ASSERT_NEAR(obs[13] * w, o.y, 1e-9);
        ASSERT_NEAR(obs[14] * 2 * vs - vs, o.vx, 1e-9);
        ASSERT_NEAR(obs[15] * 2 * vs - vs, o.vy, 1e-9);
        ASSERT_NEAR(c.ownship_speed_min + obs[16] * (c.ownship_speed_max - c.ownship_speed_min), o.speed, 1e-9);
        ASSERT_NEAR(obs[17] * 2 * std::numbers::pi, o.heading, 1e-9);
        ASSERT_NEAR(obs[18] * w, s.goal_x, 1e-9);
        ASSERT_NEAR(obs[19] * w, s.goal_y, 1e-9);
    }
}

TEST(Observation, SparseWorldsZeroFillMissingSlots) {
    auto c = fixed(1);
    c.allow_sparse_routes = true;
    const auto s = bare_state(0.5, 0.5, {{0.7, 0.5}});
    const auto obs = build_observation(s, c).values;
    EXPECT_DOUBLE_EQ(obs[0], 0.7);
    for (std::size_t i = 4; i < 12; ++i) EXPECT_EQ(obs[i], 0.0);
}

TEST(Observation, SlotsResortedAsNeighboursMove) {
    EnvConfig c;
    auto s = bare_state(0.5, 0.5, {{0.6, 0.5}, {0.3, 0.5}, {0.9, 0.9}});
    s.ownship.speed = c.ownship_speed_min;
    s.ownship.heading = std::numbers::pi;
    s.ownship.vx = -c.ownship_speed_min;
    s.ownship.vy = 0.0;
    s.intruders[0].vx = 0.1;  // runs away from the ownship
    const auto before = build_observation(s, c).values;
    EXPECT_DOUBLE_EQ(before[0], 0.6);
    step_state(s, c, ActionIndex{});
    const auto after = build_observation(s, c).values;
    EXPECT_NEAR(after[0], 0.3, 1e-12);
}
