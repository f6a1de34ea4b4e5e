#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "waam/config.hpp"
#include "waam/controller.hpp"

using namespace waam;

namespace {

const DepositionModel al100{100.0, -0.62, 1.85, 0.27};

ExperimentSetup wall_setup(std::size_t layers) {
    auto s = named_preset("paper-wall-aluminum").setup;
    s.layers = layers;
    return s;
}

ExperimentSetup cylinder_setup(std::size_t layers) {
    auto s = named_preset("paper-cylinder-continuous").setup;
    s.layers = layers;
    return s;
}

void quiet_plant(ExperimentSetup& s) {
    s.disturbance.process_noise_sigma = 0.0;
    s.disturbance.edge_droop_depth = 0.0;
}

std::size_t argmin(const std::vector<double>& v) {
    return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST(LayerTarget, RecursionIsExact) {
    const auto t = make_target(12.34, 2.34);
    EXPECT_EQ(t.target, 12.34 + 2.34);
    EXPECT_EQ(t.layer_height, 12.34);
    EXPECT_EQ(t.desired_gain, 2.34);
}

TEST(PlanLayerSpeeds, FlatLayerCommandsNominal) {
    const ControllerConfig cc;
    const std::vector<double> h(40, 10.0);
    const auto p = plan_layer_speeds(std::span<const double>(h), 10.0, 2.34, al100, cc);
    ASSERT_EQ(p.speeds.size(), 40u);
    for (double v : p.speeds) EXPECT_NEAR(v, 5.0, 0.02);
    EXPECT_DOUBLE_EQ(p.speeds[7], f_inverse(al100, 2.34));
}

TEST(PlanLayerSpeeds, LowSegmentSlowsDown) {
    ControllerConfig cc;
    cc.height_filter_segments = 1;
    std::vector<double> h(40, 10.0);
    h[20] = 9.0;
    const auto p = plan_layer_speeds(std::span<const double>(h), 10.0, 2.34, al100, cc);
    EXPECT_LT(p.speeds[20], p.speeds[19]);
    EXPECT_LT(p.speeds[20], p.speeds[21]);
    EXPECT_DOUBLE_EQ(p.speeds[20], f_inverse(al100, 3.34));
}

TEST(PlanLayerSpeeds, HighSegmentGetsMaximumSpeed) {
    const ControllerConfig cc;
    std::vector<double> h(40, 10.0);
    for (std::size_t k = 10; k < 13; ++k) h[k] = 15.0;
    const auto p = plan_layer_speeds(std::span<const double>(h), 10.0, 2.34, al100, cc);
    EXPECT_EQ(p.speeds[11], cc.v_max);
}

TEST(PlanLayerSpeeds, FilterAveragesThreeSegments) {
    const ControllerConfig cc;
    std::vector<double> h(40, 10.0);
    h[5] = 10.3;
    const auto p = plan_layer_speeds(std::span<const double>(h), 10.0, 2.34, al100, cc);
    const double expected = f_inverse(al100, 2.34 - 0.1);
    EXPECT_NEAR(p.speeds[4], expected, 1e-12);
    EXPECT_NEAR(p.speeds[5], expected, 1e-12);
    EXPECT_NEAR(p.speeds[6], expected, 1e-12);
    EXPECT_DOUBLE_EQ(p.speeds[7], f_inverse(al100, 2.34));
}

TEST(PlanLayerSpeeds, EmptyMeasurementsViolateContract) {
    EXPECT_THROW(plan_layer_speeds(std::span<const double>(), 1.0, 2.34, al100, ControllerConfig{}),
                 ContractViolation);
}

TEST(PlanLayerSpeeds, ClampAndArgminProperties) {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> n(0.0, 1.5);
    std::normal_distribution<double> small(0.0, 0.3);
    const ControllerConfig cc;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> h(40);
        for (auto& x : h) x = 20.0 + n(rng);
        const auto p = plan_layer_speeds(std::span<const double>(h), 20.0, 2.34, al100, cc, trial % 2 == 0);
        for (double v : p.speeds) {
            EXPECT_GE(v, cc.v_min);
            EXPECT_LE(v, cc.v_max);
        }
        // Unclamped regime: the lowest filtered segment is the slowest.
        for (auto& x : h) x = 20.0 + small(rng);
        const bool closed = trial % 2 == 0;
        const auto q = plan_layer_speeds(std::span<const double>(h), 20.0, 2.34, al100, cc, closed);
        EXPECT_EQ(argmin(q.speeds), argmin(moving_average(h, 3, closed)));
    }
}

TEST(PlanLayerSpeeds, MeasurementOverloadMatches) {
    std::vector<SegmentMeasurement> m(40);
    std::vector<double> h(40);
    for (std::size_t k = 0; k < 40; ++k) {
        h[k] = 5.0 + 0.01 * static_cast<double>(k % 7);
        m[k] = {k, h[k], 3, false};
    }
    const ControllerConfig cc;
    const auto a = plan_layer_speeds(std::span<const SegmentMeasurement>(m), 5.0, 2.34, al100, cc);
    const auto b = plan_layer_speeds(std::span<const double>(h), 5.0, 2.34, al100, cc);
    EXPECT_EQ(a.speeds, b.speeds);
}

TEST(MovingAverage, OpenTruncatesClosedWraps) {
    const std::vector<double> v = {3, 0, 0, 0};
    const auto open = moving_average(v, 3, false);
    EXPECT_DOUBLE_EQ(open[0], 1.5);
    EXPECT_DOUBLE_EQ(open[3], 0.0);
    const auto closed = moving_average(v, 3, true);
    EXPECT_DOUBLE_EQ(closed[0], 1.0);
    EXPECT_DOUBLE_EQ(closed[3], 1.0);
    EXPECT_EQ(moving_average(v, 1, true), v);
}

TEST(ControllerConfig, FilterWindowInMillimetres) {
    ControllerConfig c;
    EXPECT_EQ(c.resolved(1.625).height_filter_segments, 3u);
    c.height_filter_window = 4.875;
    EXPECT_EQ(c.resolved(1.625).height_filter_segments, 3u);
    EXPECT_EQ(c.resolved(5.4978).height_filter_segments, 1u);
    c.height_filter_window = 10.0;
    EXPECT_EQ(c.resolved(1.625).height_filter_segments, 5u);
}

TEST(ControllerConfig, Validation) {
    ControllerConfig c;
    EXPECT_NO_THROW(c.validate());
    c.v_min = 20.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.dh_desired = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.tick_rate = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_THROW(run_mode_from_string("closed"), ConfigError);
    for (auto m : {RunMode::open_loop, RunMode::stepwise, RunMode::continuous, RunMode::replay})
        EXPECT_EQ(run_mode_from_string(to_string(m)), m);
}

TEST(RunOpenloop, QuietPlantIsFlat) {
    auto s = wall_setup(5);
    quiet_plant(s);
    const auto r = run_openloop(s, 5.0);
    ASSERT_EQ(r.layers.size(), 5u);
    for (const auto& l : r.layers) {
        EXPECT_LT(l.metrics.std_with_edge, 1e-12);
        EXPECT_LT(l.metrics.std_without_edge, 1e-12);
    }
}

TEST(RunOpenloop, ErrorAccumulatesAndHeightAddsUp) {
    const auto s = wall_setup(12);
    const auto r = run_openloop(s, 5.0);
    EXPECT_GT(trend_slope(r.std_with_edge()), 0.0);
    for (const auto& l : r.layers)
        for (double v : l.speeds.speeds) EXPECT_EQ(v, 5.0);
    // Interior mean grows by f(5) per layer; the droop at the ends pulls the full mean down.
    const auto& truth = r.layers.back().truth;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (truth.center(i) > 20.0 && truth.center(i) < 45.0) {
            sum += truth.heights[i];
            ++n;
        }
    EXPECT_NEAR(sum / static_cast<double>(n), 12.0 * f_deposition(s.model(), 5.0), 0.1);
}

TEST(RunOpenloop, SpeedOutsideLimitsRejected) {
    EXPECT_THROW(run_openloop(wall_setup(2), 25.0), ConfigError);
}

TEST(RunStepwise, BeatsOpenLoopOnPairedSeeds) {
    const auto s = wall_setup(10);
    const auto open = run_openloop(s, nominal_speed(s.model(), s.controller));
    const auto closed = run_stepwise(s);
    ASSERT_TRUE(closed.complete);
    EXPECT_LT(summarize(closed).mean_std_with_edge, summarize(open).mean_std_with_edge);
    EXPECT_LT(summarize(closed).mean_std_without_edge, summarize(open).mean_std_without_edge);
}

TEST(RunStepwise, TargetsFollowTheRecursion) {
    const auto r = run_stepwise(wall_setup(4));
    for (std::size_t i = 0; i + 1 < r.layers.size(); ++i) {
        const auto& t = r.layers[i].target.value();
        EXPECT_EQ(t.target, t.layer_height + 2.34);
        EXPECT_EQ(r.layers[i + 1].speeds.layer, i + 1);
    }
    EXPECT_FALSE(r.layers.back().target.has_value());
    for (const auto& l : r.layers)
        for (double v : l.speeds.speeds) {
            EXPECT_GE(v, 2.0);
            EXPECT_LE(v, 20.0);
        }
}

TEST(RunStepwise, QuietPlantSettlesOnNominalSpeed) {
    auto s = wall_setup(4);
    quiet_plant(s);
    s.scanner = s.scanner.exact();
    const auto r = run_stepwise(s);
    const double nominal = f_inverse(s.model(), 2.34);
    for (std::size_t i = 1; i < r.layers.size(); ++i)
        for (std::size_t k = 1; k + 1 < r.layers[i].speeds.speeds.size(); ++k)
            EXPECT_NEAR(r.layers[i].speeds.speeds[k], nominal, 0.05) << "layer " << i << " segment " << k;
}

TEST(RunStepwise, DroopOnlyPlantDoesNotDiverge) {
    auto s = wall_setup(12);
    s.disturbance.process_noise_sigma = 0.0;
    const auto r = run_stepwise(s);
    const auto stds = r.std_with_edge();
    for (std::size_t i = 4; i < stds.size(); ++i) EXPECT_LE(stds[i], stds[i - 1] + 0.02) << "layer " << i;
}

TEST(RunStepwise, CoverageFailureAbortsWithPartialRecord) {
    auto s = wall_setup(5);
    s.perception.bin_width = 0.01;
    s.perception.smoothing_window = 0.0;
    const auto r = run_stepwise(s);
    EXPECT_FALSE(r.complete);
    EXPECT_FALSE(r.abort_reason.empty());
    EXPECT_EQ(r.layers.size(), 1u);
    EXPECT_THROW(run_replay(r, 1), ContractViolation);
}

TEST(RunReplay, SameSeedIsBitExact) {
    const auto s = wall_setup(6);
    const auto r = run_stepwise(s);
    const auto replay = run_replay(r, r.plant_seed);
    EXPECT_EQ(replay.final_surface.heights, r.final_surface.heights);
    EXPECT_EQ(replay.source_mode, RunMode::stepwise);
    for (std::size_t i = 0; i < r.layers.size(); ++i)
        EXPECT_EQ(replay.layers[i].metrics.std_with_edge, r.layers[i].metrics.std_with_edge);
}

TEST(RunReplay, NewSeedChangesTheSurface) {
    const auto r = run_stepwise(wall_setup(4));
    const auto replay = run_replay(r, r.plant_seed + 1);
    EXPECT_NE(replay.final_surface.heights, r.final_surface.heights);
}

TEST(RunReplay, SegmentMismatchViolatesContract) {
    auto r = run_stepwise(wall_setup(3));
    r.layers[1].speeds.speeds.pop_back();
    EXPECT_THROW(run_replay(r, 1), ContractViolation);
}

TEST(LookaheadPlanner, FullBufferMatchesStepwiseLaw) {
    ControllerConfig cc;
    cc.dh_desired = 1.8;
    const auto model = interpolate_model(aluminum_preset().models, 160.0);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(9.0, 0.2);
    std::vector<double> h(40);
    for (auto& x : h) x = n(rng);
    LookaheadPlanner planner(40, model, cc);
    for (std::size_t k = 0; k < 40; ++k) planner.store(k, h[k], 5);
    double mean = 0.0;
    for (double x : h) mean += x;
    mean /= 40.0;
    const auto plan = plan_layer_speeds(std::span<const double>(h), mean, 1.8, model, cc, true);
    for (std::size_t k = 0; k < 40; ++k) {
        const auto c = planner.command(k);
        EXPECT_TRUE(c.from_buffer);
        EXPECT_EQ(c.speed, plan.speeds[k]) << "segment " << k;
    }
}

TEST(LookaheadPlanner, PassCountsPutEntriesOnOneHelix) {
    ControllerConfig cc;
    cc.dh_desired = 2.0;
    LookaheadPlanner planner(4, al100, cc);
    EXPECT_FALSE(planner.command(0).from_buffer);
    EXPECT_EQ(planner.command(0).speed, nominal_speed(al100, cc));
    // Segments 0 and 1 were measured one pass later, exactly one layer higher.
    planner.store(0, 12.0, 6);
    planner.store(1, 12.0, 6);
    planner.store(2, 10.0, 5);
    planner.store(3, 10.0, 5);
    const auto c2 = planner.command(2);
    EXPECT_DOUBLE_EQ(c2.target, 12.0);
    EXPECT_DOUBLE_EQ(c2.speed, f_inverse(al100, 2.0));
    EXPECT_DOUBLE_EQ(planner.command(0).target, 14.0);
}

TEST(RunContinuous, AuditAndReplay) {
    const auto s = cylinder_setup(3);
    const auto r = run_continuous(s);
    ASSERT_TRUE(r.complete);
    ASSERT_EQ(r.layers.size(), 3u);
    const auto& a = r.audit.value();
    EXPECT_NEAR(a.lookahead, 109.956, 1e-3);
    EXPECT_NEAR(a.lookahead, std::numbers::pi * 35.0, 1e-12);
    EXPECT_LE(a.max_lag_error, a.max_tick_travel);
    EXPECT_NEAR(a.mean_lag, a.lookahead, a.max_tick_travel);
    EXPECT_GT(a.samples, 0u);
    EXPECT_LT(a.max_delay_error_ticks, 2.0);
    for (const auto& l : r.layers) {
        EXPECT_EQ(l.speeds.speeds.size(), 40u);
        for (double v : l.speeds.speeds) {
            EXPECT_GE(v, 2.0);
            EXPECT_LE(v, 20.0);
        }
    }
    const auto replay = run_replay(r, r.plant_seed);
    EXPECT_EQ(replay.source_mode, RunMode::continuous);
    EXPECT_EQ(replay.final_surface.heights, r.final_surface.heights);
}

TEST(RunContinuous, QuietPlantHoldsNominalSpeed) {
    auto s = cylinder_setup(2);
    quiet_plant(s);
    s.scanner = s.scanner.exact();
    const auto r = run_continuous(s);
    const double nominal = f_inverse(s.model(), 1.8);
    for (const auto& l : r.layers)
        for (double v : l.speeds.speeds) EXPECT_NEAR(v, nominal, 0.05);
    EXPECT_NEAR(r.final_surface.mean(), 3.6, 0.01);
}

TEST(RunContinuous, ConfigErrors) {
    auto s = cylinder_setup(1);
    s.controller.lookahead_distance = 120.0;
    EXPECT_THROW(run_continuous(s), ConfigError);
    auto w = wall_setup(1);
    w.controller.mode = RunMode::continuous;
    EXPECT_THROW(run_continuous(w), ConfigError);
}

TEST(Run, DispatchesOnMode) {
    auto s = wall_setup(2);
    s.controller.mode = RunMode::open_loop;
    EXPECT_EQ(run(s).mode, RunMode::open_loop);
    s.controller.mode = RunMode::stepwise;
    EXPECT_EQ(run(s).mode, RunMode::stepwise);
}
