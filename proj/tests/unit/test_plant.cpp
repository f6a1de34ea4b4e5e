#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "waam/plant.hpp"

using namespace waam;

namespace {

const DepositionModel al100{100.0, -0.62, 1.85, 0.27};

DisturbanceConfig quiet() { return DisturbanceConfig{}; }

LayerPlan wall_layer(std::size_t index = 0) { return plan_layer(PartSpec{}, index, 2.34, 40); }

SpeedProfile uniform(const LayerPlan& layer, double v) {
    return {layer.index, std::vector<double>(layer.segments.size(), v)};
}

}  // namespace

TEST(Deposition, PaperOperatingPoint) {
    EXPECT_NEAR(f_deposition(al100, 5.0), 2.345, 0.001);
    EXPECT_NEAR(f_deposition(al100, 1.0), 6.3598, 1e-4);
}

TEST(Deposition, ZeroSlopeIsConstant) {
    const DepositionModel flat{100.0, 0.0, std::log(2.0), 0.0};
    for (double v : {0.5, 2.0, 20.0}) EXPECT_NEAR(f_deposition(flat, v), 2.0, 1e-12);
    EXPECT_THROW(f_inverse(flat, 2.0), NonInvertibleModel);
}

TEST(Deposition, DomainErrors) {
    EXPECT_THROW(f_deposition(al100, 0.0), DomainError);
    EXPECT_THROW(f_deposition(al100, -1.0), DomainError);
    EXPECT_THROW(f_inverse(al100, 0.0), DomainError);
    EXPECT_THROW(f_inverse(al100, -2.0), DomainError);
}

TEST(Inverse, Examples) {
    EXPECT_NEAR(f_inverse(al100, 2.34), 5.016, 1e-3);
    EXPECT_NEAR(f_inverse(al100, f_deposition(al100, 7.0)), 7.0, 1e-9);
    // 150 ipm column, dh = 1.80: exp((ln 1.8 - 1.37) / -0.44).
    const DepositionModel al150{150.0, -0.44, 1.37, 0.18};
    EXPECT_NEAR(f_inverse(al150, 1.80), 5.91657, 1e-4);
}

TEST(Inverse, RoundtripProperty) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> a(-0.7, -0.3), b(0.5, 2.5), dh(0.5, 7.0);
    for (int i = 0; i < 2000; ++i) {
        const DepositionModel m{100.0, a(rng), b(rng), 0.0};
        const double h = dh(rng);
        EXPECT_NEAR(f_deposition(m, f_inverse(m, h)), h, 1e-9);
    }
}

TEST(Deposition, MonotoneDecreasingProperty) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> a(-0.9, -0.1), v(0.5, 25.0);
    for (int i = 0; i < 2000; ++i) {
        const DepositionModel m{100.0, a(rng), 1.0, 0.0};
        double v1 = v(rng), v2 = v(rng);
        if (v1 == v2) continue;
        if (v1 > v2) std::swap(v1, v2);
        EXPECT_GT(f_deposition(m, v1), f_deposition(m, v2));
    }
}

TEST(Deposition, VolumeBalanceWithHalfSlope) {
    const DepositionModel m{200.0, -0.5, std::log(1.35) + 0.5 * std::log(7.0), 0.0};
    const double c = f_deposition(m, 2.0) * f_deposition(m, 2.0) * 2.0;
    for (double v = 2.0; v <= 20.0; v += 0.25) {
        const double h = f_deposition(m, v);
        EXPECT_NEAR(h * h * v, c, 1e-9);
    }
}

TEST(PhysicalModel, MatchesVolumeBalance) {
    const PhysicalBeadParams p;
    const auto m = physical_model(p, 100.0);
    EXPECT_DOUBLE_EQ(m.a, -0.5);
    for (double v : {2.0, 5.0, 13.0}) EXPECT_NEAR(f_deposition(m, v), physical_deposition_height(p, v), 1e-12);
}

TEST(BeadWidth, Examples) {
    EXPECT_NEAR(bead_width(PhysicalBeadParams{}, 2.34), 3.978, 1e-12);
    EXPECT_EQ(bead_width(PhysicalBeadParams{}, 0.0), 0.0);
    EXPECT_EQ(bead_width(PhysicalBeadParams{1.0, 1.0, 1.0}, 1.0), 1.0);
}

TEST(MaterialPresets, TablesAndSteelAssumption) {
    const auto al = aluminum_preset();
    ASSERT_EQ(al.models.size(), 6u);
    for (std::size_t i = 1; i < al.models.size(); ++i) EXPECT_LT(al.models[i - 1].feed_rate, al.models[i].feed_rate);
    EXPECT_EQ(al.models[0], al100);
    const auto steel = steel_preset();
    ASSERT_EQ(steel.models.size(), 1u);
    EXPECT_NEAR(steel.models[0].b, 1.2731, 1e-4);
    EXPECT_NEAR(f_inverse(steel.models[0], 1.35), 7.0, 1e-9);
    EXPECT_LT(steel.disturbance.edge_droop_depth, al.disturbance.edge_droop_depth);
    EXPECT_THROW(material_preset("titanium"), ConfigError);
}

TEST(Surface, GridCoversPath) {
    const auto open = SurfaceHeightField::flat(65.0, 0.1, false);
    EXPECT_EQ(open.size(), 651u);
    EXPECT_DOUBLE_EQ(open.position(650), 65.0);
    const auto closed = SurfaceHeightField::flat(2.0 * std::numbers::pi * 35.0, 0.1, true);
    EXPECT_EQ(closed.size(), 2199u);
    EXPECT_LT(closed.position(closed.size() - 1), closed.length);
    EXPECT_THROW(SurfaceHeightField::flat(0.0, 0.1, false), DomainError);
}

TEST(Surface, InterpolationWrapsWhenClosed) {
    auto s = SurfaceHeightField::flat(10.0, 1.0, true);
    for (std::size_t j = 0; j < s.size(); ++j) s.heights[j] = static_cast<double>(j);
    EXPECT_DOUBLE_EQ(s.height_at(2.5), 2.5);
    EXPECT_DOUBLE_EQ(s.height_at(9.5), 4.5);  // halfway between 9 and 0
    EXPECT_DOUBLE_EQ(s.height_at(12.0), 2.0);
    auto o = SurfaceHeightField::flat(10.0, 1.0, false);
    for (std::size_t j = 0; j < o.size(); ++j) o.heights[j] = static_cast<double>(j);
    EXPECT_DOUBLE_EQ(o.height_at(-1.0), 0.0);
    EXPECT_DOUBLE_EQ(o.height_at(11.0), 10.0);
}

TEST(DepositLayer, NoiselessConstantSpeedAddsModelHeight) {
    const auto layer = wall_layer();
    const auto surface = SurfaceHeightField::flat(65.0, 0.1, false);
    const auto r = deposit_layer(surface, layer, uniform(layer, 5.0), al100, quiet(), default_arc_events(layer));
    for (double h : r.surface.heights) EXPECT_NEAR(h, f_deposition(al100, 5.0), 1e-12);
    EXPECT_NEAR(r.bead.mean_added, 2.345, 1e-3);
    EXPECT_EQ(r.surface.layers, 1u);
}

TEST(DepositLayer, DroopAtArcOnPoint) {
    const auto layer = wall_layer();
    const auto surface = SurfaceHeightField::flat(65.0, 0.1, false);
    auto dist = quiet();
    dist.edge_droop_depth = 1.0;
    dist.edge_droop_decay = 2.0;
    const auto r = deposit_layer(surface, layer, uniform(layer, 5.0), al100, dist, default_arc_events(layer));
    const double mid = r.surface.heights[r.surface.size() / 2];
    EXPECT_NEAR(mid - r.surface.heights.front(), 1.0, 1e-6);
    EXPECT_NEAR(mid - r.surface.heights.back(), 1.0, 1e-6);
    EXPECT_NEAR(mid - r.surface.heights[20], std::exp(-1.0), 1e-6);
}

TEST(DepositLayer, DroopNeverCarvesBelowPrevious) {
    const auto layer = wall_layer();
    auto surface = SurfaceHeightField::flat(65.0, 0.1, false, 3.0);
    auto dist = quiet();
    dist.edge_droop_depth = 10.0;
    dist.edge_droop_decay = 2.0;
    const auto r = deposit_layer(surface, layer, uniform(layer, 20.0), al100, dist, default_arc_events(layer));
    for (std::size_t j = 0; j < surface.size(); ++j) EXPECT_GE(r.surface.heights[j], surface.heights[j]);
    EXPECT_EQ(r.surface.heights.front(), 3.0);
}

TEST(DepositLayer, NoRemovalPropertyWithNoiseAndSmoothing) {
    auto dist = quiet();
    dist.process_noise_sigma = 0.3;
    dist.noise_correlation_length = 2.0;
    dist.flow_smoothing_radius = 2.0;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> v(2.0, 20.0);
    auto surface = SurfaceHeightField::flat(65.0, 0.1, false);
    for (std::size_t i = 0; i < 8; ++i) {
        dist.seed = i;
        const auto layer = wall_layer(i);
        SpeedProfile sp{i, {}};
        for (std::size_t k = 0; k < 40; ++k) sp.speeds.push_back(v(rng));
        const auto r = deposit_layer(surface, layer, sp, al100, dist, default_arc_events(layer));
        for (std::size_t j = 0; j < surface.size(); ++j) ASSERT_GE(r.surface.heights[j], surface.heights[j]);
        for (double h : r.surface.heights) ASSERT_GE(h, 0.0);
        surface = r.surface;
    }
}

TEST(DepositLayer, SameSeedIsBitIdentical) {
    auto dist = aluminum_preset().disturbance;
    dist.seed = 42;
    const auto layer = wall_layer();
    const auto surface = SurfaceHeightField::flat(65.0, 0.1, false);
    const auto a = deposit_layer(surface, layer, uniform(layer, 5.0), al100, dist, default_arc_events(layer));
    const auto b = deposit_layer(surface, layer, uniform(layer, 5.0), al100, dist, default_arc_events(layer));
    EXPECT_EQ(a.surface.heights, b.surface.heights);
    dist.seed = 43;
    const auto c = deposit_layer(surface, layer, uniform(layer, 5.0), al100, dist, default_arc_events(layer));
    EXPECT_NE(a.surface.heights, c.surface.heights);
}

TEST(DepositLayer, MissingSegmentSpeedIsContractViolation) {
    const auto layer = wall_layer();
    const auto surface = SurfaceHeightField::flat(65.0, 0.1, false);
    SpeedProfile sp{0, std::vector<double>(39, 5.0)};
    EXPECT_THROW(deposit_layer(surface, layer, sp, al100, quiet(), default_arc_events(layer)), ContractViolation);
}

TEST(DepositLayer, SegmentSpeedsApplyPerSegment) {
    const auto layer = wall_layer();
    const auto surface = SurfaceHeightField::flat(65.0, 0.1, false);
    SpeedProfile sp{0, std::vector<double>(40, 5.0)};
    sp.speeds[10] = 2.0;
    const auto r = deposit_layer(surface, layer, sp, al100, quiet(), default_arc_events(layer));
    const auto j = static_cast<std::size_t>(std::lround(10.5 * 1.625 / 0.1));
    EXPECT_NEAR(r.surface.heights[j], f_deposition(al100, 2.0), 1e-12);
    EXPECT_NEAR(r.surface.heights[j + 40], f_deposition(al100, 5.0), 1e-12);
}

TEST(ProcessNoise, UnitVarianceAndCorrelated) {
    auto surface = SurfaceHeightField::flat(5000.0, 0.1, false);
    DisturbanceConfig dist;
    dist.process_noise_sigma = 0.05;
    dist.noise_correlation_length = 3.0;
    dist.seed = 9;
    const auto eta = layer_process_noise(surface, dist, 0);
    double mean = 0.0, var = 0.0, lag = 0.0;
    for (double e : eta) mean += e;
    mean /= static_cast<double>(eta.size());
    for (std::size_t i = 0; i < eta.size(); ++i) {
        var += (eta[i] - mean) * (eta[i] - mean);
        if (i + 10 < eta.size()) lag += (eta[i] - mean) * (eta[i + 10] - mean);
    }
    var /= static_cast<double>(eta.size());
    lag /= static_cast<double>(eta.size() - 10);
    EXPECT_NEAR(std::sqrt(var), 0.05, 0.005);
    // Gaussian kernel of sigma 3 mm gives autocorrelation exp(-d^2 / (4 sigma^2)) at d = 1 mm.
    EXPECT_NEAR(lag / var, std::exp(-1.0 / 36.0), 0.05);
    // Layers draw independent fields.
    EXPECT_NE(eta, layer_process_noise(surface, dist, 1));
}

TEST(ArcDistance, OpenAndClosed) {
    const std::vector<double> events{0.0, 65.0};
    EXPECT_DOUBLE_EQ(arc_distance(3.0, events, 65.0, false), 3.0);
    EXPECT_DOUBLE_EQ(arc_distance(60.0, events, 65.0, false), 5.0);
    const std::vector<double> seam{0.0};
    EXPECT_DOUBLE_EQ(arc_distance(95.0, seam, 100.0, true), 5.0);
    EXPECT_TRUE(std::isinf(arc_distance(1.0, {}, 100.0, true)));
}

TEST(SegmentOf, Boundaries) {
    EXPECT_EQ(segment_of(0.0, 65.0, 40), 0u);
    EXPECT_EQ(segment_of(1.625, 65.0, 40), 1u);
    EXPECT_EQ(segment_of(65.0, 65.0, 40), 39u);
    EXPECT_EQ(segment_of(-1.0, 65.0, 40), 0u);
}

TEST(Disturbance, NegativeParametersRejected) {
    DisturbanceConfig d;
    d.edge_droop_depth = -0.1;
    EXPECT_THROW(d.validate(), ConfigError);
}
