#pragma once

// Ground-truth deposition plant.
//
// The deposition law is the log-log power law ln(dh) = a ln(v) + b at a fixed
// wire feed rate. On top of it the plant applies the disturbances that make
// open-loop printing drift: multiplicative process noise, a droop near arc
// on/off points, and a weak flow-smoothing of the fresh surface.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "waam/errors.hpp"
#include "waam/geometry.hpp"
#include "waam/random.hpp"

namespace waam {

struct DepositionModel {
    double feed_rate = 100.0;  // wire feed rate, inch/min
    double a = -0.5;           // slope in log-log space
    double b = 0.0;            // intercept, ln(mm)
    double rmse = 0.0;         // fit residual, mm

    friend bool operator==(const DepositionModel&, const DepositionModel&) = default;
};

/// Height deposited by one pass at torch speed v (mm/s).
inline double f_deposition(const DepositionModel& model, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("torch speed must be > 0");
    return std::exp(model.a * std::log(v) + model.b);
}

/// Torch speed that deposits dh in one pass.
inline double f_inverse(const DepositionModel& model, double dh) {
    if (!(dh > 0.0) || !std::isfinite(dh)) throw DomainError("deposition height must be > 0");
    if (model.a == 0.0) throw NonInvertibleModel("deposition model with zero slope has no inverse");
    return std::exp((std::log(dh) - model.b) / model.a);
}

/// Wire and bead constants of the volume balance S_w v_MR = S_B v, with the
/// bead cross-section S_B taken as c * dh^2.
struct PhysicalBeadParams {
    double wire_section = 1.131;  // S_w, mm^2 (1.2 mm wire)
    double melt_rate = 42.33;     // v_MR, mm/s (100 ipm)
    double width_ratio = 1.7;     // c, bead width / bead height

    void validate() const {
        if (!(wire_section > 0.0 && melt_rate > 0.0 && width_ratio > 0.0))
            throw ConfigError("bead parameters must be > 0");
    }
};

inline double bead_width(const PhysicalBeadParams& params, double dh) {
    return params.width_ratio * dh;
}

/// Deposition height from the volume balance alone: dh = sqrt(S_w v_MR / (c v)).
inline double physical_deposition_height(const PhysicalBeadParams& params, double v) {
    if (!(v > 0.0)) throw DomainError("torch speed must be > 0");
    return std::sqrt(params.wire_section * params.melt_rate / (params.width_ratio * v));
}

/// The (a, b) that the volume balance implies: a = -1/2, b = ln(S_w v_MR / c) / 2.
inline DepositionModel physical_model(const PhysicalBeadParams& params, double feed_rate) {
    return {feed_rate, -0.5,
            0.5 * std::log(params.wire_section * params.melt_rate / params.width_ratio), 0.0};
}

/// Top-surface height h(s) on a uniform grid along the base path.
/// Open paths sample both ends; closed paths sample [0, length) and wrap.
struct SurfaceHeightField {
    double length = 0.0;
    double pitch = 0.1;
    bool closed = false;
    std::size_t layers = 0;
    std::vector<double> heights;

    static SurfaceHeightField flat(double length, double nominal_pitch, bool closed,
                                   double height = 0.0) {
        if (!(length > 0.0) || !(nominal_pitch > 0.0))
            throw DomainError("surface length and pitch must be > 0");
        const auto intervals =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(length / nominal_pitch)));
        SurfaceHeightField field;
        field.length = length;
        field.pitch = length / static_cast<double>(intervals);
        field.closed = closed;
        field.heights.assign(closed ? intervals : intervals + 1, height);
        return field;
    }

    [[nodiscard]] std::size_t size() const { return heights.size(); }
    [[nodiscard]] double position(std::size_t j) const { return pitch * static_cast<double>(j); }

    /// Linear interpolation; open fields clamp at the ends, closed fields wrap.
    [[nodiscard]] double height_at(double s) const {
        const auto n = heights.size();
        if (closed) {
            s = std::fmod(s, length);
            if (s < 0.0) s += length;
            const double x = s / pitch;
            auto j = static_cast<std::size_t>(x);
            if (j >= n) j = n - 1;
            const double t = x - static_cast<double>(j);
            return heights[j] * (1.0 - t) + heights[(j + 1) % n] * t;
        }
        if (s <= 0.0) return heights.front();
        if (s >= length) return heights.back();
        const double x = s / pitch;
        auto j = static_cast<std::size_t>(x);
        if (j >= n - 1) return heights.back();
        const double t = x - static_cast<double>(j);
        return heights[j] * (1.0 - t) + heights[j + 1] * t;
    }

    [[nodiscard]] double mean() const {
        return std::accumulate(heights.begin(), heights.end(), 0.0) /
               static_cast<double>(heights.size());
    }
};

struct DisturbanceConfig {
    double process_noise_sigma = 0.0;    // relative std of the deposited height
    double noise_correlation_length = 0.0;  // mm
    double edge_droop_depth = 0.0;       // D, mm
    double edge_droop_decay = 1.0;       // lambda, mm
    double flow_smoothing_radius = 0.0;  // mm
    std::uint64_t seed = 0;

    void validate() const {
        if (process_noise_sigma < 0.0 || noise_correlation_length < 0.0 ||
            edge_droop_depth < 0.0 || edge_droop_decay < 0.0 || flow_smoothing_radius < 0.0)
            throw ConfigError("disturbance parameters must be >= 0");
        if (edge_droop_depth > 0.0 && !(edge_droop_decay > 0.0))
            throw ConfigError("edge droop decay must be > 0 when droop is enabled");
    }
};

struct MaterialPreset {
    std::string name;
    std::vector<DepositionModel> models;  // sorted by feed rate
    DisturbanceConfig disturbance;
    PhysicalBeadParams physical;
};

/// ER4043 aluminium. Model table as identified on the hardware testbed.
inline MaterialPreset aluminum_preset() {
    MaterialPreset preset;
    preset.name = "ER4043-aluminum";
    preset.models = {
        {100.0, -0.62, 1.85, 0.27}, {110.0, -0.43, 1.23, 0.12}, {130.0, -0.43, 1.63, 0.13},
        {150.0, -0.44, 1.37, 0.18}, {170.0, -0.45, 1.40, 0.21}, {240.0, -0.46, 1.15, 0.10},
    };
    preset.disturbance.process_noise_sigma = 0.01;
    preset.disturbance.noise_correlation_length = 6.0;
    preset.disturbance.edge_droop_depth = 0.9;
    preset.disturbance.edge_droop_decay = 2.0;
    preset.disturbance.flow_smoothing_radius = 1.0;
    preset.physical = {1.131, 42.33, 1.7};
    return preset;
}

/// ER70S-6 steel. No identified table exists; the single 200 ipm entry is the
/// volume-balance slope a = -0.5 pinned to 1.35 mm at 7 mm/s.
inline MaterialPreset steel_preset() {
    MaterialPreset preset;
    preset.name = "ER70S-6-steel";
    preset.models = {{200.0, -0.5, std::log(1.35) + 0.5 * std::log(7.0), 0.0}};
    // Steel beads are calmer at the arc ends but rougher on a short scale
    // the segment-wise correction cannot follow.
    preset.disturbance.process_noise_sigma = 0.15;
    preset.disturbance.noise_correlation_length = 0.3;
    preset.disturbance.edge_droop_depth = 0.36;
    preset.disturbance.edge_droop_decay = 2.0;
    preset.disturbance.flow_smoothing_radius = 1.0;
    preset.physical = {0.785, 84.67, 1.7};
    return preset;
}

inline MaterialPreset material_preset(const std::string& name) {
    if (name == "ER4043-aluminum" || name == "aluminum") return aluminum_preset();
    if (name == "ER70S-6-steel" || name == "steel") return steel_preset();
    throw ConfigError("unknown material preset '" + name + "'");
}

/// Per-layer, per-segment torch speeds.
struct SpeedProfile {
    std::size_t layer = 0;
    std::vector<double> speeds;  // mm/s, one per segment
};

/// What one layer actually added at each surface sample.
struct BeadRecord {
    std::vector<double> added;
    double mean_added = 0.0;
};

struct DepositResult {
    SurfaceHeightField surface;
    BeadRecord bead;
};

/// Segment holding layer-local coordinate u on a path of `length` split into
/// `n` uniform segments.
inline std::size_t segment_of(double u, double length, std::size_t n) {
    if (u <= 0.0) return 0;
    const auto k = static_cast<std::size_t>(u / (length / static_cast<double>(n)));
    return std::min(k, n - 1);
}

/// Distance from layer-local coordinate u to the nearest arc event.
inline double arc_distance(double u, std::span<const double> events, double length, bool closed) {
    double best = std::numeric_limits<double>::infinity();
    for (double e : events) {
        double d = std::abs(u - e);
        if (closed) {
            d = std::fmod(d, length);
            d = std::min(d, length - d);
        }
        best = std::min(best, d);
    }
    return best;
}

/// Gain of one surface sample: nominal height times (1 + noise), minus droop,
/// never negative.
inline double point_gain(double nominal, double relative_noise, double droop) {
    return std::max(0.0, nominal * (1.0 + relative_noise) - droop);
}

/// Relative process noise for one layer; depends only on the seed, the layer
/// index and the grid, so paired runs see identical disturbances.
inline std::vector<double> layer_process_noise(const SurfaceHeightField& surface,
                                               const DisturbanceConfig& dist, std::size_t layer) {
    if (dist.process_noise_sigma == 0.0) return std::vector<double>(surface.size(), 0.0);
    auto rng = make_rng(dist.seed, layer);
    auto eta = correlated_noise(rng, surface.size(), surface.pitch, dist.noise_correlation_length,
                                surface.closed);
    for (auto& e : eta) e *= dist.process_noise_sigma;
    return eta;
}

/// Tent-kernel moving average over samples [begin, end). Open spans truncate
/// and renormalise the kernel at their ends; closed fields wrap.
inline void flow_smooth(std::vector<double>& h, std::size_t begin, std::size_t end, double radius,
                        double pitch, bool closed) {
    const auto half = static_cast<std::size_t>(std::floor(radius / pitch + 1e-9));
    if (half == 0 || end <= begin + 1) return;
    const auto n = h.size();
    const std::vector<double> src(h);
    const auto m = static_cast<double>(half + 1);
    for (std::size_t i = begin; i < end; ++i) {
        double acc = 0.0;
        double wsum = 0.0;
        for (std::size_t d = 0; d <= 2 * half; ++d) {
            const auto off = static_cast<std::ptrdiff_t>(d) - static_cast<std::ptrdiff_t>(half);
            const double w = m - static_cast<double>(std::abs(off));
            auto idx = static_cast<std::ptrdiff_t>(i) + off;
            if (closed) {
                idx = ((idx % static_cast<std::ptrdiff_t>(n)) + static_cast<std::ptrdiff_t>(n)) %
                      static_cast<std::ptrdiff_t>(n);
            } else if (idx < static_cast<std::ptrdiff_t>(begin) ||
                       idx >= static_cast<std::ptrdiff_t>(end)) {
                continue;
            }
            acc += w * src[static_cast<std::size_t>(idx)];
            wsum += w;
        }
        h[i] = acc / wsum;
    }
}

/// Surface samples covered by a layer: [first, last) indices.
struct SampleSpan {
    std::size_t first = 0;
    std::size_t last = 0;
};

inline SampleSpan layer_span(const SurfaceHeightField& surface, const LayerPlan& layer) {
    if (surface.closed) return {0, surface.size()};
    constexpr double tol = 1e-9;
    const double lo = layer.s_offset - tol;
    const double hi = layer.s_offset + layer.path.arc_length + tol;
    SampleSpan span{surface.size(), 0};
    for (std::size_t j = 0; j < surface.size(); ++j) {
        const double s = surface.position(j);
        if (s >= lo && s <= hi) {
            span.first = std::min(span.first, j);
            span.last = j + 1;
        }
    }
    if (span.last <= span.first) throw GeometryError("layer does not overlap the surface grid");
    return span;
}

/// Closing step of a layer: flow smoothing over the layer span, then no
/// sample may end below where it started.
inline void finish_layer(SurfaceHeightField& surface, const std::vector<double>& previous,
                         SampleSpan span, const DisturbanceConfig& dist) {
    flow_smooth(surface.heights, span.first, span.last, dist.flow_smoothing_radius, surface.pitch,
                surface.closed);
    for (std::size_t j = span.first; j < span.last; ++j)
        surface.heights[j] = std::max(surface.heights[j], previous[j]);
    ++surface.layers;
}

/// Deposit one layer. `arc_events` are layer-local arc-length coordinates of
/// arc ignition/extinction.
inline DepositResult deposit_layer(const SurfaceHeightField& surface, const LayerPlan& layer,
                                   const SpeedProfile& speeds, const DepositionModel& model,
                                   const DisturbanceConfig& dist,
                                   std::span<const double> arc_events) {
    const auto n_seg = layer.segments.size();
    if (n_seg == 0) throw ContractViolation("layer has no segments");
    if (speeds.speeds.size() != n_seg)
        throw ContractViolation("speed profile has " + std::to_string(speeds.speeds.size()) +
                                " entries for " + std::to_string(n_seg) + " segments");
    std::vector<double> nominal(n_seg);
    for (std::size_t k = 0; k < n_seg; ++k) nominal[k] = f_deposition(model, speeds.speeds[k]);

    const auto span = layer_span(surface, layer);
    const auto eta = layer_process_noise(surface, dist, surface.layers);
    const double length = layer.path.arc_length;

    DepositResult result{surface, {}};
    auto& h = result.surface.heights;
    for (std::size_t j = span.first; j < span.last; ++j) {
        const double u = std::clamp(surface.position(j) - layer.s_offset, 0.0, length);
        double droop = 0.0;
        if (dist.edge_droop_depth > 0.0 && !arc_events.empty())
            droop = dist.edge_droop_depth *
                    std::exp(-arc_distance(u, arc_events, length, surface.closed) /
                             dist.edge_droop_decay);
        h[j] += point_gain(nominal[segment_of(u, length, n_seg)], eta[j], droop);
    }
    finish_layer(result.surface, surface.heights, span, dist);

    result.bead.added.resize(h.size());
    for (std::size_t j = 0; j < h.size(); ++j) result.bead.added[j] = h[j] - surface.heights[j];
    double sum = 0.0;
    for (std::size_t j = span.first; j < span.last; ++j) sum += result.bead.added[j];
    result.bead.mean_added = sum / static_cast<double>(span.last - span.first);
    return result;
}

/// Arc events of a layer: both ends of an open path, none for a closed path
/// (the arc stays lit around a contour).
inline std::vector<double> default_arc_events(const LayerPlan& layer) {
    if (layer.path.closed) return {};
    return {0.0, layer.path.arc_length};
}

}  // namespace waam
