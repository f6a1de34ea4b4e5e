#pragma once

// Evaluation quantities: per-layer height spread, tracking error, geometry
// error against the reference part, and improvement percentages.
//
// Standard deviations are sample estimates (n - 1 denominator).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "waam/errors.hpp"
#include "waam/geometry.hpp"
#include "waam/perception.hpp"
#include "waam/plant.hpp"

namespace waam {

struct LayerMetrics {
    std::size_t layer = 0;
    double std_with_edge = 0.0;
    double std_without_edge = 0.0;
    double tracking_rmse = 0.0;
};

struct GeometryErrorStats {
    double mean_error = 0.0;
    double max_error = 0.0;
    double argmax_s = 0.0;  // base-path coordinate of the worst sample
    std::vector<double> distances;
};

inline double sample_std(std::span<const double> values) {
    if (values.size() < 2) throw UndefinedStatistic("standard deviation needs at least 2 samples");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (n - 1.0));
}

struct LayerStd {
    double with_edge = 0.0;
    double without_edge = 0.0;
};

/// Spread of the bin heights, and the same with every bin centred within
/// `edge_margin` of an arc event left out. Closed profiles have no edges.
inline LayerStd layer_height_std(const HeightProfile& profile, double edge_margin,
                                 std::span<const double> arc_events) {
    std::vector<double> all, interior;
    for (std::size_t i = 0; i < profile.size(); ++i) {
        if (profile.empty_bin(i)) continue;
        all.push_back(profile.heights[i]);
        const double d = arc_events.empty()
                             ? std::numeric_limits<double>::infinity()
                             : arc_distance(profile.center(i), arc_events, profile.length, profile.closed);
        if (d > edge_margin) interior.push_back(profile.heights[i]);
    }
    if (all.empty()) throw UndefinedStatistic("profile has no measured bins");
    LayerStd out;
    out.with_edge = sample_std(all);
    out.without_edge = arc_events.empty() ? out.with_edge : sample_std(interior);
    return out;
}

inline double tracking_rmse(const HeightProfile& profile, double target) {
    double ss = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < profile.size(); ++i) {
        if (profile.empty_bin(i)) continue;
        const double e = profile.heights[i] - target;
        ss += e * e;
        ++n;
    }
    if (n == 0) throw UndefinedStatistic("profile has no measured bins");
    return std::sqrt(ss / static_cast<double>(n));
}

/// Height the finished part should have at base-path coordinate s. Blades
/// taper: a point s stays covered only while the shrinking layers reach it.
inline double reference_height(const PartSpec& part, double top_height, double s) {
    if (part.kind != PartKind::blade || part.blade.taper_rate == 0.0) return top_height;
    const double from_edge = std::min(s, part.blade.base_width - s);
    return std::clamp(2.0 * from_edge / part.blade.taper_rate, 0.0, top_height);
}

/// Per-sample |h(s) - reference(s)| over the whole surface. `top_height` is
/// the nominal finished height (layers x desired layer height).
inline GeometryErrorStats geometry_error(const SurfaceHeightField& surface, const PartSpec& part,
                                         double top_height) {
    GeometryErrorStats out;
    out.distances.resize(surface.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < surface.size(); ++j) {
        const double s = surface.position(j);
        const double d = std::abs(surface.heights[j] - reference_height(part, top_height, s));
        out.distances[j] = d;
        sum += d;
        if (d > out.max_error) {
            out.max_error = d;
            out.argmax_s = s;
        }
    }
    out.mean_error = sum / static_cast<double>(surface.size());
    return out;
}

enum class PercentRounding { toward_zero, nearest };

/// Relative reduction from baseline to corrected, in integer percent.
inline int improvement_pct(double baseline, double corrected,
                           PercentRounding rounding = PercentRounding::toward_zero) {
    if (!(baseline > 0.0)) throw UndefinedStatistic("improvement needs a baseline > 0");
    const double pct = (baseline - corrected) / baseline * 100.0;
    // Absorb representation error such as 59.999999999 for an exact 60.
    const double nudged = pct + std::copysign(1e-9, pct);
    return static_cast<int>(rounding == PercentRounding::nearest ? std::round(pct) : std::trunc(nudged));
}

/// Binned ground truth over a layer path: the mean of the surface samples in
/// each bin. Used to score runs independently of sensing.
inline HeightProfile truth_profile(const SurfaceHeightField& surface, double s_offset,
                                   double length, bool closed, double bin_width) {
    auto profile = HeightProfile::bins_for(length, bin_width, closed);
    std::vector<double> sums(profile.size(), 0.0);
    for (std::size_t j = 0; j < surface.size(); ++j) {
        const double u = surface.position(j) - s_offset;
        if (!closed && (u < -1e-9 || u > length + 1e-9)) continue;
        const auto b = profile.bin_of(std::clamp(u, 0.0, length));
        sums[b] += surface.heights[j];
        ++profile.counts[b];
    }
    for (std::size_t i = 0; i < profile.size(); ++i)
        if (profile.counts[i] > 0) profile.heights[i] = sums[i] / static_cast<double>(profile.counts[i]);
    return profile;
}

inline double mean_of(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

/// Least-squares slope of values against their index.
inline double trend_slope(std::span<const double> values) {
    const double n = static_cast<double>(values.size());
    if (values.size() < 2) return 0.0;
    const double xm = (n - 1.0) / 2.0;
    const double ym = mean_of(values);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double dx = static_cast<double>(i) - xm;
        sxy += dx * (values[i] - ym);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

}  // namespace waam
