#pragma once

// Point cloud -> top-surface height profile -> per-segment mean heights.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "waam/errors.hpp"
#include "waam/geometry.hpp"
#include "waam/scansim.hpp"
#include "waam/spatial_grid.hpp"

namespace waam {

struct PerceptionConfig {
    std::size_t k_neighbors = 16;
    double sigma_mult = 2.0;
    double cluster_eps = 1.0;      // mm
    std::size_t min_cluster_points = 30;
    double bin_width = 0.5;        // mm
    double top_quantile = 0.95;
    double smoothing_window = 3.0; // mm
    double max_empty_fraction = 0.2;

    void validate() const {
        if (k_neighbors < 1) throw ConfigError("k_neighbors must be >= 1");
        if (!(cluster_eps > 0.0)) throw ConfigError("cluster eps must be > 0");
        if (!(bin_width > 0.0)) throw ConfigError("bin width must be > 0");
        if (!(top_quantile >= 0.0 && top_quantile <= 1.0)) throw ConfigError("top quantile must be in [0, 1]");
    }
};

/// Uniform bins along the path. A bin with count 0 is empty and its height is NaN.
struct HeightProfile {
    double length = 0.0;
    double bin_width = 0.0;
    bool closed = false;
    std::vector<double> heights;
    std::vector<std::size_t> counts;

    [[nodiscard]] std::size_t size() const { return heights.size(); }
    [[nodiscard]] bool empty_bin(std::size_t i) const { return counts[i] == 0; }
    [[nodiscard]] double center(std::size_t i) const { return bin_width * (static_cast<double>(i) + 0.5); }

    static HeightProfile bins_for(double length, double nominal_width, bool closed) {
        if (!(nominal_width > 0.0)) throw DomainError("bin width must be > 0");
        const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(length / nominal_width)));
        HeightProfile p;
        p.length = length;
        p.bin_width = length / static_cast<double>(n);
        p.closed = closed;
        p.heights.assign(n, std::numeric_limits<double>::quiet_NaN());
        p.counts.assign(n, 0);
        return p;
    }

    [[nodiscard]] std::size_t bin_of(double s) const {
        if (closed) {
            s = std::fmod(s, length);
            if (s < 0.0) s += length;
        }
        if (s <= 0.0) return 0;
        return std::min(static_cast<std::size_t>(s / bin_width), heights.size() - 1);
    }

    /// Mean over non-empty bins.
    [[nodiscard]] double mean() const {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < heights.size(); ++i)
            if (counts[i] > 0) {
                sum += heights[i];
                ++n;
            }
        return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
    }

    [[nodiscard]] double empty_fraction() const {
        const auto empty = std::count(counts.begin(), counts.end(), std::size_t{0});
        return static_cast<double>(empty) / static_cast<double>(counts.size());
    }
};

struct SegmentMeasurement {
    std::size_t index = 0;
    double mean_height = 0.0;
    std::size_t count = 0;   // non-empty bins that contributed
    bool degraded = false;   // carried over from a neighbour
};

struct FilterResult {
    PointCloud cloud;
    bool pass_through = false;  // input too small to filter
};

/// Drop points whose mean distance to their k nearest neighbours exceeds the
/// cloud-wide mean of that statistic by more than sigma_mult standard deviations.
inline FilterResult statistical_outlier_removal(const PointCloud& cloud, std::size_t k_neighbors,
                                                double sigma_mult) {
    if (k_neighbors < 1) throw DomainError("k_neighbors must be >= 1");
    if (cloud.size() < k_neighbors + 1) return {cloud, !cloud.empty()};
    // Cell sized to the typical neighbour spacing of a laser line cloud.
    SpatialGrid grid(cloud.points, 0.5);
    std::vector<double> stat(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) stat[i] = grid.mean_knn_distance(i, k_neighbors);
    const double n = static_cast<double>(stat.size());
    const double mean = std::accumulate(stat.begin(), stat.end(), 0.0) / n;
    double var = 0.0;
    for (double d : stat) var += (d - mean) * (d - mean);
    const double sd = std::sqrt(var / (n - 1.0));
    const double threshold = mean + sigma_mult * sd;
    std::vector<std::size_t> keep;
    keep.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (stat[i] <= threshold) keep.push_back(i);
    return {cloud.select(keep), false};
}

/// Connected components of the eps-neighbourhood graph; only the largest
/// survives. Equal sizes resolve to the component holding the lowest index.
inline PointCloud cluster_outlier_removal(const PointCloud& cloud, double eps,
                                          std::size_t min_points) {
    if (!(eps > 0.0)) throw DomainError("cluster eps must be > 0");
    if (cloud.empty()) throw EmptyResultError("no cluster in an empty cloud");
    const auto n = cloud.size();
    SpatialGrid grid(cloud.points, eps);
    constexpr auto unlabeled = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> label(n, unlabeled);
    std::vector<std::size_t> sizes;
    std::vector<std::uint32_t> stack, neighbors;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (label[seed] != unlabeled) continue;
        const auto id = static_cast<std::uint32_t>(sizes.size());
        sizes.push_back(0);
        label[seed] = id;
        stack.assign(1, static_cast<std::uint32_t>(seed));
        while (!stack.empty()) {
            const auto i = stack.back();
            stack.pop_back();
            ++sizes[id];
            grid.radius_neighbors(i, eps, neighbors);
            for (auto j : neighbors)
                if (label[j] == unlabeled) {
                    label[j] = id;
                    stack.push_back(j);
                }
        }
    }
    // Component ids follow their lowest member index, so the first maximum wins ties.
    const auto best = static_cast<std::uint32_t>(
        std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    if (sizes[best] < min_points)
        throw EmptyResultError("largest cluster has " + std::to_string(sizes[best]) +
                               " points, fewer than " + std::to_string(min_points));
    std::vector<std::size_t> keep;
    keep.reserve(sizes[best]);
    for (std::size_t i = 0; i < n; ++i)
        if (label[i] == best) keep.push_back(i);
    return cloud.select(keep);
}

/// Linear-interpolated quantile (type 7) of an unsorted sample.
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double t = pos - static_cast<double>(lo);
    return values[lo] + (values[hi] - values[lo]) * t;
}

/// Bin points over [0, length) and take the top quantile of each bin's heights.
/// Points outside the range are ignored on open paths.
inline HeightProfile bin_top_heights(const PointCloud& cloud, double length, bool closed,
                                     double bin_width, double top_quantile) {
    auto profile = HeightProfile::bins_for(length, bin_width, closed);
    std::vector<std::vector<double>> members(profile.size());
    for (const auto& p : cloud.points) {
        if (!closed && (p.x < -0.5 * profile.bin_width || p.x > length + 0.5 * profile.bin_width))
            continue;
        members[profile.bin_of(p.x)].push_back(p.z);
    }
    for (std::size_t i = 0; i < profile.size(); ++i) {
        profile.counts[i] = members[i].size();
        if (!members[i].empty()) profile.heights[i] = quantile(std::move(members[i]), top_quantile);
    }
    return profile;
}

inline HeightProfile extract_height_profile(const PointCloud& cloud, const WeldPath& path,
                                            double bin_width, double top_quantile = 0.95,
                                            double max_empty_fraction = 0.2) {
    if (!(bin_width > 0.0)) throw DomainError("bin width must be > 0");
    auto profile = bin_top_heights(cloud, path.arc_length, path.closed, bin_width, top_quantile);
    if (profile.empty_fraction() > max_empty_fraction)
        throw InsufficientCoverage(std::to_string(profile.empty_fraction() * 100.0) +
                                   "% of height bins are empty");
    return profile;
}

/// Centred moving average over non-empty bins. Open profiles truncate the
/// window at their ends, closed profiles wrap. Empty bins stay empty.
inline HeightProfile smooth_along_direction(const HeightProfile& profile, double window) {
    if (window < profile.bin_width - 1e-12) throw DomainError("smoothing window narrower than a bin");
    const auto bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(window / profile.bin_width)));
    const auto half = static_cast<std::ptrdiff_t>((bins - 1) / 2);
    const auto n = static_cast<std::ptrdiff_t>(profile.size());
    HeightProfile out = profile;
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        if (profile.counts[static_cast<std::size_t>(i)] == 0) continue;
        double sum = 0.0;
        std::size_t used = 0;
        for (std::ptrdiff_t d = -half; d <= half; ++d) {
            auto j = i + d;
            if (profile.closed) j = ((j % n) + n) % n;
            else if (j < 0 || j >= n) continue;
            const auto ju = static_cast<std::size_t>(j);
            if (profile.counts[ju] == 0) continue;
            sum += profile.heights[ju];
            ++used;
        }
        out.heights[static_cast<std::size_t>(i)] = sum / static_cast<double>(used);
    }
    return out;
}

/// Mean of the non-empty bins whose centres fall in each segment. An empty
/// segment carries its predecessor's value (or the next valid one for the
/// first segment) and is flagged degraded.
inline std::vector<SegmentMeasurement> segment_means(const HeightProfile& profile,
                                                     std::span<const PathSegment> segments) {
    std::vector<SegmentMeasurement> out(segments.size());
    std::vector<double> sums(segments.size(), 0.0);
    const auto n_seg = segments.size();
    for (std::size_t i = 0; i < profile.size(); ++i) {
        if (profile.counts[i] == 0) continue;
        const auto k = segment_of(profile.center(i), profile.length, n_seg);
        sums[k] += profile.heights[i];
        ++out[k].count;
    }
    for (std::size_t k = 0; k < n_seg; ++k) {
        out[k].index = k;
        if (out[k].count > 0) out[k].mean_height = sums[k] / static_cast<double>(out[k].count);
    }
    const auto first_valid = std::find_if(out.begin(), out.end(), [](const auto& m) { return m.count > 0; });
    if (first_valid == out.end()) throw InsufficientCoverage("every segment is empty");
    double carry = first_valid->mean_height;
    for (auto& m : out) {
        if (m.count > 0) {
            carry = m.mean_height;
        } else {
            m.mean_height = carry;
            m.degraded = true;
        }
    }
    return out;
}

/// Everything the controller needs from one scan of a layer.
struct LayerMeasurement {
    HeightProfile profile;  // after outlier removal and smoothing
    std::vector<SegmentMeasurement> segments;
    double mean_height = 0.0;
    std::size_t raw_points = 0;
    std::size_t kept_points = 0;
};

inline PointCloud remove_outliers(const PointCloud& cloud, const PerceptionConfig& config) {
    auto stage1 = statistical_outlier_removal(cloud, config.k_neighbors, config.sigma_mult);
    return cluster_outlier_removal(stage1.cloud, config.cluster_eps, config.min_cluster_points);
}

inline LayerMeasurement measure_layer(const PointCloud& cloud, const WeldPath& path,
                                      std::span<const PathSegment> segments,
                                      const PerceptionConfig& config) {
    LayerMeasurement m;
    m.raw_points = cloud.size();
    const auto clean = remove_outliers(cloud, config);
    m.kept_points = clean.size();
    auto raw = extract_height_profile(clean, path, config.bin_width, config.top_quantile,
                                      config.max_empty_fraction);
    m.profile = config.smoothing_window > 0.0 ? smooth_along_direction(raw, config.smoothing_window) : raw;
    m.segments = segment_means(m.profile, segments);
    m.mean_height = m.profile.mean();
    return m;
}

}  // namespace waam
