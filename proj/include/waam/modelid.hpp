#pragma once

// Deposition model identification from a staircase-speed experiment.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <span>
#include <vector>

#include "waam/errors.hpp"
#include "waam/geometry.hpp"
#include "waam/perception.hpp"
#include "waam/plant.hpp"
#include "waam/scansim.hpp"

namespace waam {

struct StaircaseSchedule {
    std::size_t base_layers = 2;
    double v_start = 20.0;
    double v_end = 2.0;
    double v_step = 2.0;
    std::size_t layers_per_speed = 2;
    double feed_rate = 100.0;

    /// Measurement speeds from v_start down to v_end.
    [[nodiscard]] std::vector<double> speeds() const {
        std::vector<double> out;
        for (std::size_t i = 0;; ++i) {
            const double v = v_start - v_step * static_cast<double>(i);
            if (v < v_end - 1e-9) break;
            out.push_back(v);
        }
        return out;
    }

    [[nodiscard]] std::size_t measurement_layers() const { return speeds().size() * layers_per_speed; }
    [[nodiscard]] std::size_t total_layers() const { return base_layers + measurement_layers(); }

    void validate() const {
        if (!(v_start > v_end && v_end > 0.0)) throw ConfigError("staircase needs v_start > v_end > 0");
        if (!(v_step > 0.0)) throw ConfigError("staircase step must be > 0");
        if (layers_per_speed < 1) throw ConfigError("staircase needs >= 1 layer per speed");
        if (speeds().size() < 2)
            throw ConfigError("staircase step covers the speed range in one step: single-speed schedule");
    }
};

inline StaircaseSchedule staircase_schedule() { return {}; }

struct IdRow {
    double v = 0.0;
    double dh = 0.0;
    std::size_t layer = 0;  // first layer of the group, counting base layers
};

struct IdDataset {
    std::vector<IdRow> rows;
};

/// Plant, sensor and perception stack the staircase is welded and measured with.
struct IdentificationSetup {
    PartSpec part{};
    DepositionModel plant_model{};
    DisturbanceConfig disturbance{};
    ScannerConfig scanner{};
    PerceptionConfig perception{};
    double bead_width = 4.0;
    double grid_pitch = 0.1;
    std::size_t segments = 40;
    bool average_layers = true;
};

inline double mean_of_gains(std::span<const double> gains) {
    return std::accumulate(gains.begin(), gains.end(), 0.0) / static_cast<double>(gains.size());
}

inline IdDataset run_identification(const StaircaseSchedule& schedule,
                                    const IdentificationSetup& setup, std::uint64_t scan_seed) {
    schedule.validate();
    const auto layer = plan_layer(setup.part, 0, 1.0, setup.segments);
    if (setup.part.kind == PartKind::blade && setup.part.blade.taper_rate != 0.0)
        throw ConfigError("identification runs on a constant-length path");
    auto surface = SurfaceHeightField::flat(setup.part.base_length(), setup.grid_pitch,
                                            setup.part.closed());
    const auto events = default_arc_events(layer);

    std::size_t index = 0;
    auto weld_and_measure = [&](double v) {
        SpeedProfile speeds{index, std::vector<double>(layer.segments.size(), v)};
        surface = deposit_layer(surface, layer, speeds, setup.plant_model, setup.disturbance, events).surface;
        const auto cloud = simulate_scan(surface, layer, setup.bead_width, setup.scanner,
                                         mix_seed(scan_seed, index));
        ++index;
        return measure_layer(cloud, layer.path, layer.segments, setup.perception).mean_height;
    };

    double previous = 0.0;
    for (std::size_t i = 0; i < schedule.base_layers; ++i) previous = weld_and_measure(schedule.v_start);
    if (schedule.base_layers == 0) previous = 0.0;

    IdDataset data;
    for (double v : schedule.speeds()) {
        std::vector<double> gains;
        const std::size_t first = index;
        for (std::size_t r = 0; r < schedule.layers_per_speed; ++r) {
            const double current = weld_and_measure(v);
            gains.push_back(current - previous);
            previous = current;
        }
        if (setup.average_layers) {
            data.rows.push_back({v, mean_of_gains(gains), first});
        } else {
            for (std::size_t r = 0; r < gains.size(); ++r) data.rows.push_back({v, gains[r], first + r});
        }
    }
    for (const auto& row : data.rows)
        if (!(row.dh > 0.0))
            throw DomainError("measured a non-positive layer height at v = " + std::to_string(row.v));
    return data;
}

/// Ordinary least squares of ln(dh) on ln(v), centred for conditioning.
/// rmse is reported in mm on the back-transformed predictions.
inline DepositionModel fit_loglog(const IdDataset& data, double feed_rate = 0.0) {
    std::set<double> distinct;
    for (const auto& r : data.rows) {
        if (!(r.v > 0.0) || !(r.dh > 0.0)) throw DomainError("fit needs v > 0 and dh > 0");
        distinct.insert(r.v);
    }
    if (distinct.size() < 2) throw RankDeficiencyError("fit needs at least two distinct speeds");
    const double n = static_cast<double>(data.rows.size());
    double xm = 0.0, ym = 0.0;
    for (const auto& r : data.rows) {
        xm += std::log(r.v);
        ym += std::log(r.dh);
    }
    xm /= n;
    ym /= n;
    double sxy = 0.0, sxx = 0.0;
    for (const auto& r : data.rows) {
        const double dx = std::log(r.v) - xm;
        sxy += dx * (std::log(r.dh) - ym);
        sxx += dx * dx;
    }
    DepositionModel model;
    model.feed_rate = feed_rate;
    model.a = sxy / sxx;
    model.b = ym - model.a * xm;
    double ss = 0.0;
    for (const auto& r : data.rows) {
        const double e = r.dh - f_deposition(model, r.v);
        ss += e * e;
    }
    model.rmse = std::sqrt(ss / n);
    return model;
}

/// Linear interpolation of (a, b, rmse) between the bracketing feed rates.
inline DepositionModel interpolate_model(std::span<const DepositionModel> table, double feed_rate) {
    if (table.empty()) throw ConfigError("model table is empty");
    if (feed_rate < table.front().feed_rate || feed_rate > table.back().feed_rate)
        throw ExtrapolationError("feed rate " + std::to_string(feed_rate) + " ipm outside table range [" +
                                 std::to_string(table.front().feed_rate) + ", " +
                                 std::to_string(table.back().feed_rate) + "]");
    for (const auto& m : table)
        if (m.feed_rate == feed_rate) return m;
    const auto hi = std::upper_bound(table.begin(), table.end(), feed_rate,
                                     [](double f, const DepositionModel& m) { return f < m.feed_rate; });
    const auto& upper = *hi;
    const auto& lower = *(hi - 1);
    const double t = (feed_rate - lower.feed_rate) / (upper.feed_rate - lower.feed_rate);
    return {feed_rate, lower.a + t * (upper.a - lower.a), lower.b + t * (upper.b - lower.b),
            lower.rmse + t * (upper.rmse - lower.rmse)};
}

}  // namespace waam
