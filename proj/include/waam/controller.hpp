#pragma once

// Scan-n-print feedback law and run orchestration.
//
// The law: the next layer should end at h_layer + dh_d. Each segment needs
// dh_needed = target - h_seg, with h_seg the segment's measured mean after a
// moving average across neighbouring segments. The inverse deposition model
// turns dh_needed into a torch speed, clamped to [v_min, v_max]; a segment
// already too high for v_max gets v_max and the rest waits for later layers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "waam/errors.hpp"
#include "waam/geometry.hpp"
#include "waam/metrics.hpp"
#include "waam/modelid.hpp"
#include "waam/perception.hpp"
#include "waam/plant.hpp"
#include "waam/scansim.hpp"

namespace waam {

enum class RunMode { open_loop, stepwise, continuous, replay };

inline std::string to_string(RunMode mode) {
    switch (mode) {
        case RunMode::open_loop: return "open";
        case RunMode::stepwise: return "stepwise";
        case RunMode::continuous: return "continuous";
        case RunMode::replay: return "replay";
    }
    return "unknown";
}

inline RunMode run_mode_from_string(const std::string& name) {
    if (name == "open" || name == "open-loop" || name == "openloop") return RunMode::open_loop;
    if (name == "stepwise" || name == "step-wise") return RunMode::stepwise;
    if (name == "continuous") return RunMode::continuous;
    if (name == "replay") return RunMode::replay;
    throw ConfigError("unknown run mode '" + name + "'");
}

struct ControllerConfig {
    double v_min = 2.0;
    double v_max = 20.0;
    std::size_t height_filter_segments = 3;
    double height_filter_window = 0.0;  // mm; when > 0 it overrides the segment count
    double dh_desired = 2.34;
    double v_nominal = 0.0;  // open-loop speed; 0 means f_inverse(dh_desired)
    RunMode mode = RunMode::stepwise;
    double lookahead_distance = 0.0;  // 0 means half the path
    double tick_rate = 100.0;
    std::size_t segments = 40;

    void validate() const {
        if (!(v_min > 0.0 && v_min < v_max)) throw ConfigError("controller needs 0 < v_min < v_max");
        if (!(dh_desired > 0.0)) throw ConfigError("desired layer height must be > 0");
        if (!(tick_rate > 0.0)) throw ConfigError("tick rate must be > 0");
        if (segments < 1) throw ConfigError("segment count must be >= 1");
        if (height_filter_segments < 1) throw ConfigError("height filter must span >= 1 segment");
        if (lookahead_distance < 0.0) throw ConfigError("lookahead distance must be >= 0");
        if (height_filter_window < 0.0) throw ConfigError("height filter window must be >= 0");
    }

    // Largest odd number of whole segments that fits in the window, at least one.
    [[nodiscard]] ControllerConfig resolved(double segment_length) const {
        ControllerConfig c = *this;
        if (height_filter_window > 0.0 && segment_length > 0.0) {
            auto n = static_cast<std::size_t>(std::floor(height_filter_window / segment_length + 1e-9));
            if (n % 2 == 0) n = n > 0 ? n - 1 : 1;
            c.height_filter_segments = n;
        }
        return c;
    }
};

struct LayerTarget {
    double target = 0.0;        // h_d^(i+1)
    double layer_height = 0.0;  // h^(i)
    double desired_gain = 0.0;  // dh_d^(i)
};

inline LayerTarget make_target(double layer_height, double desired_gain) {
    return {layer_height + desired_gain, layer_height, desired_gain};
}

/// Centred moving average over `window` segments; open paths truncate at the ends.
inline std::vector<double> moving_average(std::span<const double> values, std::size_t window, bool closed) {
    const auto n = static_cast<std::ptrdiff_t>(values.size());
    const auto half = static_cast<std::ptrdiff_t>((std::max<std::size_t>(window, 1) - 1) / 2);
    std::vector<double> out(values.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double sum = 0.0;
        std::size_t used = 0;
        for (std::ptrdiff_t d = -half; d <= half; ++d) {
            auto j = i + d;
            if (closed) j = ((j % n) + n) % n;
            else if (j < 0 || j >= n) continue;
            sum += values[static_cast<std::size_t>(j)];
            ++used;
        }
        out[static_cast<std::size_t>(i)] = sum / static_cast<double>(used);
    }
    return out;
}

inline double command_speed(const DepositionModel& model, double needed, const ControllerConfig& config) {
    const double floor = f_deposition(model, config.v_max);
    if (needed <= floor) return config.v_max;
    return std::clamp(f_inverse(model, needed), config.v_min, config.v_max);
}

inline double nominal_speed(const DepositionModel& model, const ControllerConfig& config) {
    if (config.v_nominal > 0.0) return config.v_nominal;
    return command_speed(model, config.dh_desired, config);
}

inline SpeedProfile plan_layer_speeds(std::span<const double> segment_heights, double h_layer,
                                      double dh_desired, const DepositionModel& model,
                                      const ControllerConfig& config, bool closed = false,
                                      std::size_t layer_index = 0) {
    if (segment_heights.empty()) throw ContractViolation("plan needs one measurement per segment");
    const auto filtered = moving_average(segment_heights, config.height_filter_segments, closed);
    const double target = h_layer + dh_desired;
    SpeedProfile profile{layer_index, std::vector<double>(filtered.size())};
    for (std::size_t k = 0; k < filtered.size(); ++k)
        profile.speeds[k] = command_speed(model, target - filtered[k], config);
    return profile;
}

inline SpeedProfile plan_layer_speeds(std::span<const SegmentMeasurement> measurements, double h_layer,
                                      double dh_desired, const DepositionModel& model,
                                      const ControllerConfig& config, bool closed = false,
                                      std::size_t layer_index = 0) {
    std::vector<double> heights(measurements.size());
    for (std::size_t k = 0; k < measurements.size(); ++k) heights[k] = measurements[k].mean_height;
    return plan_layer_speeds(std::span<const double>(heights), h_layer, dh_desired, model, config,
                             closed, layer_index);
}

/// Everything that defines a run besides its mode.
struct ExperimentSetup {
    std::string name = "experiment";
    PartSpec part{};
    MaterialPreset material = aluminum_preset();
    double feed_rate = 100.0;
    DisturbanceConfig disturbance = aluminum_preset().disturbance;
    ScannerConfig scanner{};
    PerceptionConfig perception{};
    ControllerConfig controller{};
    std::uint64_t plant_seed = 1;
    std::uint64_t scanner_seed = 2;
    double grid_pitch = 0.1;
    double edge_margin = 7.5;
    std::size_t layers = 0;  // 0 means slice to the target height

    [[nodiscard]] DepositionModel model() const { return interpolate_model(material.models, feed_rate); }
    [[nodiscard]] double bead_width() const { return waam::bead_width(material.physical, controller.dh_desired); }
    [[nodiscard]] std::size_t layer_total() const {
        return layers > 0 ? layers : layer_count(part.target_height, controller.dh_desired);
    }
    [[nodiscard]] DisturbanceConfig plant_disturbance() const {
        DisturbanceConfig d = disturbance;
        d.seed = plant_seed;
        return d;
    }
    [[nodiscard]] LayerPlan layer(std::size_t i) const {
        return plan_layer(part, i, controller.dh_desired, controller.segments);
    }
    [[nodiscard]] SurfaceHeightField blank_surface() const {
        return SurfaceHeightField::flat(part.base_length(), grid_pitch, part.closed());
    }

    void validate() const {
        part.validate();
        disturbance.validate();
        scanner.validate();
        perception.validate();
        controller.validate();
        material.physical.validate();
        if (material.models.empty()) throw ConfigError("material preset has no deposition models");
        if (!(grid_pitch > 0.0)) throw ConfigError("grid pitch must be > 0");
        if (edge_margin < 0.0) throw ConfigError("edge margin must be >= 0");
        (void)model();
    }
};

struct LayerLog {
    std::size_t index = 0;
    SpeedProfile speeds;
    std::optional<LayerTarget> target;      // controller's target for the next layer
    std::vector<double> segment_targets;    // continuous mode, per segment
    std::optional<HeightProfile> measured;  // what the controller saw
    HeightProfile truth;                    // ground truth, binned
    double truth_target = 0.0;              // previous truth mean + dh_d
    LayerMetrics metrics;
};

struct ContinuousAudit {
    double lookahead = 0.0;
    double max_lag_error = 0.0;        // max |lag - lookahead|, mm
    double mean_lag = 0.0;             // mm
    double max_tick_travel = 0.0;      // mm moved in one tick
    double max_delay_error_ticks = 0.0;
    std::size_t samples = 0;
};

struct RunRecord {
    ExperimentSetup setup;
    RunMode mode = RunMode::stepwise;
    RunMode source_mode = RunMode::stepwise;  // for replays: the mode that produced the speeds
    std::uint64_t plant_seed = 0;
    std::uint64_t scanner_seed = 0;
    std::vector<LayerLog> layers;
    SurfaceHeightField final_surface;
    bool complete = true;
    std::string abort_reason;
    std::optional<ContinuousAudit> audit;

    [[nodiscard]] std::vector<double> std_with_edge() const {
        std::vector<double> out;
        for (const auto& l : layers) out.push_back(l.metrics.std_with_edge);
        return out;
    }
    [[nodiscard]] std::vector<double> std_without_edge() const {
        std::vector<double> out;
        for (const auto& l : layers) out.push_back(l.metrics.std_without_edge);
        return out;
    }
    [[nodiscard]] std::vector<double> rmse() const {
        std::vector<double> out;
        for (const auto& l : layers) out.push_back(l.metrics.tracking_rmse);
        return out;
    }
};

struct RunSummary {
    double mean_std_with_edge = 0.0;
    double mean_std_without_edge = 0.0;
    double mean_tracking_rmse = 0.0;
    GeometryErrorStats geometry;
    std::size_t layers = 0;
};

inline RunSummary summarize(const RunRecord& record) {
    RunSummary s;
    s.mean_std_with_edge = mean_of(record.std_with_edge());
    s.mean_std_without_edge = mean_of(record.std_without_edge());
    s.mean_tracking_rmse = mean_of(record.rmse());
    s.layers = record.layers.size();
    if (!record.final_surface.heights.empty())
        s.geometry = geometry_error(record.final_surface, record.setup.part,
                                    record.setup.controller.dh_desired * static_cast<double>(s.layers));
    return s;
}

namespace detail {

inline RunRecord start_record(const ExperimentSetup& setup, RunMode mode) {
    RunRecord record;
    record.setup = setup;
    record.mode = mode;
    record.source_mode = mode;
    record.plant_seed = setup.plant_seed;
    record.scanner_seed = setup.scanner_seed;
    return record;
}

/// Ground-truth scoring of a finished layer.
inline void score_layer(LayerLog& log, const SurfaceHeightField& surface, const LayerPlan& layer,
                        const ExperimentSetup& setup, double previous_truth_mean) {
    log.truth = truth_profile(surface, layer.s_offset, layer.path.arc_length, layer.path.closed,
                              setup.perception.bin_width);
    const auto events = default_arc_events(layer);
    const auto stds = layer_height_std(log.truth, setup.edge_margin, events);
    log.truth_target = previous_truth_mean + setup.controller.dh_desired;
    log.metrics = {layer.index, stds.with_edge, stds.without_edge, tracking_rmse(log.truth, log.truth_target)};
}

}  // namespace detail

/// Constant speed everywhere. `n_layers` = 0 slices to the target height.
inline RunRecord run_openloop(const ExperimentSetup& setup, double v_const, std::size_t n_layers = 0) {
    setup.validate();
    const auto& cc = setup.controller;
    if (v_const < cc.v_min || v_const > cc.v_max)
        throw ConfigError("open-loop speed outside [v_min, v_max]");
    const auto model = setup.model();
    const auto dist = setup.plant_disturbance();
    if (n_layers == 0) n_layers = setup.layer_total();

    auto record = detail::start_record(setup, RunMode::open_loop);
    auto surface = setup.blank_surface();
    double previous_truth = 0.0;
    for (std::size_t i = 0; i < n_layers; ++i) {
        const auto layer = setup.layer(i);
        LayerLog log;
        log.index = i;
        log.speeds = {i, std::vector<double>(layer.segments.size(), v_const)};
        surface = deposit_layer(surface, layer, log.speeds, model, dist, default_arc_events(layer)).surface;
        detail::score_layer(log, surface, layer, setup, previous_truth);
        previous_truth = log.truth.mean();
        record.layers.push_back(std::move(log));
    }
    record.final_surface = surface;
    return record;
}

/// Alternate weld and scan; plan each layer from the scan of the one below.
inline RunRecord run_stepwise(const ExperimentSetup& setup) {
    setup.validate();
    const auto cc = setup.controller.resolved(setup.layer(0).segments.front().length);
    const auto model = setup.model();
    const auto dist = setup.plant_disturbance();
    const auto n_layers = setup.layer_total();
    const double width = setup.bead_width();

    auto record = detail::start_record(setup, RunMode::stepwise);
    auto surface = setup.blank_surface();
    double previous_truth = 0.0;
    auto layer = setup.layer(0);
    SpeedProfile speeds{0, std::vector<double>(layer.segments.size(), nominal_speed(model, cc))};
    for (std::size_t i = 0; i < n_layers; ++i) {
        LayerLog log;
        log.index = i;
        log.speeds = speeds;
        surface = deposit_layer(surface, layer, speeds, model, dist, default_arc_events(layer)).surface;
        detail::score_layer(log, surface, layer, setup, previous_truth);
        previous_truth = log.truth.mean();

        if (i + 1 < n_layers) {
            // Scan along the path the next layer will follow.
            auto next = setup.layer(i + 1);
            try {
                const auto cloud = simulate_scan(surface, next, width, setup.scanner,
                                                 mix_seed(setup.scanner_seed, i));
                const auto m = measure_layer(cloud, next.path, next.segments, setup.perception);
                log.target = make_target(m.mean_height, cc.dh_desired);
                speeds = plan_layer_speeds(std::span<const SegmentMeasurement>(m.segments), m.mean_height,
                                           cc.dh_desired, model, cc, next.path.closed, i + 1);
                log.measured = m.profile;
            } catch (const InsufficientCoverage& e) {
                record.layers.push_back(std::move(log));
                record.complete = false;
                record.abort_reason = e.what();
                break;
            } catch (const EmptyResultError& e) {
                record.layers.push_back(std::move(log));
                record.complete = false;
                record.abort_reason = e.what();
                break;
            }
            layer = std::move(next);
        }
        record.layers.push_back(std::move(log));
    }
    record.final_surface = surface;
    return record;
}

/// Look-ahead speed planning from a position-indexed buffer of segment
/// measurements. Entries carry how many torch passes their segment had seen
/// when measured, so heights taken at different passes compare on one helix.
class LookaheadPlanner {
public:
    struct Entry {
        double height = 0.0;
        std::size_t passes = 0;
        bool measured = false;
    };

    LookaheadPlanner(std::size_t segments, DepositionModel model, ControllerConfig config)
        : buffer_(segments), model_(model), config_(config) {}

    void store(std::size_t segment, double height, std::size_t passes) {
        buffer_[segment] = {height, passes, true};
    }

    [[nodiscard]] const Entry& entry(std::size_t segment) const { return buffer_[segment]; }

    struct Command {
        double speed = 0.0;
        double target = 0.0;
        bool from_buffer = false;
    };

    /// Speed for segment k. Unmeasured segments run at the nominal speed.
    [[nodiscard]] Command command(std::size_t k) const {
        const double nominal = nominal_speed(model_, config_);
        if (!buffer_[k].measured) return {nominal, 0.0, false};
        const auto& ref = buffer_[k];
        std::vector<double> corrected(buffer_.size());
        double sum = 0.0;
        for (std::size_t j = 0; j < buffer_.size(); ++j) {
            const auto& e = buffer_[j];
            corrected[j] = e.height + config_.dh_desired *
                                          (static_cast<double>(ref.passes) - static_cast<double>(e.passes));
            sum += corrected[j];
        }
        const double h_layer = sum / static_cast<double>(corrected.size());
        const auto plan = plan_layer_speeds(std::span<const double>(corrected), h_layer,
                                            config_.dh_desired, model_, config_, true);
        return {plan.speeds[k], h_layer + config_.dh_desired, true};
    }

private:
    std::vector<Entry> buffer_;
    DepositionModel model_;
    ControllerConfig config_;
};

namespace detail {

/// Per-segment perception for the continuous scanner: outlier removal, top
/// quantile bins over the segment, smoothing, mean.
inline std::optional<double> measure_segment(const PointCloud& cloud, double s_start, double seg_len,
                                             double path_length, const PerceptionConfig& config) {
    if (cloud.empty()) return std::nullopt;
    PointCloud local = cloud;
    for (auto& p : local.points) {
        double u = p.x - s_start;
        if (u < -0.5 * path_length) u += path_length;
        if (u > 0.5 * path_length) u -= path_length;
        p.x = u;
    }
    try {
        const auto clean = remove_outliers(local, config);
        auto profile = bin_top_heights(clean, seg_len, false, config.bin_width, config.top_quantile);
        if (profile.empty_fraction() >= 1.0) return std::nullopt;
        if (config.smoothing_window >= profile.bin_width)
            profile = smooth_along_direction(profile, config.smoothing_window);
        return profile.mean();
    } catch (const EmptyResultError&) {
        return std::nullopt;
    }
}

}  // namespace detail

/// Closed-path co-simulation at the tick rate. A scanner `lookahead` ahead of
/// the torch fills the buffer; the torch speed is re-planned whenever it
/// enters a segment. With `speed_override` the recorded speeds are replayed
/// and the scanner is off.
inline RunRecord run_continuous(const ExperimentSetup& setup,
                                const std::vector<SpeedProfile>* speed_override = nullptr) {
    setup.validate();
    if (!setup.part.closed()) throw ConfigError("continuous mode needs a closed path");
    const auto cc = setup.controller.resolved(setup.layer(0).segments.front().length);
    const auto model = setup.model();
    const auto dist = setup.plant_disturbance();
    const auto n_layers = speed_override ? speed_override->size() : setup.layer_total();
    const auto layer = setup.layer(0);
    const double length = layer.path.arc_length;
    const double lookahead = cc.lookahead_distance > 0.0 ? cc.lookahead_distance : 0.5 * length;
    if (lookahead > 0.5 * length + 1e-9) throw ConfigError("lookahead exceeds half the perimeter");
    const auto n_seg = layer.segments.size();
    const double seg_len = length / static_cast<double>(n_seg);
    const double dt = 1.0 / cc.tick_rate;
    const double width = setup.bead_width();

    auto record = detail::start_record(setup, speed_override ? RunMode::replay : RunMode::continuous);
    record.source_mode = RunMode::continuous;
    auto surface = setup.blank_surface();
    const auto n_grid = surface.size();
    std::vector<std::size_t> grid_segment(n_grid);
    for (std::size_t j = 0; j < n_grid; ++j) grid_segment[j] = segment_of(surface.position(j), length, n_seg);

    LookaheadPlanner planner(n_seg, model, cc);
    std::vector<std::size_t> passes(n_seg, 0);
    auto scan_rng = make_rng(setup.scanner_seed, 0xc0de);

    struct Pending {
        double target;
        double torch_at_measure;
        double t_measure;
    };
    std::deque<Pending> pending;
    ContinuousAudit audit;
    audit.lookahead = lookahead;
    double lag_sum = 0.0;

    const double end = length * static_cast<double>(n_layers);
    double torch = 0.0;  // unwrapped
    double t = 0.0;
    std::size_t rev = 0;
    std::size_t grid_next = 0;
    std::optional<std::size_t> scan_segment;
    PointCloud scan_acc;
    std::vector<double> previous = surface.heights;
    auto eta = layer_process_noise(surface, dist, surface.layers);
    double previous_truth = 0.0;

    LayerLog log;
    log.index = 0;
    log.speeds = {0, std::vector<double>(n_seg, 0.0)};
    log.segment_targets.assign(n_seg, 0.0);
    std::optional<std::size_t> torch_segment;
    std::size_t next_segment = 0;
    double v = 0.0;

    auto flush_scan = [&]() {
        if (!scan_segment || scan_acc.empty()) return;
        const auto k = *scan_segment;
        if (auto h = detail::measure_segment(scan_acc, seg_len * static_cast<double>(k), seg_len, length,
                                             setup.perception))
            planner.store(k, *h, passes[k]);
        scan_acc = PointCloud{};
    };

    while (torch < end && rev < n_layers) {
        if (!speed_override) {
            const double q_unwrapped = torch + lookahead;
            double q = std::fmod(q_unwrapped, length);
            const auto k = segment_of(q, length, n_seg);
            if (scan_segment && *scan_segment != k) flush_scan();
            scan_segment = k;
            scan_acc.append(capture_frame(surface, 0.0, length, true, width, {q, 0.0, PassKind::main},
                                          setup.scanner, scan_rng));
            pending.push_back({q_unwrapped, torch, t});
        }

        double time_left = dt;
        const double torch_before = torch;
        while (time_left > 0.0 && rev < n_layers) {
            if (!torch_segment) {
                const auto k = next_segment;
                torch_segment = k;
                if (speed_override) {
                    v = (*speed_override)[rev].speeds.at(k);
                } else {
                    const auto cmd = planner.command(k);
                    v = cmd.speed;
                    log.segment_targets[k] = cmd.target;
                }
                log.speeds.speeds[k] = v;
            }
            const auto k = *torch_segment;
            const double rev_start = length * static_cast<double>(rev);
            const double seg_end = k + 1 == n_seg ? rev_start + length
                                                  : rev_start + seg_len * static_cast<double>(k + 1);
            const double reach = torch + v * time_left;
            const bool finishes = reach >= seg_end;
            const double new_torch = finishes ? seg_end : reach;
            const double nominal = f_deposition(model, v);
            while (grid_next < n_grid && grid_segment[grid_next] == k &&
                   (finishes || surface.position(grid_next) + rev_start < new_torch)) {
                surface.heights[grid_next] += point_gain(nominal, eta[grid_next], 0.0);
                ++grid_next;
            }
            time_left -= (new_torch - torch) / v;
            torch = new_torch;
            if (!finishes) break;

            ++passes[k];
            torch_segment.reset();
            next_segment = (k + 1) % n_seg;
            if (k + 1 == n_seg) {
                finish_layer(surface, previous, {0, n_grid}, dist);
                detail::score_layer(log, surface, layer, setup, previous_truth);
                log.metrics.layer = rev;
                previous_truth = log.truth.mean();
                record.layers.push_back(log);
                ++rev;
                grid_next = 0;
                previous = surface.heights;
                eta = layer_process_noise(surface, dist, surface.layers);
                log = LayerLog{};
                log.index = rev;
                log.speeds = {rev, std::vector<double>(n_seg, 0.0)};
                log.segment_targets.assign(n_seg, 0.0);
            }
        }
        t += dt;
        audit.max_tick_travel = std::max(audit.max_tick_travel, torch - torch_before);

        while (!pending.empty() && pending.front().target <= torch) {
            const auto& p = pending.front();
            const double lag = torch - p.torch_at_measure;
            const double delay = t - p.t_measure;
            audit.max_lag_error = std::max(audit.max_lag_error, std::abs(lag - lookahead));
            const double mean_speed = lag / delay;
            audit.max_delay_error_ticks =
                std::max(audit.max_delay_error_ticks, std::abs(delay - lookahead / mean_speed) / dt);
            lag_sum += lag;
            ++audit.samples;
            pending.pop_front();
        }
    }
    if (audit.samples > 0) audit.mean_lag = lag_sum / static_cast<double>(audit.samples);
    if (!speed_override) record.audit = audit;
    record.final_surface = surface;
    return record;
}

/// Re-apply a record's speed profiles open loop on a fresh plant.
inline RunRecord run_replay(const RunRecord& source, std::uint64_t new_seed) {
    if (!source.complete) throw ContractViolation("cannot replay an incomplete record");
    auto setup = source.setup;
    setup.plant_seed = new_seed;
    setup.validate();
    std::vector<SpeedProfile> speeds;
    for (const auto& l : source.layers) speeds.push_back(l.speeds);
    for (std::size_t i = 0; i < speeds.size(); ++i) {
        const auto layer = setup.layer(i);
        if (speeds[i].speeds.size() != layer.segments.size())
            throw ContractViolation("record layer " + std::to_string(i) + " has " +
                                    std::to_string(speeds[i].speeds.size()) + " speeds for " +
                                    std::to_string(layer.segments.size()) + " segments");
    }

    const auto model = setup.model();
    const auto dist = setup.plant_disturbance();
    auto record = detail::start_record(setup, RunMode::replay);
    record.source_mode = source.mode == RunMode::replay ? source.source_mode : source.mode;
    auto surface = setup.blank_surface();
    double previous_truth = 0.0;
    const bool arc_stays_on = record.source_mode == RunMode::continuous;
    for (std::size_t i = 0; i < speeds.size(); ++i) {
        const auto layer = setup.layer(i);
        LayerLog log;
        log.index = i;
        log.speeds = speeds[i];
        const auto events = arc_stays_on ? std::vector<double>{} : default_arc_events(layer);
        surface = deposit_layer(surface, layer, log.speeds, model, dist, events).surface;
        detail::score_layer(log, surface, layer, setup, previous_truth);
        previous_truth = log.truth.mean();
        record.layers.push_back(std::move(log));
    }
    record.final_surface = surface;
    return record;
}

/// Dispatch on the configured mode (replay needs a record, see run_replay).
inline RunRecord run(const ExperimentSetup& setup) {
    switch (setup.controller.mode) {
        case RunMode::open_loop: {
            const double v = nominal_speed(setup.model(), setup.controller);
            return run_openloop(setup, v);
        }
        case RunMode::stepwise: return run_stepwise(setup);
        case RunMode::continuous: return run_continuous(setup);
        case RunMode::replay: throw ConfigError("replay mode needs a recorded run");
    }
    throw ConfigError("unknown run mode");
}

}  // namespace waam
