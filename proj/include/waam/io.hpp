#pragma once

// JSON and CSV serialisation. JSON objects come out with sorted keys and
// shortest round-trip doubles, so identical runs give identical bytes.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "waam/controller.hpp"
#include "waam/errors.hpp"
#include "waam/modelid.hpp"

namespace waam {

using nlohmann::json;

namespace detail {

// Shortest text that reads back to the same double, or a printf format.
inline std::string num(double v, const char* fmt = nullptr) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    if (!fmt) return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

/// Copy `key` from j into `out` if present.
template <class T>
void read_opt(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* where) {
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

inline json nan_array(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(std::isnan(x) ? json(nullptr) : json(x));
    return a;
}

inline std::vector<double> nan_array_from(const json& a) {
    std::vector<double> v;
    for (const auto& x : a) v.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>());
    return v;
}

}  // namespace detail

inline void to_json(json& j, const DepositionModel& m) {
    j = {{"feed_rate", m.feed_rate}, {"a", m.a}, {"b", m.b}, {"rmse", m.rmse}};
}
inline void from_json(const json& j, DepositionModel& m) {
    detail::reject_unknown(j, {"feed_rate", "a", "b", "rmse"}, "model");
    detail::read_opt(j, "feed_rate", m.feed_rate);
    detail::read_opt(j, "a", m.a);
    detail::read_opt(j, "b", m.b);
    detail::read_opt(j, "rmse", m.rmse);
}

inline void to_json(json& j, const DisturbanceConfig& d) {
    j = {{"process_noise_sigma", d.process_noise_sigma},
         {"noise_correlation_length", d.noise_correlation_length},
         {"edge_droop_depth", d.edge_droop_depth},
         {"edge_droop_decay", d.edge_droop_decay},
         {"flow_smoothing_radius", d.flow_smoothing_radius}};
}
inline void from_json(const json& j, DisturbanceConfig& d) {
    detail::reject_unknown(j, {"process_noise_sigma", "noise_correlation_length", "edge_droop_depth",
                               "edge_droop_decay", "flow_smoothing_radius"},
                           "disturbance");
    detail::read_opt(j, "process_noise_sigma", d.process_noise_sigma);
    detail::read_opt(j, "noise_correlation_length", d.noise_correlation_length);
    detail::read_opt(j, "edge_droop_depth", d.edge_droop_depth);
    detail::read_opt(j, "edge_droop_decay", d.edge_droop_decay);
    detail::read_opt(j, "flow_smoothing_radius", d.flow_smoothing_radius);
}

inline void to_json(json& j, const ScannerConfig& c) {
    j = {{"standoff", c.standoff},
         {"fov", c.fov},
         {"frame_rate", c.frame_rate},
         {"z_noise_sigma", c.z_noise_sigma},
         {"outlier_rate", c.outlier_rate},
         {"outlier_magnitude", c.outlier_magnitude},
         {"points_per_line", c.points_per_line},
         {"pose_error_sigma", c.pose_error_sigma},
         {"scan_speed", c.scan_speed},
         {"side_pass_length", c.side_pass_length},
         {"side_pass_offset", c.side_pass_offset},
         {"crown_ratio", c.crown_ratio}};
}
inline void from_json(const json& j, ScannerConfig& c) {
    detail::reject_unknown(j, {"standoff", "fov", "frame_rate", "z_noise_sigma", "outlier_rate",
                               "outlier_magnitude", "points_per_line", "pose_error_sigma", "scan_speed",
                               "side_pass_length", "side_pass_offset", "crown_ratio"},
                           "scanner");
    detail::read_opt(j, "standoff", c.standoff);
    detail::read_opt(j, "fov", c.fov);
    detail::read_opt(j, "frame_rate", c.frame_rate);
    detail::read_opt(j, "z_noise_sigma", c.z_noise_sigma);
    detail::read_opt(j, "outlier_rate", c.outlier_rate);
    detail::read_opt(j, "outlier_magnitude", c.outlier_magnitude);
    detail::read_opt(j, "points_per_line", c.points_per_line);
    detail::read_opt(j, "pose_error_sigma", c.pose_error_sigma);
    detail::read_opt(j, "scan_speed", c.scan_speed);
    detail::read_opt(j, "side_pass_length", c.side_pass_length);
    detail::read_opt(j, "side_pass_offset", c.side_pass_offset);
    detail::read_opt(j, "crown_ratio", c.crown_ratio);
}

inline void to_json(json& j, const PerceptionConfig& c) {
    j = {{"k_neighbors", c.k_neighbors},
         {"sigma_mult", c.sigma_mult},
         {"cluster_eps", c.cluster_eps},
         {"min_cluster_points", c.min_cluster_points},
         {"bin_width", c.bin_width},
         {"top_quantile", c.top_quantile},
         {"smoothing_window", c.smoothing_window},
         {"max_empty_fraction", c.max_empty_fraction}};
}
inline void from_json(const json& j, PerceptionConfig& c) {
    detail::reject_unknown(j, {"k_neighbors", "sigma_mult", "cluster_eps", "min_cluster_points", "bin_width",
                               "top_quantile", "smoothing_window", "max_empty_fraction"},
                           "perception");
    detail::read_opt(j, "k_neighbors", c.k_neighbors);
    detail::read_opt(j, "sigma_mult", c.sigma_mult);
    detail::read_opt(j, "cluster_eps", c.cluster_eps);
    detail::read_opt(j, "min_cluster_points", c.min_cluster_points);
    detail::read_opt(j, "bin_width", c.bin_width);
    detail::read_opt(j, "top_quantile", c.top_quantile);
    detail::read_opt(j, "smoothing_window", c.smoothing_window);
    detail::read_opt(j, "max_empty_fraction", c.max_empty_fraction);
}

inline void to_json(json& j, const ControllerConfig& c) {
    j = {{"v_min", c.v_min},
         {"v_max", c.v_max},
         {"height_filter_segments", c.height_filter_segments},
         {"height_filter_window", c.height_filter_window},
         {"dh_desired", c.dh_desired},
         {"v_nominal", c.v_nominal},
         {"mode", to_string(c.mode)},
         {"lookahead_distance", c.lookahead_distance},
         {"tick_rate", c.tick_rate},
         {"segments", c.segments}};
}
inline void from_json(const json& j, ControllerConfig& c) {
    detail::reject_unknown(j, {"v_min", "v_max", "height_filter_segments", "height_filter_window", "dh_desired", "v_nominal", "mode",
                               "lookahead_distance", "tick_rate", "segments"},
                           "controller");
    detail::read_opt(j, "v_min", c.v_min);
    detail::read_opt(j, "v_max", c.v_max);
    detail::read_opt(j, "height_filter_segments", c.height_filter_segments);
    detail::read_opt(j, "height_filter_window", c.height_filter_window);
    detail::read_opt(j, "dh_desired", c.dh_desired);
    detail::read_opt(j, "v_nominal", c.v_nominal);
    if (j.contains("mode")) c.mode = run_mode_from_string(j.at("mode").get<std::string>());
    detail::read_opt(j, "lookahead_distance", c.lookahead_distance);
    detail::read_opt(j, "tick_rate", c.tick_rate);
    detail::read_opt(j, "segments", c.segments);
}

inline void to_json(json& j, const PartSpec& p) {
    j = {{"kind", to_string(p.kind)}, {"target_height", p.target_height}};
    switch (p.kind) {
        case PartKind::wall: j["wall"] = {{"width", p.wall.width}, {"thickness", p.wall.thickness}}; break;
        case PartKind::blade:
            j["blade"] = {{"base_width", p.blade.base_width},
                          {"taper_rate", p.blade.taper_rate},
                          {"curvature", p.blade.curvature},
                          {"thickness", p.blade.thickness}};
            break;
        case PartKind::cylinder: j["cylinder"] = {{"radius", p.cylinder.radius}}; break;
    }
}
inline void from_json(const json& j, PartSpec& p) {
    detail::reject_unknown(j, {"kind", "target_height", "wall", "blade", "cylinder"}, "part");
    if (j.contains("kind")) p.kind = part_kind_from_string(j.at("kind").get<std::string>());
    detail::read_opt(j, "target_height", p.target_height);
    if (auto it = j.find("wall"); it != j.end()) {
        detail::reject_unknown(*it, {"width", "thickness"}, "part.wall");
        detail::read_opt(*it, "width", p.wall.width);
        detail::read_opt(*it, "thickness", p.wall.thickness);
    }
    if (auto it = j.find("blade"); it != j.end()) {
        detail::reject_unknown(*it, {"base_width", "taper_rate", "curvature", "thickness"}, "part.blade");
        detail::read_opt(*it, "base_width", p.blade.base_width);
        detail::read_opt(*it, "taper_rate", p.blade.taper_rate);
        detail::read_opt(*it, "curvature", p.blade.curvature);
        detail::read_opt(*it, "thickness", p.blade.thickness);
    }
    if (auto it = j.find("cylinder"); it != j.end()) {
        detail::reject_unknown(*it, {"radius"}, "part.cylinder");
        detail::read_opt(*it, "radius", p.cylinder.radius);
    }
}

inline void to_json(json& j, const PhysicalBeadParams& p) {
    j = {{"wire_section", p.wire_section}, {"melt_rate", p.melt_rate}, {"width_ratio", p.width_ratio}};
}
inline void from_json(const json& j, PhysicalBeadParams& p) {
    detail::reject_unknown(j, {"wire_section", "melt_rate", "width_ratio"}, "physical");
    detail::read_opt(j, "wire_section", p.wire_section);
    detail::read_opt(j, "melt_rate", p.melt_rate);
    detail::read_opt(j, "width_ratio", p.width_ratio);
}

inline void to_json(json& j, const MaterialPreset& m) {
    j = {{"name", m.name}, {"models", m.models}, {"disturbance", m.disturbance}, {"physical", m.physical}};
}
/// Accepts a preset name or a full object; a "base" key starts from a named preset.
inline void from_json(const json& j, MaterialPreset& m) {
    if (j.is_string()) {
        m = material_preset(j.get<std::string>());
        return;
    }
    detail::reject_unknown(j, {"name", "base", "models", "disturbance", "physical"}, "material");
    if (j.contains("base")) m = material_preset(j.at("base").get<std::string>());
    detail::read_opt(j, "name", m.name);
    if (j.contains("models")) m.models = j.at("models").get<std::vector<DepositionModel>>();
    if (j.contains("disturbance")) j.at("disturbance").get_to(m.disturbance);
    if (j.contains("physical")) j.at("physical").get_to(m.physical);
    std::sort(m.models.begin(), m.models.end(),
              [](const DepositionModel& x, const DepositionModel& y) { return x.feed_rate < y.feed_rate; });
}

inline void to_json(json& j, const ExperimentSetup& s) {
    j = {{"name", s.name},
         {"part", s.part},
         {"material", s.material},
         {"feed_rate", s.feed_rate},
         {"disturbance", s.disturbance},
         {"scanner", s.scanner},
         {"perception", s.perception},
         {"controller", s.controller},
         {"seeds", {{"plant", s.plant_seed}, {"scanner", s.scanner_seed}}},
         {"grid_pitch", s.grid_pitch},
         {"edge_margin", s.edge_margin},
         {"layers", s.layers}};
}

/// Overlay a JSON experiment description onto `s`. A material given without
/// an explicit disturbance block brings its own disturbance defaults.
inline void apply_json(const json& j, ExperimentSetup& s) {
    detail::reject_unknown(j, {"name", "preset", "part", "material", "feed_rate", "disturbance", "scanner",
                               "perception", "controller", "seeds", "grid_pitch", "edge_margin", "layers",
                               "staircase"},
                           "experiment");
    detail::read_opt(j, "name", s.name);
    if (j.contains("part")) j.at("part").get_to(s.part);
    if (j.contains("material")) {
        j.at("material").get_to(s.material);
        s.disturbance = s.material.disturbance;
    }
    detail::read_opt(j, "feed_rate", s.feed_rate);
    if (j.contains("disturbance")) j.at("disturbance").get_to(s.disturbance);
    if (j.contains("scanner")) j.at("scanner").get_to(s.scanner);
    if (j.contains("perception")) j.at("perception").get_to(s.perception);
    if (j.contains("controller")) j.at("controller").get_to(s.controller);
    if (auto it = j.find("seeds"); it != j.end()) {
        detail::reject_unknown(*it, {"plant", "scanner"}, "seeds");
        detail::read_opt(*it, "plant", s.plant_seed);
        detail::read_opt(*it, "scanner", s.scanner_seed);
    }
    detail::read_opt(j, "grid_pitch", s.grid_pitch);
    detail::read_opt(j, "edge_margin", s.edge_margin);
    detail::read_opt(j, "layers", s.layers);
}

inline void from_json(const json& j, ExperimentSetup& s) {
    s = ExperimentSetup{};
    apply_json(j, s);
}

inline void to_json(json& j, const HeightProfile& p) {
    j = {{"length", p.length},
         {"bin_width", p.bin_width},
         {"closed", p.closed},
         {"heights", detail::nan_array(p.heights)},
         {"counts", p.counts}};
}
inline void from_json(const json& j, HeightProfile& p) {
    p.length = j.at("length").get<double>();
    p.bin_width = j.at("bin_width").get<double>();
    p.closed = j.at("closed").get<bool>();
    p.heights = detail::nan_array_from(j.at("heights"));
    p.counts = j.at("counts").get<std::vector<std::size_t>>();
    if (p.heights.size() != p.counts.size()) throw ConfigError("profile heights and counts differ in length");
}

inline void to_json(json& j, const LayerMetrics& m) {
    j = {{"layer", m.layer},
         {"std_with_edge", m.std_with_edge},
         {"std_without_edge", m.std_without_edge},
         {"tracking_rmse", m.tracking_rmse}};
}
inline void from_json(const json& j, LayerMetrics& m) {
    m.layer = j.at("layer").get<std::size_t>();
    m.std_with_edge = j.at("std_with_edge").get<double>();
    m.std_without_edge = j.at("std_without_edge").get<double>();
    m.tracking_rmse = j.at("tracking_rmse").get<double>();
}

inline void to_json(json& j, const LayerLog& l) {
    j = {{"index", l.index},
         {"speeds", l.speeds.speeds},
         {"truth", l.truth},
         {"truth_target", l.truth_target},
         {"metrics", l.metrics}};
    if (l.target)
        j["target"] = {{"target", l.target->target},
                       {"layer_height", l.target->layer_height},
                       {"desired_gain", l.target->desired_gain}};
    if (!l.segment_targets.empty()) j["segment_targets"] = l.segment_targets;
    if (l.measured) j["measured"] = *l.measured;
}
inline void from_json(const json& j, LayerLog& l) {
    l.index = j.at("index").get<std::size_t>();
    l.speeds = {l.index, j.at("speeds").get<std::vector<double>>()};
    j.at("truth").get_to(l.truth);
    l.truth_target = j.at("truth_target").get<double>();
    j.at("metrics").get_to(l.metrics);
    if (auto it = j.find("target"); it != j.end())
        l.target = LayerTarget{it->at("target").get<double>(), it->at("layer_height").get<double>(),
                               it->at("desired_gain").get<double>()};
    detail::read_opt(j, "segment_targets", l.segment_targets);
    if (auto it = j.find("measured"); it != j.end()) l.measured = it->get<HeightProfile>();
}

inline void to_json(json& j, const ContinuousAudit& a) {
    j = {{"lookahead", a.lookahead},
         {"max_lag_error", a.max_lag_error},
         {"mean_lag", a.mean_lag},
         {"max_tick_travel", a.max_tick_travel},
         {"max_delay_error_ticks", a.max_delay_error_ticks},
         {"samples", a.samples}};
}
inline void from_json(const json& j, ContinuousAudit& a) {
    a.lookahead = j.at("lookahead").get<double>();
    a.max_lag_error = j.at("max_lag_error").get<double>();
    a.mean_lag = j.at("mean_lag").get<double>();
    a.max_tick_travel = j.at("max_tick_travel").get<double>();
    a.max_delay_error_ticks = j.at("max_delay_error_ticks").get<double>();
    a.samples = j.at("samples").get<std::size_t>();
}

inline void to_json(json& j, const SurfaceHeightField& s) {
    j = {{"length", s.length}, {"pitch", s.pitch}, {"closed", s.closed}, {"layers", s.layers}, {"heights", s.heights}};
}
inline void from_json(const json& j, SurfaceHeightField& s) {
    s.length = j.at("length").get<double>();
    s.pitch = j.at("pitch").get<double>();
    s.closed = j.at("closed").get<bool>();
    s.layers = j.at("layers").get<std::size_t>();
    s.heights = j.at("heights").get<std::vector<double>>();
}

inline constexpr int record_schema_version = 1;

inline void to_json(json& j, const RunRecord& r) {
    j = {{"schema", record_schema_version},
         {"setup", r.setup},
         {"mode", to_string(r.mode)},
         {"source_mode", to_string(r.source_mode)},
         {"seeds", {{"plant", r.plant_seed}, {"scanner", r.scanner_seed}}},
         {"layers", r.layers},
         {"final_surface", r.final_surface},
         {"complete", r.complete},
         {"abort_reason", r.abort_reason}};
    if (r.audit) j["audit"] = *r.audit;
}

inline void from_json(const json& j, RunRecord& r) {
    try {
        if (j.at("schema").get<int>() != record_schema_version)
            throw ConfigError("unsupported run record schema " + j.at("schema").dump());
        r.setup = j.at("setup").get<ExperimentSetup>();
        r.mode = run_mode_from_string(j.at("mode").get<std::string>());
        r.source_mode = run_mode_from_string(j.at("source_mode").get<std::string>());
        r.plant_seed = j.at("seeds").at("plant").get<std::uint64_t>();
        r.scanner_seed = j.at("seeds").at("scanner").get<std::uint64_t>();
        r.layers = j.at("layers").get<std::vector<LayerLog>>();
        r.final_surface = j.at("final_surface").get<SurfaceHeightField>();
        r.complete = j.at("complete").get<bool>();
        r.abort_reason = j.at("abort_reason").get<std::string>();
        if (j.contains("audit")) r.audit = j.at("audit").get<ContinuousAudit>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed run record: ") + e.what());
    }
}

inline void to_json(json& j, const IdRow& r) { j = {{"v", r.v}, {"dh", r.dh}, {"layer", r.layer}}; }

inline void to_json(json& j, const RunSummary& s) {
    j = {{"mean_std_with_edge", s.mean_std_with_edge},
         {"mean_std_without_edge", s.mean_std_without_edge},
         {"mean_tracking_rmse", s.mean_tracking_rmse},
         {"geometry_mean_error", s.geometry.mean_error},
         {"geometry_max_error", s.geometry.max_error},
         {"layers", s.layers}};
}

// ---- files -----------------------------------------------------------------

inline json parse_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline std::string record_json(const RunRecord& r) { return dump(json(r)); }

inline RunRecord load_record(const std::filesystem::path& path) { return parse_json_file(path).get<RunRecord>(); }

inline std::string surface_csv(const SurfaceHeightField& s) {
    std::ostringstream out;
    out << "s,h\n";
    for (std::size_t j = 0; j < s.size(); ++j) out << detail::num(s.position(j)) << ',' << detail::num(s.heights[j]) << '\n';
    return out.str();
}

inline std::string profile_csv(const HeightProfile& p) {
    std::ostringstream out;
    out << "s_bin,height,count\n";
    for (std::size_t i = 0; i < p.size(); ++i)
        out << detail::num(p.center(i)) << ',' << detail::num(p.heights[i]) << ',' << p.counts[i] << '\n';
    return out.str();
}

inline std::string metrics_csv(const RunRecord& r) {
    std::ostringstream out;
    out << "layer,std_with_edge,std_without_edge,tracking_rmse\n";
    for (const auto& l : r.layers)
        out << l.metrics.layer << ',' << detail::num(l.metrics.std_with_edge) << ','
            << detail::num(l.metrics.std_without_edge) << ',' << detail::num(l.metrics.tracking_rmse) << '\n';
    return out.str();
}

inline std::string speeds_csv(const RunRecord& r) {
    std::ostringstream out;
    out << "layer,segment,speed\n";
    for (const auto& l : r.layers)
        for (std::size_t k = 0; k < l.speeds.speeds.size(); ++k)
            out << l.index << ',' << k << ',' << detail::num(l.speeds.speeds[k]) << '\n';
    return out.str();
}

inline std::string xyz(const PointCloud& cloud) {
    std::ostringstream out;
    for (const auto& p : cloud.points)
        out << detail::num(p.x, "%.6f") << ' ' << detail::num(p.y, "%.6f") << ' ' << detail::num(p.z, "%.6f") << '\n';
    return out.str();
}

inline PointCloud read_xyz(std::istream& in) {
    PointCloud cloud;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        Point3 p;
        if (!(ls >> p.x >> p.y >> p.z)) throw ConfigError("bad point on line " + std::to_string(lineno));
        cloud.points.push_back(p);
        cloud.tags.push_back(PointTag::inlier);
    }
    return cloud;
}

inline std::string dataset_csv(const IdDataset& d) {
    std::ostringstream out;
    out << "v,dh,layer\n";
    for (const auto& r : d.rows) out << detail::num(r.v) << ',' << detail::num(r.dh) << ',' << r.layer << '\n';
    return out.str();
}

inline std::string models_csv(std::span<const DepositionModel> models) {
    std::ostringstream out;
    out << "feed_rate,a,b,rmse\n";
    for (const auto& m : models)
        out << detail::num(m.feed_rate) << ',' << detail::num(m.a) << ',' << detail::num(m.b) << ','
            << detail::num(m.rmse) << '\n';
    return out.str();
}

}  // namespace waam
