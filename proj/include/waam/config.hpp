#pragma once

// Experiment configuration files and the shipped named presets.

#include <filesystem>
#include <string>
#include <vector>

#include "waam/controller.hpp"
#include "waam/io.hpp"
#include "waam/modelid.hpp"

namespace waam {

struct ExperimentConfig {
    ExperimentSetup setup;
    StaircaseSchedule staircase;
};

inline void to_json(json& j, const StaircaseSchedule& s) {
    j = {{"base_layers", s.base_layers},
         {"v_start", s.v_start},
         {"v_end", s.v_end},
         {"v_step", s.v_step},
         {"layers_per_speed", s.layers_per_speed},
         {"feed_rate", s.feed_rate}};
}
inline void from_json(const json& j, StaircaseSchedule& s) {
    detail::reject_unknown(j, {"base_layers", "v_start", "v_end", "v_step", "layers_per_speed", "feed_rate"},
                           "staircase");
    detail::read_opt(j, "base_layers", s.base_layers);
    detail::read_opt(j, "v_start", s.v_start);
    detail::read_opt(j, "v_end", s.v_end);
    detail::read_opt(j, "v_step", s.v_step);
    detail::read_opt(j, "layers_per_speed", s.layers_per_speed);
    detail::read_opt(j, "feed_rate", s.feed_rate);
}

inline void to_json(json& j, const ExperimentConfig& c) {
    j = json(c.setup);
    j["staircase"] = c.staircase;
}

inline std::vector<std::string> preset_names() {
    return {"paper-wall-aluminum", "paper-wall-steel", "paper-blade", "paper-cylinder-continuous",
            "paper-staircase-100ipm"};
}

inline ExperimentConfig named_preset(const std::string& name) {
    ExperimentConfig c;
    auto& s = c.setup;
    s.name = name;
    if (name == "paper-wall-aluminum" || name == "paper-staircase-100ipm") {
        s.material = aluminum_preset();
        s.disturbance = s.material.disturbance;
        s.feed_rate = 100.0;
        s.controller.dh_desired = 2.34;
        s.controller.v_nominal = 5.0;
        s.layers = 22;
        c.staircase.feed_rate = 100.0;
        if (name == "paper-staircase-100ipm") s.layers = c.staircase.total_layers();
        return c;
    }
    if (name == "paper-wall-steel") {
        s.material = steel_preset();
        s.disturbance = s.material.disturbance;
        s.feed_rate = 200.0;
        s.controller.dh_desired = 1.35;
        s.controller.v_nominal = 7.0;
        s.layers = 22;
        c.staircase.feed_rate = 200.0;
        return c;
    }
    if (name == "paper-blade") {
        s.part.kind = PartKind::blade;
        s.material = aluminum_preset();
        s.disturbance = s.material.disturbance;
        s.feed_rate = 100.0;
        s.controller.dh_desired = 2.34;
        s.controller.v_nominal = 5.0;
        s.layers = 0;
        return c;
    }
    if (name == "paper-cylinder-continuous") {
        s.part.kind = PartKind::cylinder;
        s.part.cylinder.radius = 35.0;
        s.part.target_height = 36.0;
        s.material = aluminum_preset();
        s.disturbance = s.material.disturbance;
        s.feed_rate = 160.0;
        s.controller.dh_desired = 1.80;
        s.controller.mode = RunMode::continuous;
        s.controller.lookahead_distance = std::numbers::pi * s.part.cylinder.radius;
        // Same filter length in mm as the wall default (3 x 1.625 mm); one segment here.
        s.controller.height_filter_window = 4.875;
        s.layers = 20;
        return c;
    }
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
}

/// Overlay a JSON document onto a config. A "preset" key, if present, picks
/// the starting point; everything else overrides it.
inline ExperimentConfig config_from_json(const json& j, ExperimentConfig base = {}) {
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    ExperimentConfig c = j.contains("preset") ? named_preset(j.at("preset").get<std::string>()) : std::move(base);
    try {
        apply_json(j, c.setup);
        if (j.contains("staircase")) j.at("staircase").get_to(c.staircase);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad configuration value: ") + e.what());
    }
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {}) {
    return config_from_json(parse_json_file(path), std::move(base));
}

/// The staircase identification stack implied by an experiment config.
inline IdentificationSetup identification_setup(const ExperimentConfig& c) {
    const auto& s = c.setup;
    IdentificationSetup id;
    id.part = s.part;
    id.plant_model = interpolate_model(s.material.models, c.staircase.feed_rate);
    id.disturbance = s.plant_disturbance();
    id.scanner = s.scanner;
    id.perception = s.perception;
    id.bead_width = s.bead_width();
    id.grid_pitch = s.grid_pitch;
    id.segments = s.controller.segments;
    return id;
}

}  // namespace waam
