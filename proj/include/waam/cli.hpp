#pragma once

// Command-line front end: identify | run | replay | report.
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "waam/config.hpp"
#include "waam/controller.hpp"
#include "waam/io.hpp"
#include "waam/modelid.hpp"
#include "waam/report.hpp"

namespace waam::cli {

namespace fs = std::filesystem;

enum ExitCode : int { ok = 0, runtime_failure = 1, config_error = 2 };

/// Writes files strictly below one root directory.
class OutputDir {
public:
    explicit OutputDir(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

    void write(const fs::path& relative, const std::string& text) const {
        if (relative.is_absolute()) throw ContractViolation("output path must be relative");
        for (const auto& part : relative)
            if (part == "..") throw ContractViolation("output path escapes the output directory");
        write_text(root_ / relative, text);
    }

    [[nodiscard]] const fs::path& root() const { return root_; }

private:
    fs::path root_;
};

inline void write_record(const OutputDir& out, const fs::path& dir, const RunRecord& r) {
    out.write(dir / "record.json", record_json(r));
    out.write(dir / "metrics.csv", metrics_csv(r));
    out.write(dir / "speeds.csv", speeds_csv(r));
    out.write(dir / "surface.csv", surface_csv(r.final_surface));
    for (const auto& l : r.layers) {
        char name[32];
        std::snprintf(name, sizeof name, "layer_%03zu", l.index);
        out.write(dir / "profiles" / (std::string(name) + "_truth.csv"), profile_csv(l.truth));
        if (l.measured) out.write(dir / "profiles" / (std::string(name) + "_measured.csv"), profile_csv(*l.measured));
    }
}

inline void write_comparison(const OutputDir& out, const RunRecord& baseline, const RunRecord& corrected,
                             const std::string& corrected_label) {
    const auto c = compare(baseline, corrected);
    out.write("report.md", comparison_markdown(c, "Open-loop", corrected_label));
    out.write("report.csv", comparison_csv(c, "open_loop", corrected_label));
    out.write("std_series.csv", std_series_csv(baseline, corrected));
    out.write("summary.json", dump(json(c)));
}

struct Options {
    std::optional<std::string> config;
    std::optional<std::string> preset;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::string out_dir;
};

inline ExperimentConfig resolve_config(const Options& o, const std::string& default_preset) {
    ExperimentConfig c = named_preset(o.preset.value_or(default_preset));
    if (o.config) c = load_config(*o.config, c);
    if (o.seed) {
        c.setup.plant_seed = *o.seed;
        c.setup.scanner_seed = mix_seed(*o.seed, 1);
    }
    if (o.mode) c.setup.controller.mode = run_mode_from_string(*o.mode);
    c.setup.validate();
    return c;
}

inline int cmd_identify(const Options& o, std::ostream& log) {
    const auto c = resolve_config(o, "paper-staircase-100ipm");
    const OutputDir out(o.out_dir);
    out.write("config.json", dump(json(c)));
    const auto data = run_identification(c.staircase, identification_setup(c), c.setup.scanner_seed);
    const auto model = fit_loglog(data, c.staircase.feed_rate);
    out.write("dataset.csv", dataset_csv(data));
    out.write("model.json", dump(json(model)));
    out.write("models.csv", models_csv(std::span<const DepositionModel>(&model, 1)));
    log << "identified " << detail::num(model.feed_rate, "%g") << " ipm: a = " << detail::num(model.a, "%.4f")
        << ", b = " << detail::num(model.b, "%.4f") << ", rmse = " << detail::num(model.rmse, "%.4f") << " mm\n";
    return ok;
}

inline int cmd_run(const Options& o, std::ostream& log) {
    const auto c = resolve_config(o, "paper-wall-aluminum");
    const auto& s = c.setup;
    if (s.controller.mode == RunMode::replay) throw ConfigError("replay needs a recorded run: use the replay command");
    const OutputDir out(o.out_dir);
    out.write("config.json", dump(json(c)));

    const double v_open = nominal_speed(s.model(), s.controller);
    const auto baseline = run_openloop(s, v_open);
    if (s.controller.mode == RunMode::open_loop) {
        write_record(out, "open_loop", baseline);
        out.write("summary.json", dump(json(summarize(baseline))));
        log << "open-loop: " << baseline.layers.size() << " layers, mean STD "
            << detail::num(summarize(baseline).mean_std_with_edge, "%.3f") << " mm\n";
        return ok;
    }
    const auto corrected = run(s);
    write_record(out, "open_loop", baseline);
    write_record(out, to_string(corrected.mode), corrected);
    write_comparison(out, baseline, corrected, to_string(corrected.mode));
    log << comparison_markdown(compare(baseline, corrected), "Open-loop", to_string(corrected.mode));
    if (!corrected.complete) {
        log << "run aborted: " << corrected.abort_reason << "\n";
        return runtime_failure;
    }
    return ok;
}

inline int cmd_replay(const std::string& record_path, const Options& o, std::ostream& log) {
    const auto source = load_record(record_path);
    const auto seed = o.seed.value_or(source.plant_seed);
    const OutputDir out(o.out_dir);
    const auto replay = run_replay(source, seed);

    // Matched baseline on the same fresh plant.
    auto setup = source.setup;
    setup.plant_seed = seed;
    const auto baseline = run_openloop(setup, nominal_speed(setup.model(), setup.controller), source.layers.size());

    write_record(out, "replay", replay);
    write_record(out, "open_loop", baseline);
    write_comparison(out, baseline, replay, "replay");
    const double recorded = summarize(source).mean_std_with_edge;
    const double replayed = summarize(replay).mean_std_with_edge;
    json j = {{"recorded_mean_std_with_edge", recorded},
              {"replay_mean_std_with_edge", replayed},
              {"ratio", replayed / recorded},
              {"plant_seed", seed}};
    out.write("replay_summary.json", dump(j));
    log << "replay mean STD " << detail::num(replayed, "%.3f") << " mm vs recorded " << detail::num(recorded, "%.3f")
        << " mm\n";
    return ok;
}

inline int cmd_report(const std::string& baseline_path, const std::string& corrected_path,
                      const std::string& label, const std::string& out_dir, std::ostream& log) {
    const auto baseline = load_record(baseline_path);
    const OutputDir out(out_dir);
    if (corrected_path.empty()) {
        const auto s = summarize(baseline);
        const auto table = summary_markdown(s, to_string(baseline.mode));
        out.write("report.md", table);
        out.write("summary.json", dump(json(s)));
        log << table;
        return ok;
    }
    const auto corrected = load_record(corrected_path);
    write_comparison(out, baseline, corrected, label);
    log << comparison_markdown(compare(baseline, corrected), "Open-loop", label);
    return ok;
}

inline int main(int argc, const char* const* argv, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Layer-height feedback simulator for wire arc additive manufacturing"};
    app.require_subcommand(1);

    Options o;
    auto add_common = [&](CLI::App* sub, bool with_mode) {
        sub->add_option("--config", o.config, "Experiment JSON file");
        sub->add_option("--preset", o.preset, "Named preset to start from");
        sub->add_option("--seed", o.seed, "Plant seed (the scanner seed is derived from it)");
        sub->add_option("--out", o.out_dir, "Output directory")->required();
        if (with_mode)
            sub->add_option("--mode", o.mode, "open | stepwise | continuous | replay")
                ->check(CLI::IsMember({"open", "stepwise", "continuous", "replay"}));
    };

    auto* identify = app.add_subcommand("identify", "Staircase experiment and log-log model fit");
    add_common(identify, false);

    auto* run_cmd = app.add_subcommand("run", "Print a part; closed-loop modes also run the open-loop baseline");
    add_common(run_cmd, true);

    std::string record_path;
    auto* replay = app.add_subcommand("replay", "Re-apply recorded speeds on a fresh plant");
    replay->add_option("record", record_path, "record.json of a previous run")->required();
    replay->add_option("--seed", o.seed, "Plant seed for the replay");
    replay->add_option("--out", o.out_dir, "Output directory")->required();

    std::string baseline_path, corrected_path, label = "closed_loop";
    auto* report = app.add_subcommand("report", "Comparison table from two run records");
    report->add_option("--baseline", baseline_path, "Open-loop record.json")->required();
    report->add_option("--corrected", corrected_path, "Corrected record.json; omit for a single-run table");
    report->add_option("--label", label, "Row label of the corrected run");
    report->add_option("--out", o.out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, log, err);
        return code == 0 ? ok : config_error;
    }

    try {
        if (identify->parsed()) return cmd_identify(o, log);
        if (run_cmd->parsed()) return cmd_run(o, log);
        if (replay->parsed()) return cmd_replay(record_path, o, log);
        if (report->parsed()) return cmd_report(baseline_path, corrected_path, label, o.out_dir, log);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return config_error;
    } catch (const ExtrapolationError& e) {
        err << "configuration error: " << e.what() << "\n";
        return config_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return runtime_failure;
    }
    return config_error;
}

}  // namespace waam::cli
