#pragma once

// Baseline vs corrected comparison tables and plot-ready series.

#include <sstream>
#include <string>

#include "waam/controller.hpp"
#include "waam/io.hpp"
#include "waam/metrics.hpp"

namespace waam {

struct Comparison {
    RunSummary baseline;
    RunSummary corrected;
    int std_with_edge_pct = 0;
    int std_without_edge_pct = 0;
    int tracking_rmse_pct = 0;
};

inline Comparison compare(const RunRecord& baseline, const RunRecord& corrected,
                          PercentRounding rounding = PercentRounding::toward_zero) {
    Comparison c;
    c.baseline = summarize(baseline);
    c.corrected = summarize(corrected);
    c.std_with_edge_pct = improvement_pct(c.baseline.mean_std_with_edge, c.corrected.mean_std_with_edge, rounding);
    c.std_without_edge_pct =
        improvement_pct(c.baseline.mean_std_without_edge, c.corrected.mean_std_without_edge, rounding);
    c.tracking_rmse_pct =
        improvement_pct(c.baseline.mean_tracking_rmse, c.corrected.mean_tracking_rmse, rounding);
    return c;
}

inline void to_json(json& j, const Comparison& c) {
    j = {{"baseline", c.baseline},
         {"corrected", c.corrected},
         {"improvement_pct",
          {{"std_with_edge", c.std_with_edge_pct},
           {"std_without_edge", c.std_without_edge_pct},
           {"tracking_rmse", c.tracking_rmse_pct}}}};
}

inline std::string comparison_markdown(const Comparison& c, const std::string& baseline_label,
                                       const std::string& corrected_label) {
    auto f = [](double v) { return detail::num(v, "%.2f"); };
    std::ostringstream out;
    out << "| | Mean height STD (with edges) [mm] | Mean height STD (without edges) [mm] | Mean tracking RMSE [mm] |\n";
    out << "|---|---|---|---|\n";
    out << "| " << baseline_label << " | " << f(c.baseline.mean_std_with_edge) << " | "
        << f(c.baseline.mean_std_without_edge) << " | " << f(c.baseline.mean_tracking_rmse) << " |\n";
    out << "| " << corrected_label << " | " << f(c.corrected.mean_std_with_edge) << " | "
        << f(c.corrected.mean_std_without_edge) << " | " << f(c.corrected.mean_tracking_rmse) << " |\n";
    out << "| Improvement | " << c.std_with_edge_pct << "% | " << c.std_without_edge_pct << "% | "
        << c.tracking_rmse_pct << "% |\n";
    return out.str();
}

/// Single-run table: same columns, no Improvement row.
inline std::string summary_markdown(const RunSummary& s, const std::string& label) {
    auto f = [](double v) { return detail::num(v, "%.2f"); };
    std::ostringstream out;
    out << "| | Mean height STD (with edges) [mm] | Mean height STD (without edges) [mm] | Mean tracking RMSE [mm] |\n";
    out << "|---|---|---|---|\n";
    out << "| " << label << " | " << f(s.mean_std_with_edge) << " | " << f(s.mean_std_without_edge) << " | "
        << f(s.mean_tracking_rmse) << " |\n";
    return out.str();
}

inline std::string comparison_csv(const Comparison& c, const std::string& baseline_label,
                                  const std::string& corrected_label) {
    std::ostringstream out;
    out << "row,std_with_edge,std_without_edge,tracking_rmse\n";
    out << baseline_label << ',' << detail::num(c.baseline.mean_std_with_edge) << ','
        << detail::num(c.baseline.mean_std_without_edge) << ',' << detail::num(c.baseline.mean_tracking_rmse) << '\n';
    out << corrected_label << ',' << detail::num(c.corrected.mean_std_with_edge) << ','
        << detail::num(c.corrected.mean_std_without_edge) << ',' << detail::num(c.corrected.mean_tracking_rmse)
        << '\n';
    out << "improvement_pct," << c.std_with_edge_pct << ',' << c.std_without_edge_pct << ','
        << c.tracking_rmse_pct << '\n';
    return out.str();
}

/// Layer-by-layer STD and RMSE of both runs side by side.
inline std::string std_series_csv(const RunRecord& baseline, const RunRecord& corrected) {
    std::ostringstream out;
    out << "layer,baseline_std_with_edge,baseline_std_without_edge,baseline_rmse,"
           "corrected_std_with_edge,corrected_std_without_edge,corrected_rmse\n";
    const auto n = std::max(baseline.layers.size(), corrected.layers.size());
    auto cell = [](const RunRecord& r, std::size_t i, int which) -> std::string {
        if (i >= r.layers.size()) return "";
        const auto& m = r.layers[i].metrics;
        return detail::num(which == 0 ? m.std_with_edge : which == 1 ? m.std_without_edge : m.tracking_rmse);
    };
    for (std::size_t i = 0; i < n; ++i) {
        out << i;
        for (const auto* r : {&baseline, &corrected})
            for (int w = 0; w < 3; ++w) out << ',' << cell(*r, i, w);
        out << '\n';
    }
    return out.str();
}

}  // namespace waam
