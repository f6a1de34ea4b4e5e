#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "waam/config.hpp"
#include "waam/io.hpp"

using namespace waam;

namespace {

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

RunRecord small_stepwise() {
    auto s = named_preset("paper-wall-aluminum").setup;
    s.layers = 3;
    return run_stepwise(s);
}

}  // namespace

TEST(Json, ModelRoundTrip) {
    const DepositionModel m{150.0, -0.44, 1.37, 0.18};
    EXPECT_EQ(json(m).get<DepositionModel>(), m);
}

TEST(Json, DoublesRoundTripExactly) {
    DepositionModel m{100.0, -0.1 - 0.2, std::nextafter(1.85, 2.0), 1.0 / 3.0};
    const auto back = json::parse(json(m).dump()).get<DepositionModel>();
    EXPECT_EQ(back, m);
}

TEST(Json, SetupRoundTrip) {
    auto s = named_preset("paper-cylinder-continuous").setup;
    s.plant_seed = 99;
    const json j = s;
    const auto back = j.get<ExperimentSetup>();
    EXPECT_EQ(json(back).dump(), j.dump());
    EXPECT_EQ(back.controller.mode, RunMode::continuous);
    EXPECT_EQ(back.part.kind, PartKind::cylinder);
}

TEST(Json, RecordRoundTripIsByteIdentical) {
    const auto r = small_stepwise();
    const auto text = record_json(r);
    const auto back = json::parse(text).get<RunRecord>();
    EXPECT_EQ(record_json(back), text);
    EXPECT_EQ(back.final_surface.heights, r.final_surface.heights);
    EXPECT_EQ(back.layers.size(), r.layers.size());
    EXPECT_EQ(back.mode, RunMode::stepwise);
}

TEST(Json, RecordIsDeterministic) {
    EXPECT_EQ(record_json(small_stepwise()), record_json(small_stepwise()));
}

TEST(Json, EmptyBinsBecomeNull) {
    auto p = HeightProfile::bins_for(2.0, 1.0, false);
    p.heights[0] = 1.5;
    p.counts[0] = 4;
    const json j = p;
    EXPECT_TRUE(j.at("heights")[1].is_null());
    const auto back = j.get<HeightProfile>();
    EXPECT_EQ(back.heights[0], 1.5);
    EXPECT_TRUE(std::isnan(back.heights[1]));
}

TEST(Json, RecordSchemaMismatchIsConfigError) {
    auto j = json(small_stepwise());
    j["schema"] = 99;
    EXPECT_THROW(j.get<RunRecord>(), ConfigError);
    json broken = {{"schema", 1}};
    EXPECT_THROW(broken.get<RunRecord>(), ConfigError);
}

TEST(Config, UnknownKeysRejected) {
    EXPECT_THROW(config_from_json(json{{"controler", json::object()}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"controller", {{"vmax", 3}}}}), ConfigError);
    EXPECT_THROW(config_from_json(json::array()), ConfigError);
}

TEST(Config, PresetOverlay) {
    const auto c = config_from_json(json{{"preset", "paper-wall-steel"}, {"layers", 3}, {"seeds", {{"plant", 8}}}});
    EXPECT_EQ(c.setup.layers, 3u);
    EXPECT_EQ(c.setup.plant_seed, 8u);
    EXPECT_EQ(c.setup.feed_rate, 200.0);
    EXPECT_EQ(c.setup.controller.dh_desired, 1.35);
}

TEST(Config, MaterialByNameBringsItsDisturbance) {
    const auto c = config_from_json(json{{"material", "steel"}, {"feed_rate", 200}});
    EXPECT_EQ(c.setup.material.name, "ER70S-6-steel");
    EXPECT_EQ(c.setup.disturbance.edge_droop_depth, steel_preset().disturbance.edge_droop_depth);
    const auto d = config_from_json(json{{"material", "steel"}, {"disturbance", {{"edge_droop_depth", 0.1}}}});
    EXPECT_EQ(d.setup.disturbance.edge_droop_depth, 0.1);
}

TEST(Config, UnknownPresetNamesIt) {
    try {
        named_preset("paper-wall-titanium");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("paper-wall-titanium"), std::string::npos);
    }
}

TEST(Config, PresetsValidate) {
    for (const auto& name : preset_names()) EXPECT_NO_THROW(named_preset(name).setup.validate()) << name;
    const auto cyl = named_preset("paper-cylinder-continuous").setup;
    EXPECT_EQ(cyl.feed_rate, 160.0);
    EXPECT_EQ(cyl.controller.dh_desired, 1.80);
    EXPECT_NEAR(cyl.model().a, -0.445, 1e-12);
    const auto wall = named_preset("paper-wall-aluminum").setup;
    EXPECT_EQ(wall.controller.v_nominal, 5.0);
    EXPECT_EQ(wall.controller.segments, 40u);
    EXPECT_EQ(wall.layer_total(), 22u);
}

TEST(Config, ShippedConfigFilesLoad) {
    const std::filesystem::path dir = WAAM_SOURCE_DIR "/configs";
    std::size_t n = 0;
    for (const auto& f : std::filesystem::directory_iterator(dir)) {
        if (f.path().extension() != ".json") continue;
        ++n;
        EXPECT_NO_THROW(load_config(f.path()).setup.validate()) << f.path();
    }
    EXPECT_GT(n, 0u);
}

TEST(Csv, Headers) {
    const auto r = small_stepwise();
    EXPECT_EQ(first_line(metrics_csv(r)), "layer,std_with_edge,std_without_edge,tracking_rmse");
    EXPECT_EQ(first_line(profile_csv(r.layers[0].truth)), "s_bin,height,count");
    EXPECT_EQ(first_line(surface_csv(r.final_surface)), "s,h");
    EXPECT_EQ(first_line(speeds_csv(r)), "layer,segment,speed");
    IdDataset d;
    d.rows = {{20.0, 1.0, 2}};
    EXPECT_EQ(dataset_csv(d), "v,dh,layer\n20,1,2\n");
    const DepositionModel m{100.0, -0.62, 1.85, 0.27};
    EXPECT_EQ(models_csv(std::span<const DepositionModel>(&m, 1)), "feed_rate,a,b,rmse\n100,-0.62,1.85,0.27\n");
}

TEST(Csv, MetricsRowsMatchLayers) {
    const auto r = small_stepwise();
    const auto text = metrics_csv(r);
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), r.layers.size() + 1);
}

TEST(Xyz, SixDecimalsAndReadBack) {
    PointCloud c;
    c.points = {{1.0, -2.5, 3.1234567}, {0.0, 0.0, 0.0}};
    c.tags = {PointTag::inlier, PointTag::outlier};
    const auto text = xyz(c);
    EXPECT_EQ(first_line(text), "1.000000 -2.500000 3.123457");
    std::istringstream in("# comment\n" + text);
    const auto back = read_xyz(in);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_DOUBLE_EQ(back.points[0].z, 3.123457);
    std::istringstream bad("1 2\n");
    EXPECT_THROW(read_xyz(bad), ConfigError);
}

TEST(Files, MissingAndMalformed) {
    EXPECT_THROW(parse_json_file("/nonexistent/file.json"), ConfigError);
    const auto tmp = std::filesystem::temp_directory_path() / "waam_io_bad.json";
    write_text(tmp, "{ not json");
    EXPECT_THROW(parse_json_file(tmp), ConfigError);
    std::filesystem::remove(tmp);
}
