#include <gtest/gtest.h>

#include <algorithm>

#include "luenn/config.hpp"
#include "luenn/error.hpp"

using namespace luenn;

TEST(Presets, TableValues) {
    struct Row {
        const char* name;
        double mean, sigma, density;
        const char* snr;
    };
    const Row rows[] = {{"AI-1", 1000, 50, 0.77, "low"},       {"AI-2", 5000, 250, 0.77, "medium"},
                        {"AI-3", 20000, 1000, 0.77, "high"},   {"AI-4", 1000, 50, 4.13, "low"},
                        {"AI-5", 5000, 250, 4.13, "medium"},   {"AI-6", 20000, 1000, 4.13, "high"},
                        {"AI-7", 1000, 50, 15.5, "low"},       {"AI-8", 5000, 250, 15.5, "medium"},
                        {"AI-9", 20000, 1000, 15.5, "high"},   {"AI-AS", 1000, 300, 0.62, "low"},
                        {"AI-DH", 3600, 1000, 0.62, "low"}};
    ASSERT_EQ(preset_names().size(), std::size(rows));
    for (const Row& r : rows) {
        const RunConfig cfg = expand_preset(r.name);
        EXPECT_EQ(cfg.preset, r.name);
        EXPECT_EQ(cfg.sim.photon_mean, r.mean) << r.name;
        EXPECT_EQ(cfg.sim.photon_sigma, r.sigma) << r.name;
        EXPECT_EQ(cfg.sim.density, r.density) << r.name;
        EXPECT_EQ(cfg.snr, r.snr) << r.name;
        EXPECT_NO_THROW(cfg.validate());
    }
    EXPECT_EQ(expand_preset("AI-DH").sim.psf.modality, PsfModality::DoubleHelix);
    EXPECT_THROW(expand_preset("AI-10"), ValidationError);
}

TEST(Presets, ReserializeIdentically) {
    for (const auto& name : preset_names()) {
        const std::string text = serialize_config(expand_preset(name));
        EXPECT_EQ(serialize_config(parse_config(text)), text) << name;
    }
}

TEST(ConfigText, SortedAndComplete) {
    const auto keys = config_keys();
    EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
    const std::string text = serialize_config(RunConfig{});
    std::size_t lines = std::count(text.begin(), text.end(), '\n');
    EXPECT_EQ(lines, keys.size());
    for (const char* k : {"sim.density", "camera.pixel_pitch_x", "psf.gamma", "decode.phase_window",
                          "metrics.tol_lateral", "filter.rate", "render.bin_size", "decode.map_noise"}) {
        EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
    }
}

TEST(ConfigText, CommentsAndOverrides) {
    const RunConfig cfg = parse_config("# comment\n\nsim.density = 2.5  # trailing\npsf.modality = double_helix\n"
                                       "render.region = 0,0,100,200\nmetrics.match_mode = lateral\n",
                                       expand_preset("AI-5"));
    EXPECT_EQ(cfg.sim.density, 2.5);
    EXPECT_EQ(cfg.sim.photon_mean, 5000.0);
    EXPECT_EQ(cfg.sim.psf.modality, PsfModality::DoubleHelix);
    ASSERT_TRUE(cfg.render.region.has_value());
    EXPECT_EQ(cfg.render.region->y1, 200.0);
    EXPECT_EQ(cfg.match.mode, MatchMode::Lateral);
}

TEST(ConfigText, ErrorsCarryLine) {
    auto line_of = [](const std::string& text) -> std::size_t {
        try {
            parse_config(text);
        } catch (const ParseError& e) {
            return e.location();
        }
        return 0;
    };
    EXPECT_EQ(line_of("sim.density = 1\nsim.bogus = 3\n"), 2u);
    EXPECT_EQ(line_of("sim.density = 1\n\nsim.density = 2\n"), 3u);
    EXPECT_EQ(line_of("just words\n"), 1u);
    EXPECT_EQ(line_of("sim.n_frames = 1.5\n"), 1u);
    EXPECT_EQ(line_of("psf.modality = spiral\n"), 1u);
}

TEST(ConfigText, SetValueValidatesKey) {
    RunConfig cfg;
    EXPECT_THROW(set_config_value(cfg, "nope", "1"), ValidationError);
    set_config_value(cfg, "sim.seed", "18446744073709551615");
    EXPECT_EQ(cfg.sim.rng_seed, 18446744073709551615ull);
}

TEST(RunConfig, Validation) {
    RunConfig cfg;
    cfg.filter_rate = 0.9;
    EXPECT_THROW(cfg.validate(), RangeError);
    cfg = RunConfig{};
    cfg.map_noise = -1.0;
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg = RunConfig{};
    cfg.convergence.patience = 0;
    EXPECT_THROW(cfg.validate(), ValidationError);
}
