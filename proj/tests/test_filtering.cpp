#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "luenn/error.hpp"
#include "luenn/filtering.hpp"

using namespace luenn;

namespace {

Seed featured(double x, double mag, double sharp, double disp, std::int64_t frame = 0) {
    Seed s;
    s.x = x;
    s.peak_magnitude = mag;
    s.peak_sharpness = sharp;
    s.phase_dispersion = disp;
    s.frame_id = frame;
    return s;
}

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * (i + j);
        i = j + 1;
    }
    return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(Proxy, IsolatedNoiselessEmitterHasZeroAxialScore) {
    const EmitterSet set{0, {{0, 800.0, 800.0, 200.0, 1.0}}};
    CameraModel cam;
    const auto r = decode(encode_targets(set, cam, -750.0, 750.0, DecodeConfig{}), DecodeConfig{});
    ASSERT_EQ(r.seeds.size(), 1u);
    const auto u = proxy_uncertainty(r.seeds, ProxyConfig{});
    EXPECT_NEAR(u[0].sigma_z, 0.0, 1e-9);
    EXPECT_GT(u[0].sigma_x, 0.0);
}

TEST(Proxy, HalvedMagnitudeDoublesLateral) {
    const std::vector<Seed> s{featured(0, 0.8, 1.5, 0.1), featured(0, 0.4, 1.5, 0.1)};
    const auto u = proxy_uncertainty(s, ProxyConfig{});
    EXPECT_DOUBLE_EQ(u[1].sigma_x, 2.0 * u[0].sigma_x);
    EXPECT_DOUBLE_EQ(u[1].sigma_z, u[0].sigma_z);
}

TEST(Proxy, MissingFeaturesGiveNaN) {
    const std::vector<Seed> s{featured(0, 0.0, 1.5, 0.1), featured(0, 0.8, -1.0, 0.1),
                              featured(0, 0.8, 1.5, std::nan(""))};
    for (const auto& u : proxy_uncertainty(s, ProxyConfig{})) EXPECT_TRUE(std::isnan(u.scalar));
}

TEST(Proxy, CalibrationRecoversScale) {
    // Errors built as exact multiples of the raw proxy terms.
    const double cl = 3.0, ca = 0.5, span = 1500.0;
    std::vector<EmitterSet> gt{{0, {}}};
    std::vector<Seed> seeds;
    for (int i = 0; i < 50; ++i) {
        const double mag = 0.5 + 0.01 * i, sharp = 1.0 + 0.02 * i, disp = 0.001 * (i + 1);
        const double lat = cl / (mag * std::sqrt(sharp));
        const double ax = ca * disp * span;
        gt[0].emitters.push_back({i, 1000.0 * i, 0.0, 0.0, 1.0});
        Seed s = featured(1000.0 * i + lat, mag, sharp, disp);
        s.y = lat;
        s.z = ax;
        seeds.push_back(s);
    }
    const auto cfg = calibrate_proxy(seeds, gt, MatchConfig{}, span);
    EXPECT_NEAR(cfg.c_lateral, cl, 1e-9);
    EXPECT_NEAR(cfg.c_axial, ca, 1e-9);
    EXPECT_EQ(cfg.z_span, span);
}

TEST(Proxy, RanksTrueErrors) {
    // Spearman correlation of the frozen proxy with the true 3D error on a noisy oracle run.
    SimConfig sim;
    sim.density = 15.49587;
    sim.rng_seed = 31;
    const auto source = oracle_decoder(DecodeConfig{}, 0.05);
    std::vector<EmitterSet> gt;
    LocalizationSet seeds;
    for (int f = 0; f < 40; ++f) {
        gt.push_back(simulate_ground_truth(sim, f));
        const auto s = source(gt.back(), sim);
        seeds.insert(seeds.end(), s.begin(), s.end());
    }
    const auto truth = oracle_scores(gt, seeds);
    const auto proxy = scalar_scores(proxy_uncertainty(seeds, ProxyConfig{}));
    std::vector<double> a, b;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (std::isfinite(truth[i]) && std::isfinite(proxy[i])) {
            a.push_back(truth[i]);
            b.push_back(proxy[i]);
        }
    }
    ASSERT_GT(a.size(), 9000u);
    EXPECT_GT(pearson(ranks(a), ranks(b)), 0.3);
}

TEST(OracleScores, FalsePositivesAreInfinite) {
    std::vector<EmitterSet> gt{{0, {{0, 0, 0, 0, 1}}}};
    std::vector<Seed> seeds{featured(3, 1, 1, 0), featured(5000, 1, 1, 0)};
    seeds[0].y = 4;
    const auto s = oracle_scores(gt, seeds);
    EXPECT_DOUBLE_EQ(s[0], 5.0);
    EXPECT_TRUE(std::isinf(s[1]));
}

TEST(FilterByRate, RateZeroIsIdentity) {
    std::vector<Seed> seeds{featured(1, 1, 1, 0), featured(2, 1, 1, 0), featured(3, 1, 1, 0)};
    const std::vector<double> scores{3.0, 1.0, 2.0};
    EXPECT_EQ(filter_by_rate(seeds, scores, 0.0), seeds);
}

TEST(FilterByRate, HalfOfFourKeepsLowest) {
    std::vector<Seed> seeds{featured(1, 1, 1, 0), featured(2, 1, 1, 0), featured(3, 1, 1, 0), featured(4, 1, 1, 0)};
    const std::vector<double> scores{4.0, 1.0, 3.0, 2.0};
    const auto kept = filter_by_rate(seeds, scores, 0.5);
    ASSERT_EQ(kept.size(), 2u);
    EXPECT_EQ(kept[0].x, 2.0);
    EXPECT_EQ(kept[1].x, 4.0);
}

TEST(FilterByRate, CeilingEdge) {
    std::vector<Seed> seeds{featured(1, 1, 1, 0), featured(2, 1, 1, 0), featured(3, 1, 1, 0)};
    const std::vector<double> scores{1.0, 2.0, 3.0};
    EXPECT_TRUE(filter_by_rate(seeds, scores, 0.85).empty());
    EXPECT_EQ(surviving_indices(seeds, scores, 0.1).size(), 2u);  // ceil(0.3) = 1
}

TEST(FilterByRate, RangeChecked) {
    std::vector<Seed> seeds{featured(1, 1, 1, 0)};
    const std::vector<double> scores{1.0};
    EXPECT_THROW(filter_by_rate(seeds, scores, 0.9), RangeError);
    EXPECT_THROW(filter_by_rate(seeds, scores, -0.1), RangeError);
}

TEST(FilterByRate, NaNAndTies) {
    std::vector<Seed> seeds{featured(1, 1, 1, 0, 2), featured(2, 1, 1, 0, 1), featured(3, 1, 1, 0, 1),
                            featured(4, 1, 1, 0, 0)};
    const std::vector<double> scores{1.0, 1.0, std::nan(""), 0.5};
    // NaN goes first, then the tie between frame 2 and frame 1 drops frame 2.
    EXPECT_EQ(surviving_indices(seeds, scores, 0.5), (std::vector<std::size_t>{1, 3}));
}

TEST(FilterByThreshold, KeepsAtOrBelow) {
    std::vector<Seed> seeds{featured(1, 1, 1, 0), featured(2, 1, 1, 0), featured(3, 1, 1, 0)};
    const std::vector<double> scores{1.0, 2.0, std::nan("")};
    const auto kept = filter_by_threshold(seeds, scores, 2.0);
    ASSERT_EQ(kept.size(), 2u);
}

TEST(FilterSweep, RateZeroMatchesUnfiltered) {
    std::vector<EmitterSet> gt{{0, {{0, 0, 0, 0, 1}, {1, 1000, 0, 0, 1}, {2, 2000, 0, 0, 1}}}};
    std::vector<Seed> seeds{featured(10, 1, 1, 0), featured(1003, 1, 1, 0), featured(5000, 1, 1, 0)};
    const std::vector<double> scores{1.0, 2.0, 3.0};
    const std::vector<double> rates{0.0};
    const auto curve = filter_sweep(gt, seeds, scores, rates);
    const auto report = make_report(evaluate_frames(gt, seeds));
    ASSERT_EQ(curve.size(), 1u);
    EXPECT_EQ(curve[0].ji, report.ji);
    EXPECT_EQ(curve[0].rmse_3d, report.rmse_3d);
    EXPECT_EQ(curve[0].n_seeds, 3u);
}

TEST(FilterSweep, AllTruePositiveCountingIdentity) {
    std::vector<EmitterSet> gt{{0, {}}};
    std::vector<Seed> seeds;
    std::vector<double> scores;
    const std::size_t n = 37;
    for (std::size_t i = 0; i < n; ++i) {
        gt[0].emitters.push_back({static_cast<std::int64_t>(i), 1000.0 * i, 0, 0, 1});
        seeds.push_back(featured(1000.0 * i + 1.0, 1, 1, 0));
        scores.push_back(std::fmod(7.0 * i, 11.0));
    }
    std::vector<double> rates;
    for (int k = 0; k <= 8; ++k) rates.push_back(0.1 * k);
    rates.push_back(0.85);
    const auto curve = filter_sweep(gt, seeds, scores, rates);
    for (const auto& p : curve) {
        const auto dropped = static_cast<std::size_t>(std::ceil(p.rate * n - 1e-9));
        EXPECT_DOUBLE_EQ(p.ji, double(n - dropped) / n) << p.rate;
    }
}

TEST(FilterSweep, RejectsUnsortedRates) {
    std::vector<EmitterSet> gt{{0, {{0, 0, 0, 0, 1}}}};
    std::vector<Seed> seeds{featured(0, 1, 1, 0)};
    const std::vector<double> scores{1.0};
    const std::vector<double> rates{0.5, 0.1};
    EXPECT_THROW(filter_sweep(gt, seeds, scores, rates), ValidationError);
}
