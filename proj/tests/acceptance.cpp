// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "luenn/cli.hpp"
#include "luenn/codec.hpp"
#include "luenn/filtering.hpp"
#include "luenn/io.hpp"
#include "luenn/metrics.hpp"
#include "luenn/sim.hpp"

using namespace luenn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& check) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Ten densities from the reference density table (emitters / um^2).
constexpr double kDensities[] = {0.035870, 0.103306, 0.206612, 0.464876, 1.033058,
                                 2.376033, 5.630165, 9.297520, 15.49587, 30.99174};

Outcome round_trip() {
    SimConfig base;
    base.min_separation = 100.0;  // 4 super-res px at 100 nm pitch
    base.rng_seed = 1;
    SweepConfig cfg;
    cfg.fixed_frames = 1000;
    cfg.workers = 1;
    const auto t0 = std::chrono::steady_clock::now();
    const auto reports = density_sweep(kDensities, base, oracle_decoder(DecodeConfig{}), cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = secs < 300.0;
    double worst_lat = 0.0, worst_ax = 0.0, worst_recall = 1.0;
    for (const MetricReport& r : reports) {
        const double recall = static_cast<double>(r.n_tp) / static_cast<double>(r.n_tp + r.n_fn);
        worst_recall = std::min(worst_recall, recall);
        worst_lat = std::max(worst_lat, r.rmse_lateral);
        worst_ax = std::max(worst_ax, r.rmse_axial);
        ok = ok && r.n_fn == 0 && r.rmse_lateral < 2.0 && r.rmse_axial < 2.0;
    }
    return {ok, fmt("10 densities x 1000 frames, min recall %.6f (need 1), max lateral RMSE %.3f nm, max axial "
                    "RMSE %.3f nm (need < 2), runtime %.1f s (need < 300)",
                    worst_recall, worst_lat, worst_ax, secs)};
}

Outcome pixel_bias() {
    CameraModel cam;
    std::mt19937_64 rng(2024);
    // Keep the emitter clear of the border so the whole Gaussian is on the grid.
    std::uniform_real_distribution<double> pos(500.0, cam.width_nm() - 500.0);
    std::uniform_real_distribution<double> depth(-750.0, 750.0);
    LocalizationSet seeds;
    std::size_t missing = 0;
    for (int i = 0; i < 10000; ++i) {
        const EmitterSet set{i, {{0, pos(rng), pos(rng), depth(rng), 1.0}}};
        const auto r = decode(encode_targets(set, cam, -750.0, 750.0, DecodeConfig{}), DecodeConfig{}, i);
        if (r.seeds.size() != 1) ++missing;
        seeds.insert(seeds.end(), r.seeds.begin(), r.seeds.end());
    }
    const PixelBias b = pixel_bias_histogram(seeds, cam.pixel_pitch_x, cam.pixel_pitch_y, 16);
    return {missing == 0 && b.p_value > 0.01,
            fmt("10^4 single emitters, 16x16 bins, chi2 %.1f, p = %.4f (need > 0.01), undecoded %zu", b.chi_square,
                b.p_value, missing)};
}

struct Best {
    std::size_t card = 0;
    double cost = std::numeric_limits<double>::infinity();
};

void exhaust(const EmitterSet& gt, const LocalizationSet& pred, const MatchConfig& cfg, std::size_t row,
             std::vector<bool>& used, std::size_t card, double cost, Best& best) {
    if (row == gt.emitters.size()) {
        if (card > best.card || (card == best.card && cost < best.cost)) best = {card, cost};
        return;
    }
    exhaust(gt, pred, cfg, row + 1, used, card, cost, best);
    const Emitter& g = gt.emitters[row];
    for (std::size_t j = 0; j < pred.size(); ++j) {
        if (used[j]) continue;
        const double lat = std::hypot(pred[j].x - g.x, pred[j].y - g.y);
        const double dz = pred[j].z - g.z;
        if (lat > cfg.tol_lateral || std::abs(dz) > cfg.tol_axial) continue;
        used[j] = true;
        exhaust(gt, pred, cfg, row + 1, used, card + 1, cost + std::hypot(lat, dz), best);
        used[j] = false;
    }
}

Outcome matching_oracle() {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> count(0, 6);
    std::uniform_real_distribution<double> pos(0.0, 700.0), depth(-700.0, 700.0);
    int agree = 0;
    const int trials = 500;
    for (int t = 0; t < trials; ++t) {
        EmitterSet gt;
        LocalizationSet pred;
        const int ng = count(rng), np = count(rng);
        for (int i = 0; i < ng; ++i) gt.emitters.push_back({i, pos(rng), pos(rng), depth(rng), 1.0});
        for (int j = 0; j < np; ++j) {
            Seed s;
            s.x = pos(rng);
            s.y = pos(rng);
            s.z = depth(rng);
            pred.push_back(s);
        }
        const MatchConfig cfg;
        const Matching m = match_localizations(gt, pred, cfg);
        Best best;
        std::vector<bool> used(pred.size(), false);
        exhaust(gt, pred, cfg, 0, used, 0, 0.0, best);
        const double want = best.card == 0 ? 0.0 : best.cost;
        if (m.n_tp == best.card && std::abs(m.total_cost() - want) <= 1e-9 * std::max(1.0, want)) ++agree;
    }
    return {agree == trials, fmt("%d / %d instances equal the exhaustive minimum (need 100%%, tol 1e-9 relative)", agree, trials)};
}

Outcome metric_identities() {
    const double ji = jaccard_index(1, 1, 1);
    EmitterSet gt{0, {{0, 0.0, 0.0, 0.0, 1.0}}};
    Seed s;
    s.x = 3.0;
    s.y = 4.0;
    const LocalizationSet pred{s};
    const double lat = rmse(match_localizations(gt, pred), ErrorAxes::Lateral);
    const double eff = efficiency(1.0, 0.0, kAlpha3d);
    const bool ok = ji == 1.0 / 3.0 && lat == 5.0 && eff == 100.0;
    return {ok, fmt("JI(1,1,1) = %.17g, lateral RMSE(3,4,0) = %.17g, efficiency(1,0) = %.17g (exact)", ji, lat, eff)};
}

Outcome filtering_monotonicity() {
    // Noisy oracle population, emitters further apart than twice the lateral tolerance.
    SimConfig sim;
    sim.density = 1.0;
    sim.min_separation = 600.0;
    sim.rng_seed = 5;
    const auto source = oracle_decoder(DecodeConfig{}, 0.05);
    std::vector<EmitterSet> gt;
    LocalizationSet seeds;
    for (std::int64_t f = 0; seeds.size() < 10000; ++f) {
        gt.push_back(simulate_ground_truth(sim, f));
        const auto s = source(gt.back(), sim);
        seeds.insert(seeds.end(), s.begin(), s.end());
    }
    const auto base = evaluate_frames(gt, seeds);
    const auto scores = oracle_scores(gt, seeds);
    std::vector<double> rates;
    for (int k = 0; k <= 8; ++k) rates.push_back(k / 10.0);
    rates.push_back(0.85);
    const auto curve = filter_sweep(gt, seeds, scores, rates);
    int violations = 0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (curve[i].ji > curve[i - 1].ji) ++violations;
        if (curve[i].rmse_3d > curve[i - 1].rmse_3d) ++violations;
    }
    return {violations == 0,
            fmt("%zu seeds (%zu FP), rates 0..0.85: ji %.4f -> %.4f, rmse_3d %.3f -> %.3f nm, %d violations (need 0)",
                seeds.size(), base.n_fp, curve.front().ji, curve.back().ji, curve.front().rmse_3d,
                curve.back().rmse_3d, violations)};
}

Outcome residual_convergence_check() {
    SimConfig sim;
    sim.density = 4.13;
    sim.photon_mean = 5000.0;
    sim.photon_sigma = 250.0;
    sim.rng_seed = 11;
    SweepConfig cfg;
    cfg.max_frames = 5000;
    const std::vector<double> densities{sim.density};
    const auto r = density_sweep(densities, sim, oracle_decoder(DecodeConfig{}, 0.05), cfg);
    if (!r.at(0).seeds_to_converge) return {false, fmt("did not converge within %lld frames", (long long)cfg.max_frames)};
    const std::size_t n = *r[0].seeds_to_converge;
    return {n >= 5000 && n <= 50000,
            fmt("oracle pipeline (density 4.13, map noise 0.05) converged at %zu seeds (need 5000..50000)", n)};
}

Outcome simulator_statistics() {
    SimConfig sim;
    sim.density = 4.13;
    sim.photon_mean = 5000.0;
    sim.photon_sigma = 250.0;
    sim.n_frames = 10000;
    sim.rng_seed = 3;
    double photons = 0.0;
    std::size_t emitters = 0;
    simulate_dataset(sim, [&](const Frame&, const EmitterSet& set) {
        for (const Emitter& e : set.emitters) photons += e.photons;
        emitters += set.emitters.size();
    });
    const double mean_photons = photons / static_cast<double>(emitters);
    const double mean_count = static_cast<double>(emitters) / 10000.0;
    const double want_count = sim.density * sim.camera.area_um2();
    const bool ok = std::abs(mean_photons - 5000.0) <= 50.0 && std::abs(mean_count - want_count) <= 0.02 * want_count;
    return {ok, fmt("10^4 frames of AI-5: photon mean %.2f (need 5000 +- 1%%), emitter count mean %.3f (need %.3f +- 2%%)",
                    mean_photons, mean_count, want_count)};
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "luenn_acceptance_determinism";
    fs::remove_all(root);
    auto chain = [&](const std::string& tag, const std::string& workers) {
        const std::string d = (root / tag).string();
        std::ostringstream out, err;
        const std::vector<std::vector<std::string>> steps{
            {"simulate", "--preset", "AI-5", "--frames", "20", "--seed", "7", "--workers", workers, "--out", d},
            {"encode", "--in", d, "--workers", workers},
            {"decode", "--maps", d + "/maps", "--out", d + "/pred.csv", "--workers", workers},
            {"evaluate", "--gt", d + "/emitters.csv", "--pred", d + "/pred.csv", "--out", d + "/report.tsv"}};
        for (const auto& s : steps) {
            if (cli_main(s, out, err) != kExitOk) throw std::runtime_error("step failed: " + s[0] + ": " + err.str());
        }
        std::map<std::string, std::string> files;
        for (const auto& e : fs::recursive_directory_iterator(d)) {
            if (e.is_regular_file()) files[fs::relative(e.path(), d).string()] = io::read_text(e.path());
        }
        return files;
    };
    const auto a = chain("run1", "1");
    const auto b = chain("run2", "1");
    const auto c = chain("run3", "4");
    fs::remove_all(root);
    const bool ok = a == b && a == c && a.size() == 44;
    return {ok, fmt("simulate->encode->decode->evaluate, seed 7, %zu files: repeat %s, 1 vs 4 workers %s", a.size(),
                    a == b ? "identical" : "DIFFERENT", a == c ? "identical" : "DIFFERENT")};
}

}  // namespace

int main() {
    report("round-trip fidelity", round_trip);
    report("no pixel bias", pixel_bias);
    report("matching oracle", matching_oracle);
    report("metric identities", metric_identities);
    report("filtering monotonicity", filtering_monotonicity);
    report("residual convergence", residual_convergence_check);
    report("simulator statistics", simulator_statistics);
    report("determinism", determinism);
    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
