#include "luenn/filtering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "luenn/error.hpp"

namespace luenn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double raw_lateral(const Seed& s) {
    if (!(s.peak_magnitude > 0.0) || !(s.peak_sharpness > 0.0) || !std::isfinite(s.peak_magnitude) ||
        !std::isfinite(s.peak_sharpness)) {
        return kNaN;
    }
    return 1.0 / (s.peak_magnitude * std::sqrt(s.peak_sharpness));
}

double raw_axial(const Seed& s, double z_span) {
    if (!std::isfinite(s.phase_dispersion) || s.phase_dispersion < 0.0) return kNaN;
    return s.phase_dispersion * z_span;
}

void require_same_length(std::size_t a, std::size_t b) {
    if (a != b) throw ValidationError("seed and score counts differ");
}

// Per seed, the matched error vector; unmatched seeds stay empty.
struct SeedError {
    bool matched = false;
    double dx = 0.0, dy = 0.0, dz = 0.0;
};

std::vector<SeedError> per_seed_errors(std::span<const EmitterSet> gt, std::span<const Seed> seeds,
                                       const MatchConfig& match) {
    std::map<std::int64_t, std::vector<std::size_t>> by_frame;
    for (std::size_t i = 0; i < seeds.size(); ++i) by_frame[seeds[i].frame_id].push_back(i);

    std::vector<SeedError> errors(seeds.size());
    for (const EmitterSet& set : gt) {
        const auto it = by_frame.find(set.frame_id);
        if (it == by_frame.end()) continue;
        LocalizationSet local;
        local.reserve(it->second.size());
        for (std::size_t i : it->second) local.push_back(seeds[i]);
        for (const MatchedPair& p : match_localizations(set, local, match).pairs) {
            SeedError& e = errors[it->second[p.pred_index]];
            e = {true, p.dx, p.dy, p.dz};
        }
    }
    return errors;
}

}  // namespace

std::vector<UncertaintyScore> proxy_uncertainty(std::span<const Seed> seeds, const ProxyConfig& cfg) {
    std::vector<UncertaintyScore> out;
    out.reserve(seeds.size());
    for (const Seed& s : seeds) {
        UncertaintyScore u;
        u.sigma_x = u.sigma_y = cfg.c_lateral * raw_lateral(s);
        u.sigma_z = cfg.c_axial * raw_axial(s, cfg.z_span);
        u.scalar = std::sqrt(u.sigma_x * u.sigma_x + u.sigma_y * u.sigma_y + u.sigma_z * u.sigma_z);
        out.push_back(u);
    }
    return out;
}

ProxyConfig calibrate_proxy(std::span<const Seed> seeds, std::span<const EmitterSet> gt,
                            const MatchConfig& match, double z_span) {
    const auto errors = per_seed_errors(gt, seeds, match);
    double err_lat = 0.0, raw_lat = 0.0, err_ax = 0.0, raw_ax = 0.0;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (!errors[i].matched) continue;
        const double rl = raw_lateral(seeds[i]);
        const double ra = raw_axial(seeds[i], z_span);
        if (std::isnan(rl) || std::isnan(ra)) continue;
        err_lat += errors[i].dx * errors[i].dx + errors[i].dy * errors[i].dy;
        raw_lat += 2.0 * rl * rl;  // two lateral axes share one sigma
        err_ax += errors[i].dz * errors[i].dz;
        raw_ax += ra * ra;
    }
    ProxyConfig cfg;
    cfg.z_span = z_span;
    if (raw_lat > 0.0) cfg.c_lateral = std::sqrt(err_lat / raw_lat);
    if (raw_ax > 0.0) cfg.c_axial = std::sqrt(err_ax / raw_ax);
    return cfg;
}

std::vector<double> oracle_scores(std::span<const EmitterSet> gt, std::span<const Seed> seeds,
                                  const MatchConfig& match) {
    const auto errors = per_seed_errors(gt, seeds, match);
    std::vector<double> scores(seeds.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (errors[i].matched) {
            scores[i] = std::sqrt(errors[i].dx * errors[i].dx + errors[i].dy * errors[i].dy +
                                  errors[i].dz * errors[i].dz);
        }
    }
    return scores;
}

std::vector<double> scalar_scores(std::span<const UncertaintyScore> scores) {
    std::vector<double> out;
    out.reserve(scores.size());
    for (const UncertaintyScore& s : scores) out.push_back(s.scalar);
    return out;
}

std::vector<std::size_t> surviving_indices(std::span<const Seed> seeds, std::span<const double> scores, double rate) {
    require_same_length(seeds.size(), scores.size());
    if (!(rate >= 0.0 && rate <= kMaxFilterRate)) {
        throw RangeError("filter rate must lie in [0, 0.85]");
    }
    const std::size_t n = seeds.size();
    // The small slack keeps products such as 0.7 * 10 from rounding up a step.
    const auto dropped = static_cast<std::size_t>(std::ceil(rate * static_cast<double>(n) - 1e-9));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const bool a_nan = std::isnan(scores[a]);
        const bool b_nan = std::isnan(scores[b]);
        if (a_nan != b_nan) return b_nan;
        if (!a_nan && scores[a] != scores[b]) return scores[a] < scores[b];
        if (seeds[a].frame_id != seeds[b].frame_id) return seeds[a].frame_id < seeds[b].frame_id;
        return a < b;
    });
    order.resize(n - std::min(dropped, n));
    std::sort(order.begin(), order.end());
    return order;
}

LocalizationSet filter_by_rate(std::span<const Seed> seeds, std::span<const double> scores, double rate) {
    LocalizationSet out;
    for (std::size_t i : surviving_indices(seeds, scores, rate)) out.push_back(seeds[i]);
    return out;
}

LocalizationSet filter_by_threshold(std::span<const Seed> seeds, std::span<const double> scores, double threshold) {
    require_same_length(seeds.size(), scores.size());
    LocalizationSet out;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (scores[i] <= threshold) out.push_back(seeds[i]);
    }
    return out;
}

std::vector<FilterPoint> filter_sweep(std::span<const EmitterSet> gt, std::span<const Seed> seeds,
                                      std::span<const double> scores, std::span<const double> rates,
                                      const MatchConfig& match) {
    if (!std::is_sorted(rates.begin(), rates.end())) {
        throw ValidationError("filter rates must be sorted ascending");
    }
    std::vector<FilterPoint> curve;
    curve.reserve(rates.size());
    for (double rate : rates) {
        const LocalizationSet kept = filter_by_rate(seeds, scores, rate);
        const MetricAccumulator acc = evaluate_frames(gt, kept, match);
        if (acc.n_tp == 0) {
            throw UndefinedMetric("no true positives survive filter rate " + std::to_string(rate));
        }
        const MetricReport r = make_report(acc);
        curve.push_back({rate, kept.size(), r.ji, r.rmse_lateral, r.rmse_3d});
    }
    return curve;
}

}  // namespace luenn
