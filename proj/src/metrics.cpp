#include "luenn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <boost/math/special_functions/gamma.hpp>

#include "luenn/error.hpp"
#include "luenn/parallel.hpp"

namespace luenn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double relative_residual(double current, double previous) {
    if (std::isnan(current) || std::isnan(previous)) return std::numeric_limits<double>::infinity();
    const double delta = std::abs(current - previous);
    if (delta == 0.0) return 0.0;
    if (current == 0.0) return std::numeric_limits<double>::infinity();
    return delta / std::abs(current);
}

}  // namespace

double jaccard_index(std::size_t n_tp, std::size_t n_fp, std::size_t n_fn) {
    const std::size_t total = n_tp + n_fp + n_fn;
    if (total == 0) throw UndefinedMetric("Jaccard index undefined: no TP, FP or FN");
    return static_cast<double>(n_tp) / static_cast<double>(total);
}

double jaccard_index(const Matching& m) { return jaccard_index(m.n_tp, m.n_fp, m.n_fn); }

double rmse(const Matching& m, ErrorAxes axes) {
    if (m.pairs.empty()) throw UndefinedMetric("RMSE undefined: no true positives");
    double sum = 0.0;
    for (const MatchedPair& p : m.pairs) {
        switch (axes) {
            case ErrorAxes::Lateral: sum += p.dx * p.dx + p.dy * p.dy; break;
            case ErrorAxes::Axial: sum += p.dz * p.dz; break;
            case ErrorAxes::Volumetric: sum += p.dx * p.dx + p.dy * p.dy + p.dz * p.dz; break;
        }
    }
    return std::sqrt(sum / static_cast<double>(m.pairs.size()));
}

double efficiency(double ji, double rmse_nm, double alpha) {
    const double a = 100.0 * (1.0 - ji);
    const double b = alpha * rmse_nm;
    return 100.0 - std::sqrt(a * a + b * b);
}

void MetricAccumulator::add(const Matching& m) {
    ++n_frames;
    n_tp += m.n_tp;
    n_fp += m.n_fp;
    n_fn += m.n_fn;
    n_seeds += m.n_tp + m.n_fp;
    for (const MatchedPair& p : m.pairs) {
        sum_lateral2 += p.dx * p.dx + p.dy * p.dy;
        sum_axial2 += p.dz * p.dz;
    }
}

MetricAccumulator& MetricAccumulator::operator+=(const MetricAccumulator& other) {
    n_frames += other.n_frames;
    n_seeds += other.n_seeds;
    n_tp += other.n_tp;
    n_fp += other.n_fp;
    n_fn += other.n_fn;
    sum_lateral2 += other.sum_lateral2;
    sum_axial2 += other.sum_axial2;
    return *this;
}

MetricReport make_report(const MetricAccumulator& acc, double density) {
    MetricReport r;
    r.density = density;
    r.n_frames = acc.n_frames;
    r.n_seeds = acc.n_seeds;
    r.n_tp = acc.n_tp;
    r.n_fp = acc.n_fp;
    r.n_fn = acc.n_fn;
    r.ji = jaccard_index(acc.n_tp, acc.n_fp, acc.n_fn);
    if (acc.n_tp > 0) {
        const double n = static_cast<double>(acc.n_tp);
        r.rmse_lateral = std::sqrt(acc.sum_lateral2 / n);
        r.rmse_axial = std::sqrt(acc.sum_axial2 / n);
        r.rmse_3d = std::sqrt((acc.sum_lateral2 + acc.sum_axial2) / n);
    } else {
        r.rmse_lateral = r.rmse_axial = r.rmse_3d = kNaN;
    }
    r.efficiency_lateral = efficiency(r.ji, r.rmse_lateral, kAlphaLateral);
    r.efficiency_3d = efficiency(r.ji, r.rmse_3d, kAlpha3d);
    return r;
}

MetricAccumulator evaluate_frames(std::span<const EmitterSet> gt, std::span<const Seed> pred,
                                  const MatchConfig& cfg) {
    std::map<std::int64_t, LocalizationSet> by_frame;
    for (const Seed& s : pred) by_frame[s.frame_id].push_back(s);

    MetricAccumulator acc;
    for (const EmitterSet& set : gt) {
        auto it = by_frame.find(set.frame_id);
        if (it == by_frame.end()) {
            acc.add(match_localizations(set, {}, cfg));
            continue;
        }
        acc.add(match_localizations(set, it->second, cfg));
        by_frame.erase(it);
    }
    for (const auto& [frame, seeds] : by_frame) {
        EmitterSet empty;
        empty.frame_id = frame;
        acc.add(match_localizations(empty, seeds, cfg));
    }
    return acc;
}

double chi_square_sf(double statistic, double dof) {
    if (statistic <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

PixelBias pixel_bias_histogram(std::span<const Seed> pred, double pitch_x, double pitch_y, int n_bins) {
    if (n_bins < 1) throw ValidationError("n_bins must be >= 1");
    if (!(pitch_x > 0.0 && pitch_y > 0.0)) throw ValidationError("pixel pitch must be positive");
    PixelBias out;
    out.n_bins = static_cast<std::size_t>(n_bins);
    out.counts.assign(out.n_bins * out.n_bins, 0);
    auto bin_of = [&](double v, double pitch) {
        const double t = v / pitch;
        const double frac = t - std::floor(t);
        return std::min(out.n_bins - 1, static_cast<std::size_t>(frac * static_cast<double>(n_bins)));
    };
    for (const Seed& s : pred) {
        ++out.counts[bin_of(s.y, pitch_y) * out.n_bins + bin_of(s.x, pitch_x)];
    }
    out.too_few_seeds = pred.size() < 100 * out.n_bins;
    if (pred.empty()) return out;

    const double expected = static_cast<double>(pred.size()) / static_cast<double>(out.counts.size());
    for (std::size_t c : out.counts) {
        const double d = static_cast<double>(c) - expected;
        out.chi_square += d * d / expected;
    }
    out.p_value = out.counts.size() > 1 ? chi_square_sf(out.chi_square, static_cast<double>(out.counts.size() - 1)) : 1.0;
    return out;
}

bool ResidualTracker::push(const Checkpoint& cp) {
    if (result_.converged) return true;
    ++count_;
    if (previous_) {
        result_.last_residual_ji = relative_residual(cp.ji, previous_->ji);
        result_.last_residual_lateral = relative_residual(cp.rmse_lateral, previous_->rmse_lateral);
        result_.last_residual_3d = relative_residual(cp.rmse_3d, previous_->rmse_3d);
        const bool quiet = result_.last_residual_ji < cfg_.rel_tolerance &&
                           result_.last_residual_lateral < cfg_.rel_tolerance &&
                           result_.last_residual_3d < cfg_.rel_tolerance;
        streak_ = quiet ? streak_ + 1 : 0;
    }
    previous_ = cp;
    result_.seeds_needed = cp.n_seeds;
    result_.checkpoint_index = count_;
    if (streak_ >= cfg_.patience) result_.converged = true;
    return result_.converged;
}

ConvergenceResult residual_convergence(std::span<const Checkpoint> stream, const ConvergenceConfig& cfg) {
    ResidualTracker tracker(cfg);
    for (const Checkpoint& cp : stream) {
        if (tracker.push(cp)) break;
    }
    return tracker.result();
}

EmitterSet simulate_ground_truth(const SimConfig& config, std::int64_t frame_id) {
    Rng rng = make_rng(config.rng_seed, static_cast<std::uint64_t>(frame_id), Stream::Emitters);
    return sample_emitters(config, frame_id, rng);
}

DecoderSource oracle_decoder(const DecodeConfig& decode_cfg, double map_noise) {
    return [decode_cfg, map_noise](const EmitterSet& gt, const SimConfig& config) {
        ComplexMapPair pair = encode_targets(gt, config.camera, config.z_min, config.z_max, decode_cfg);
        if (map_noise > 0.0) {
            Rng rng = make_rng(config.rng_seed, static_cast<std::uint64_t>(gt.frame_id), Stream::MapNoise);
            std::normal_distribution<double> noise(0.0, map_noise);
            for (double& v : pair.re.values()) v += noise(rng);
            for (double& v : pair.im.values()) v += noise(rng);
        }
        return decode(pair, decode_cfg, gt.frame_id).seeds;
    };
}

std::vector<MetricReport> density_sweep(std::span<const double> densities, const SimConfig& base,
                                        const DecoderSource& source, const SweepConfig& cfg) {
    std::vector<MetricReport> reports;
    reports.reserve(densities.size());
    const std::int64_t limit = cfg.fixed_frames.value_or(cfg.max_frames);
    const std::size_t batch = std::max<std::size_t>(16, 4 * static_cast<std::size_t>(std::max(1u, cfg.workers)));

    for (double density : densities) {
        SimConfig config = base;
        config.density = density;
        config.validate();

        MetricAccumulator acc;
        ResidualTracker tracker(cfg.convergence);
        std::size_t next_checkpoint = cfg.convergence.checkpoint_seeds;
        bool stop = false;
        std::vector<Matching> matchings;
        for (std::int64_t start = 0; start < limit && !stop; start += static_cast<std::int64_t>(batch)) {
            const auto n = static_cast<std::size_t>(std::min<std::int64_t>(static_cast<std::int64_t>(batch), limit - start));
            matchings.assign(n, Matching{});
            parallel_for(n, cfg.workers, [&](std::size_t i) {
                const EmitterSet gt = simulate_ground_truth(config, start + static_cast<std::int64_t>(i));
                const LocalizationSet seeds = source(gt, config);
                matchings[i] = match_localizations(gt, seeds, cfg.match);
            });
            for (const Matching& m : matchings) {
                acc.add(m);
                if (acc.n_seeds >= next_checkpoint && !tracker.result().converged) {
                    const MetricReport r = make_report(acc, density);
                    tracker.push({acc.n_seeds, r.ji, r.rmse_lateral, r.rmse_3d});
                    const std::size_t step = cfg.convergence.checkpoint_seeds;
                    next_checkpoint = (acc.n_seeds / step + 1) * step;
                }
                if (tracker.result().converged && !cfg.fixed_frames) {
                    stop = true;
                    break;
                }
            }
        }
        MetricReport report = make_report(acc, density);
        if (tracker.result().converged) report.seeds_to_converge = tracker.result().seeds_needed;
        reports.push_back(report);
    }
    return reports;
}

}  // namespace luenn
