#pragma once

#include <span>
#include <vector>

#include "luenn/codec.hpp"
#include "luenn/metrics.hpp"

namespace luenn {

struct UncertaintyScore {
    double sigma_x = 0.0;  // nm
    double sigma_y = 0.0;
    double sigma_z = 0.0;
    double scalar = 0.0;  // NaN when the seed lacks usable features
};

/// Constants of the analytic uncertainty proxy.
///   sigma_x = sigma_y = c_lateral / (peak_magnitude * sqrt(peak_sharpness))
///   sigma_z = c_axial * phase_dispersion * z_span
/// The defaults were fitted once with calibrate_proxy on the oracle decoder
/// (density 15.49587, map noise 0.05, seed 0, 500 frames).
struct ProxyConfig {
    double c_lateral = 5.129;  // nm
    double c_axial = 0.6956;
    double z_span = 1500.0;  // nm
};

std::vector<UncertaintyScore> proxy_uncertainty(std::span<const Seed> seeds, const ProxyConfig& cfg);

/// Least-squares scale factors matching the proxy to observed errors of the
/// matched seeds. Unmatched seeds are ignored.
ProxyConfig calibrate_proxy(std::span<const Seed> seeds, std::span<const EmitterSet> gt,
                            const MatchConfig& match, double z_span);

/// True 3D error of every seed against its match; +inf for false positives.
std::vector<double> oracle_scores(std::span<const EmitterSet> gt, std::span<const Seed> seeds,
                                  const MatchConfig& match = {});

std::vector<double> scalar_scores(std::span<const UncertaintyScore> scores);

inline constexpr double kMaxFilterRate = 0.85;

/// Indices (ascending) of the seeds kept after dropping the ceil(rate * n)
/// worst-scored ones. NaN scores rank worst; ties drop the later seed by
/// (frame_id, index). Throws RangeError for rate outside [0, 0.85].
std::vector<std::size_t> surviving_indices(std::span<const Seed> seeds, std::span<const double> scores, double rate);

LocalizationSet filter_by_rate(std::span<const Seed> seeds, std::span<const double> scores, double rate);

/// Keeps seeds whose score is at most `threshold`.
LocalizationSet filter_by_threshold(std::span<const Seed> seeds, std::span<const double> scores, double threshold);

struct FilterPoint {
    double rate = 0.0;
    std::size_t n_seeds = 0;
    double ji = 0.0;
    double rmse_lateral = 0.0;
    double rmse_3d = 0.0;
};

/// Metrics of the filtered population at each rate (ascending). Throws
/// UndefinedMetric when a rate leaves no true positive.
std::vector<FilterPoint> filter_sweep(std::span<const EmitterSet> gt, std::span<const Seed> seeds,
                                      std::span<const double> scores, std::span<const double> rates,
                                      const MatchConfig& match = {});

}  // namespace luenn
