#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "luenn/codec.hpp"
#include "luenn/sim.hpp"

namespace luenn {

enum class MatchMode {
    Volumetric,  // both tolerances, cost = 3D distance
    Lateral,     // lateral tolerance only, cost = lateral distance
};

struct MatchConfig {
    double tol_lateral = 250.0;  // nm
    double tol_axial = 500.0;    // nm
    MatchMode mode = MatchMode::Volumetric;
};

struct MatchedPair {
    std::int64_t gt_id;
    std::size_t pred_index;
    double dx, dy, dz;  // prediction minus ground truth, nm
};

struct Matching {
    std::vector<MatchedPair> pairs;
    std::size_t n_tp = 0;
    std::size_t n_fp = 0;
    std::size_t n_fn = 0;
    double tol_lateral = 0.0;
    double tol_axial = 0.0;

    /// Sum of per-pair matching costs.
    double total_cost(MatchMode mode = MatchMode::Volumetric) const;
};

/// Maximum-cardinality assignment of minimum total distance, restricted to
/// pairs inside the tolerances. `pred` must belong to the same frame as `gt`;
/// pred_index refers to positions in `pred`.
Matching match_localizations(const EmitterSet& gt, std::span<const Seed> pred, const MatchConfig& cfg = {});

/// Rectangular min-cost assignment. cost[i][j] is the cost of row i to column
/// j; std::nullopt marks forbidden pairs. Returns, per row, the assigned column
/// or -1, maximizing the number of assignments first and minimizing total cost
/// second.
std::vector<int> solve_assignment(const std::vector<std::vector<std::optional<double>>>& cost);

double jaccard_index(const Matching& m);
double jaccard_index(std::size_t n_tp, std::size_t n_fp, std::size_t n_fn);

enum class ErrorAxes { Lateral, Axial, Volumetric };

double rmse(const Matching& m, ErrorAxes axes);

inline constexpr double kAlphaLateral = 1.0;  // 1/nm
inline constexpr double kAlpha3d = 0.5;       // 1/nm

/// 100 - sqrt((100 (1 - ji))^2 + (alpha rmse)^2)
double efficiency(double ji, double rmse_nm, double alpha);

/// Associative accumulator over frames: counts and sums of squared errors.
struct MetricAccumulator {
    std::size_t n_frames = 0;
    std::size_t n_seeds = 0;
    std::size_t n_tp = 0;
    std::size_t n_fp = 0;
    std::size_t n_fn = 0;
    double sum_lateral2 = 0.0;
    double sum_axial2 = 0.0;

    void add(const Matching& m);
    MetricAccumulator& operator+=(const MetricAccumulator& other);
};

struct MetricReport {
    double density = 0.0;
    std::size_t n_frames = 0;
    std::size_t n_seeds = 0;
    std::size_t n_tp = 0;
    std::size_t n_fp = 0;
    std::size_t n_fn = 0;
    double ji = 0.0;
    double rmse_lateral = 0.0;  // NaN when n_tp = 0
    double rmse_axial = 0.0;
    double rmse_3d = 0.0;
    double efficiency_lateral = 0.0;
    double efficiency_3d = 0.0;
    std::optional<std::size_t> seeds_to_converge;  // set by density sweeps
};

/// Throws UndefinedMetric when there is nothing to score.
MetricReport make_report(const MetricAccumulator& acc, double density = 0.0);

/// Matches every frame of `gt` against the seeds carrying its frame_id.
/// Seeds whose frame has no ground-truth entry count as false positives.
MetricAccumulator evaluate_frames(std::span<const EmitterSet> gt, std::span<const Seed> pred,
                                  const MatchConfig& cfg = {});

struct PixelBias {
    std::size_t n_bins = 0;
    std::vector<std::size_t> counts;  // n_bins x n_bins, row-major (y fraction, x fraction)
    double chi_square = 0.0;
    double p_value = 1.0;
    bool too_few_seeds = false;  // fewer than 100 * n_bins seeds
};

/// 2D histogram of fractional in-pixel positions and its chi-square
/// uniformity p-value.
PixelBias pixel_bias_histogram(std::span<const Seed> pred, double pitch_x, double pitch_y, int n_bins);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double statistic, double dof);

struct Checkpoint {
    std::size_t n_seeds;
    double ji;
    double rmse_lateral;
    double rmse_3d;
};

struct ConvergenceConfig {
    double rel_tolerance = 0.01;
    std::size_t patience = 5;
    std::size_t checkpoint_seeds = 1000;
};

struct ConvergenceResult {
    bool converged = false;
    std::size_t seeds_needed = 0;  // n_seeds at the converging checkpoint
    std::size_t checkpoint_index = 0;  // 1-based
    double last_residual_ji = 0.0;
    double last_residual_lateral = 0.0;
    double last_residual_3d = 0.0;
};

/// Incremental residual tracker; feed cumulative checkpoints in order.
class ResidualTracker {
public:
    explicit ResidualTracker(ConvergenceConfig cfg) : cfg_(cfg) {}

    /// Returns true once converged; later pushes are ignored.
    bool push(const Checkpoint& cp);
    const ConvergenceResult& result() const noexcept { return result_; }

private:
    ConvergenceConfig cfg_;
    std::optional<Checkpoint> previous_;
    std::size_t streak_ = 0;
    std::size_t count_ = 0;
    ConvergenceResult result_;
};

ConvergenceResult residual_convergence(std::span<const Checkpoint> stream, const ConvergenceConfig& cfg);

/// Produces decoded seeds for a simulated frame. The oracle source encodes the
/// ground truth and decodes it back; other sources may supply network maps.
using DecoderSource = std::function<LocalizationSet(const EmitterSet& gt, const SimConfig& config)>;

/// Encode->decode of the ground truth, optionally with additive Gaussian noise
/// of standard deviation `map_noise` on both channels.
DecoderSource oracle_decoder(const DecodeConfig& decode_cfg, double map_noise = 0.0);

struct SweepConfig {
    MatchConfig match;
    ConvergenceConfig convergence;
    std::int64_t max_frames = 100000;
    /// When set, exactly this many frames per density and no early stop.
    std::optional<std::int64_t> fixed_frames;
    unsigned workers = 1;
};

/// Per-frame ground truth only (no camera image); used by sweeps and oracle runs.
EmitterSet simulate_ground_truth(const SimConfig& config, std::int64_t frame_id);

std::vector<MetricReport> density_sweep(std::span<const double> densities, const SimConfig& base,
                                        const DecoderSource& source, const SweepConfig& cfg);

}  // namespace luenn
