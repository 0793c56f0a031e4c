#pragma once

#include <cstdint>
#include <vector>

#include "luenn/grid.hpp"
#include "luenn/sim.hpp"

namespace luenn {

inline constexpr int kUpsample = 4;

/// Two co-registered x4 channels. Magnitude carries lateral likelihood and
/// phase carries depth. Super-res pixel (r, c) has its center at
/// ((c + 0.5) * pitch / 4, (r + 0.5) * pitch / 4) nm.
struct ComplexMapPair {
    Grid<double> re;
    Grid<double> im;
    double pixel_pitch = 100.0;  // camera pitch, nm
    double z_min = -750.0;
    double z_max = 750.0;

    std::size_t height() const noexcept { return re.height(); }
    std::size_t width() const noexcept { return re.width(); }
    double superres_pitch() const noexcept { return pixel_pitch / kUpsample; }
    Grid<double> magnitude() const;
    void validate() const;
};

struct DecodeConfig {
    double detection_threshold = 0.3;  // fraction of the unit amplitude
    int nms_radius = 2;                // super-res px
    int phase_window = 3;              // super-res px, odd
    double target_sigma = 1.0;         // super-res px

    void validate() const;
};

struct Seed {
    double x = 0.0;  // nm
    double y = 0.0;
    double z = 0.0;
    double peak_magnitude = 0.0;
    double peak_sharpness = 0.0;  // negated discrete Laplacian of the magnitude at the peak
    double phase_dispersion = 0.0;
    std::int64_t frame_id = 0;

    bool operator==(const Seed&) const = default;
};

using LocalizationSet = std::vector<Seed>;

struct PeakIndex {
    int row;
    int col;
    bool operator==(const PeakIndex&) const = default;
};

struct SubpixelOffset {
    double d_row = 0.0;
    double d_col = 0.0;
    bool border = false;      // a one-sided stencil was used on at least one axis
    bool degenerate = false;  // non-finite curvature on at least one axis, offset forced to 0
};

struct DepthEstimate {
    double z = 0.0;
    double phase_dispersion = 0.0;
    bool truncated = false;      // window clipped by the grid border
    bool phase_clamped = false;  // phase fell outside the encoding band
};

struct DecodeResult {
    LocalizationSet seeds;
    std::size_t n_peaks = 0;
    std::size_t n_undefined_depth = 0;  // dropped
    std::size_t n_border = 0;
    std::size_t n_degenerate = 0;
    std::size_t n_phase_clamped = 0;
};

/// Half-width of the phase band; depth maps affinely onto [-kPhaseBand, kPhaseBand].
inline constexpr double kPhaseBand = 0.9 * 3.14159265358979323846;

/// Throws RangeError when z lies outside [z_min, z_max].
double z_to_phase(double z, double z_min, double z_max);

struct PhaseDepth {
    double z;
    bool clamped;
};

/// Inverse of z_to_phase. Phases outside the band are clamped to it.
PhaseDepth phase_to_z(double phase, double z_min, double z_max);

/// Sums one complex Gaussian per emitter on the x4 grid of `camera`.
/// Requires an isotropic camera pitch.
ComplexMapPair encode_targets(const EmitterSet& set, const CameraModel& camera, double z_min,
                              double z_max, const DecodeConfig& cfg);

std::vector<PeakIndex> find_peaks(const Grid<double>& magnitude, const DecodeConfig& cfg);

/// Log-quadratic interpolation through three samples; returns the vertex
/// offset from the middle sample, clamped to [-0.5, 0.5]. `ok` is cleared for
/// non-finite curvature (offset 0).
double log_quadratic_offset(double left, double center, double right, bool* ok = nullptr);

SubpixelOffset subpixel_refine(const Grid<double>& magnitude, PeakIndex peak);

/// Magnitude-weighted complex mean over the phase window. Throws
/// UndefinedDepth when the weighted sum vanishes.
DepthEstimate estimate_depth(const ComplexMapPair& pair, const Grid<double>& magnitude,
                             PeakIndex peak, const DecodeConfig& cfg);

DecodeResult decode(const ComplexMapPair& pair, const DecodeConfig& cfg, std::int64_t frame_id = 0);

}  // namespace luenn
