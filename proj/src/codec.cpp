#include "luenn/codec.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "luenn/error.hpp"

namespace luenn {

namespace {

constexpr double kLogFloor = 1e-12;
// |S| below this fraction of the weighted magnitude mass counts as a vanished sum.
constexpr double kVanishingSum = 1e-12;

double safe_log(double v) { return std::log(std::max(v, kLogFloor)); }

// Vertex of the parabola through (-1, a), (0, b), (1, c), unclamped.
double parabola_vertex(double a, double b, double c) {
    return (a - c) / (2.0 * (a - 2.0 * b + c));
}

struct AxisRefinement {
    double offset = 0.0;
    bool border = false;
    bool degenerate = false;
};

// Refines along one axis given a sampler over integer offsets from the peak.
template <typename Sample>
AxisRefinement refine_axis(int index, int extent, Sample&& sample) {
    AxisRefinement out;
    if (extent < 3) {
        out.border = true;
        return out;
    }
    double vertex = 0.0;
    if (index == 0) {
        // Samples at +0, +1, +2: vertex relative to the peak is 1 + offset about +1.
        out.border = true;
        vertex = 1.0 + parabola_vertex(safe_log(sample(0)), safe_log(sample(1)), safe_log(sample(2)));
    } else if (index == extent - 1) {
        out.border = true;
        vertex = -1.0 + parabola_vertex(safe_log(sample(-2)), safe_log(sample(-1)), safe_log(sample(0)));
    } else {
        vertex = parabola_vertex(safe_log(sample(-1)), safe_log(sample(0)), safe_log(sample(1)));
    }
    if (!std::isfinite(vertex)) {
        out.degenerate = true;
        return out;
    }
    out.offset = std::clamp(vertex, -0.5, 0.5);
    return out;
}

}  // namespace

Grid<double> ComplexMapPair::magnitude() const {
    Grid<double> mag(re.height(), re.width());
    const auto r = re.values();
    const auto i = im.values();
    auto m = mag.values();
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = std::hypot(r[k], i[k]);
    return mag;
}

void ComplexMapPair::validate() const {
    if (re.height() != im.height() || re.width() != im.width()) {
        throw ValidationError("complex map channels differ in shape");
    }
    if (!(std::isfinite(pixel_pitch) && pixel_pitch > 0.0)) {
        throw ValidationError("complex map pixel pitch must be positive");
    }
    if (!(std::isfinite(z_min) && std::isfinite(z_max) && z_min < z_max)) {
        throw ValidationError("complex map z range must be ordered");
    }
}

void DecodeConfig::validate() const {
    if (!(detection_threshold > 0.0 && detection_threshold < 1.0)) {
        throw ValidationError("detection_threshold must lie in (0, 1)");
    }
    if (nms_radius < 1) throw ValidationError("nms_radius must be >= 1");
    if (phase_window < 3 || phase_window % 2 == 0) {
        throw ValidationError("phase_window must be odd and >= 3");
    }
    if (!(std::isfinite(target_sigma) && target_sigma > 0.0)) {
        throw ValidationError("target_sigma must be positive");
    }
}

double z_to_phase(double z, double z_min, double z_max) {
    if (!(z >= z_min && z <= z_max)) {
        throw RangeError("depth " + std::to_string(z) + " nm outside z range [" +
                         std::to_string(z_min) + ", " + std::to_string(z_max) + "]");
    }
    const double mid = 0.5 * (z_min + z_max);
    return (z - mid) * (2.0 * kPhaseBand / (z_max - z_min));
}

PhaseDepth phase_to_z(double phase, double z_min, double z_max) {
    PhaseDepth out{0.0, false};
    if (phase > kPhaseBand || phase < -kPhaseBand) {
        phase = std::clamp(phase, -kPhaseBand, kPhaseBand);
        out.clamped = true;
    }
    const double mid = 0.5 * (z_min + z_max);
    out.z = std::clamp(mid + phase * ((z_max - z_min) / (2.0 * kPhaseBand)), z_min, z_max);
    return out;
}

ComplexMapPair encode_targets(const EmitterSet& set, const CameraModel& camera, double z_min,
                              double z_max, const DecodeConfig& cfg) {
    if (camera.pixel_pitch_x != camera.pixel_pitch_y) {
        throw ValidationError("complex map encoding requires an isotropic pixel pitch");
    }
    ComplexMapPair pair;
    pair.pixel_pitch = camera.pixel_pitch_x;
    pair.z_min = z_min;
    pair.z_max = z_max;
    const std::size_t rows = static_cast<std::size_t>(camera.height) * kUpsample;
    const std::size_t cols = static_cast<std::size_t>(camera.width) * kUpsample;
    pair.re = Grid<double>(rows, cols, 0.0);
    pair.im = Grid<double>(rows, cols, 0.0);

    const double su_pitch = pair.superres_pitch();
    const double sigma = cfg.target_sigma;
    const int reach = static_cast<int>(std::ceil(8.0 * sigma));
    const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
    std::vector<double> gu;
    std::vector<double> gv;

    for (const Emitter& e : set.emitters) {
        const double phase = z_to_phase(e.z, z_min, z_max);
        const double cos_phase = std::cos(phase);
        const double sin_phase = std::sin(phase);
        const double u = e.x / su_pitch - 0.5;  // column coordinate
        const double v = e.y / su_pitch - 0.5;  // row coordinate
        const int c0 = std::max(0, static_cast<int>(std::floor(u)) - reach);
        const int c1 = std::min(static_cast<int>(cols) - 1, static_cast<int>(std::ceil(u)) + reach);
        const int r0 = std::max(0, static_cast<int>(std::floor(v)) - reach);
        const int r1 = std::min(static_cast<int>(rows) - 1, static_cast<int>(std::ceil(v)) + reach);
        if (c0 > c1 || r0 > r1) continue;

        gu.resize(static_cast<std::size_t>(c1 - c0 + 1));
        gv.resize(static_cast<std::size_t>(r1 - r0 + 1));
        for (int c = c0; c <= c1; ++c) {
            const double du = c - u;
            gu[static_cast<std::size_t>(c - c0)] = std::exp(-du * du * inv_two_var);
        }
        for (int r = r0; r <= r1; ++r) {
            const double dv = r - v;
            gv[static_cast<std::size_t>(r - r0)] = std::exp(-dv * dv * inv_two_var);
        }
        for (int r = r0; r <= r1; ++r) {
            const double wr = gv[static_cast<std::size_t>(r - r0)];
            for (int c = c0; c <= c1; ++c) {
                const double g = wr * gu[static_cast<std::size_t>(c - c0)];
                pair.re(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) += g * cos_phase;
                pair.im(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) += g * sin_phase;
            }
        }
    }
    return pair;
}

std::vector<PeakIndex> find_peaks(const Grid<double>& magnitude, const DecodeConfig& cfg) {
    const int rows = static_cast<int>(magnitude.height());
    const int cols = static_cast<int>(magnitude.width());
    const double threshold = cfg.detection_threshold;

    struct Candidate {
        double value;
        PeakIndex at;
    };
    std::vector<Candidate> candidates;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double v = magnitude(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
            if (!(v >= threshold)) continue;
            bool is_max = true;
            for (int dr = -1; dr <= 1 && is_max; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    const int nr = r + dr;
                    const int nc = c + dc;
                    if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
                    const double n = magnitude(static_cast<std::size_t>(nr), static_cast<std::size_t>(nc));
                    // Plateaus resolve to their first pixel in raster order.
                    const bool precedes = dr < 0 || (dr == 0 && dc < 0);
                    if (precedes ? !(v > n) : !(v >= n)) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max) candidates.push_back({v, {r, c}});
        }
    }

    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.value > b.value; });

    const int radius2 = cfg.nms_radius * cfg.nms_radius;
    std::vector<PeakIndex> kept;
    for (const Candidate& cand : candidates) {
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const PeakIndex& k) {
            const int dr = k.row - cand.at.row;
            const int dc = k.col - cand.at.col;
            return dr * dr + dc * dc <= radius2;
        });
        if (!suppressed) kept.push_back(cand.at);
    }
    return kept;
}

double log_quadratic_offset(double left, double center, double right, bool* ok) {
    const double vertex = parabola_vertex(safe_log(left), safe_log(center), safe_log(right));
    const bool finite = std::isfinite(vertex);
    if (ok) *ok = finite;
    return finite ? std::clamp(vertex, -0.5, 0.5) : 0.0;
}

SubpixelOffset subpixel_refine(const Grid<double>& magnitude, PeakIndex peak) {
    const auto r = static_cast<std::size_t>(peak.row);
    const auto c = static_cast<std::size_t>(peak.col);
    const auto col_axis = refine_axis(peak.col, static_cast<int>(magnitude.width()), [&](int k) {
        return magnitude(r, static_cast<std::size_t>(peak.col + k));
    });
    const auto row_axis = refine_axis(peak.row, static_cast<int>(magnitude.height()), [&](int k) {
        return magnitude(static_cast<std::size_t>(peak.row + k), c);
    });
    SubpixelOffset out;
    out.d_col = col_axis.offset;
    out.d_row = row_axis.offset;
    out.border = col_axis.border || row_axis.border;
    out.degenerate = col_axis.degenerate || row_axis.degenerate;
    return out;
}

DepthEstimate estimate_depth(const ComplexMapPair& pair, const Grid<double>& magnitude,
                             PeakIndex peak, const DecodeConfig& cfg) {
    const int half = cfg.phase_window / 2;
    const int rows = static_cast<int>(pair.height());
    const int cols = static_cast<int>(pair.width());
    DepthEstimate out;

    double s_re = 0.0;
    double s_im = 0.0;
    double mass = 0.0;
    for (int r = peak.row - half; r <= peak.row + half; ++r) {
        for (int c = peak.col - half; c <= peak.col + half; ++c) {
            if (r < 0 || r >= rows || c < 0 || c >= cols) {
                out.truncated = true;
                continue;
            }
            const auto rr = static_cast<std::size_t>(r);
            const auto cc = static_cast<std::size_t>(c);
            const double w = magnitude(rr, cc);
            s_re += w * pair.re(rr, cc);
            s_im += w * pair.im(rr, cc);
            mass += w * w;
        }
    }
    const double norm = std::hypot(s_re, s_im);
    if (!(mass > 0.0) || norm <= kVanishingSum * mass) {
        throw UndefinedDepth("weighted complex sum vanishes at super-res pixel (" +
                             std::to_string(peak.row) + ", " + std::to_string(peak.col) + ")");
    }
    const auto depth = phase_to_z(std::atan2(s_im, s_re), pair.z_min, pair.z_max);
    out.z = depth.z;
    out.phase_clamped = depth.clamped;
    out.phase_dispersion = std::clamp(1.0 - norm / mass, 0.0, 1.0);
    return out;
}

DecodeResult decode(const ComplexMapPair& pair, const DecodeConfig& cfg, std::int64_t frame_id) {
    pair.validate();
    cfg.validate();
    const Grid<double> mag = pair.magnitude();
    const auto peaks = find_peaks(mag, cfg);
    const double su_pitch = pair.superres_pitch();
    const int rows = static_cast<int>(mag.height());
    const int cols = static_cast<int>(mag.width());
    auto sample = [&](int r, int c) {
        if (r < 0 || r >= rows || c < 0 || c >= cols) return 0.0;
        return mag(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    };

    DecodeResult result;
    result.n_peaks = peaks.size();
    result.seeds.reserve(peaks.size());
    for (const PeakIndex& p : peaks) {
        DepthEstimate depth;
        try {
            depth = estimate_depth(pair, mag, p, cfg);
        } catch (const UndefinedDepth&) {
            ++result.n_undefined_depth;
            continue;
        }
        const SubpixelOffset offset = subpixel_refine(mag, p);
        result.n_border += offset.border ? 1 : 0;
        result.n_degenerate += offset.degenerate ? 1 : 0;
        result.n_phase_clamped += depth.phase_clamped ? 1 : 0;

        Seed s;
        s.frame_id = frame_id;
        s.x = (p.col + offset.d_col + 0.5) * su_pitch;
        s.y = (p.row + offset.d_row + 0.5) * su_pitch;
        s.z = depth.z;
        s.peak_magnitude = sample(p.row, p.col);
        s.peak_sharpness = 4.0 * s.peak_magnitude - sample(p.row - 1, p.col) - sample(p.row + 1, p.col) -
                           sample(p.row, p.col - 1) - sample(p.row, p.col + 1);
        s.phase_dispersion = depth.phase_dispersion;
        result.seeds.push_back(s);
    }
    return result;
}

}  // namespace luenn
