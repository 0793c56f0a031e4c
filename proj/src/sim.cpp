#include "luenn/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "luenn/error.hpp"
#include "luenn/parallel.hpp"

namespace luenn {

namespace {

void require(bool condition, const std::string& message) {
    if (!condition) throw ValidationError(message);
}

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

// Fraction of a unit-mass 1D Gaussian falling inside every pixel [i*pitch, (i+1)*pitch)
// for i in [first, first + count).
std::vector<double> pixel_weights(double center, double sigma, double pitch, int first, int count) {
    std::vector<double> weights(static_cast<std::size_t>(count));
    const double scale = 1.0 / (std::numbers::sqrt2 * sigma);
    double lower = std::erf((first * pitch - center) * scale);
    for (int i = 0; i < count; ++i) {
        const double upper = std::erf(((first + i + 1) * pitch - center) * scale);
        weights[static_cast<std::size_t>(i)] = 0.5 * (upper - lower);
        lower = upper;
    }
    return weights;
}

// Adds photons * (separable Gaussian integrated over pixels) into img.
void splat_gaussian(PhotonImage& img, const CameraModel& camera, double x, double y,
                    double sigma_x, double sigma_y, double photons) {
    constexpr double kReach = 7.0;  // sigmas; mass beyond is below 1e-11
    const int col_lo = std::max(0, static_cast<int>(std::floor((x - kReach * sigma_x) / camera.pixel_pitch_x)));
    const int col_hi = std::min(camera.width - 1, static_cast<int>(std::floor((x + kReach * sigma_x) / camera.pixel_pitch_x)));
    const int row_lo = std::max(0, static_cast<int>(std::floor((y - kReach * sigma_y) / camera.pixel_pitch_y)));
    const int row_hi = std::min(camera.height - 1, static_cast<int>(std::floor((y + kReach * sigma_y) / camera.pixel_pitch_y)));
    if (col_lo > col_hi || row_lo > row_hi) return;

    const auto wx = pixel_weights(x, sigma_x, camera.pixel_pitch_x, col_lo, col_hi - col_lo + 1);
    const auto wy = pixel_weights(y, sigma_y, camera.pixel_pitch_y, row_lo, row_hi - row_lo + 1);
    for (int r = row_lo; r <= row_hi; ++r) {
        const double row_mass = photons * wy[static_cast<std::size_t>(r - row_lo)];
        for (int c = col_lo; c <= col_hi; ++c) {
            img(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) +=
                row_mass * wx[static_cast<std::size_t>(c - col_lo)];
        }
    }
}

}  // namespace

void CameraModel::validate() const {
    require(positive_finite(pixel_pitch_x) && positive_finite(pixel_pitch_y),
            "camera pixel pitch must be positive");
    require(width > 0 && height > 0, "camera width and height must be positive");
    require(std::isfinite(background_rate) && background_rate >= 0.0,
            "camera background_rate must be >= 0");
    require(positive_finite(gain), "camera gain must be positive");
    require(std::isfinite(baseline) && baseline >= 0.0, "camera baseline must be >= 0");
    require(std::isfinite(read_noise_sigma) && read_noise_sigma >= 0.0,
            "camera read_noise_sigma must be >= 0");
}

void PsfModel::validate() const {
    require(positive_finite(sigma0), "psf sigma0 must be positive");
    require(positive_finite(d), "psf d must be positive");
    if (modality == PsfModality::Astigmatic) {
        require(std::isfinite(gamma), "psf gamma must be finite");
    } else {
        require(positive_finite(dh_lobe_distance), "psf dh_lobe_distance must be positive");
        require(std::isfinite(dh_rotation_rate), "psf dh_rotation_rate must be finite");
    }
}

void SimConfig::validate() const {
    require(positive_finite(density), "density must be positive");
    require(positive_finite(photon_mean), "photon_mean must be positive");
    require(std::isfinite(photon_sigma) && photon_sigma >= 0.0, "photon_sigma must be >= 0");
    require(std::isfinite(z_min) && std::isfinite(z_max) && z_min < z_max,
            "z_range must be ordered (z_min < z_max)");
    require(std::isfinite(min_separation) && min_separation >= 0.0,
            "min_separation must be >= 0");
    require(n_frames >= 0, "n_frames must be >= 0");
    camera.validate();
    psf.validate();
}

EmitterSet sample_emitters(const SimConfig& config, std::int64_t frame_id, Rng& rng) {
    EmitterSet set;
    set.frame_id = frame_id;

    std::poisson_distribution<std::int64_t> count_dist(config.density * config.camera.area_um2());
    const std::int64_t count = count_dist(rng);

    std::uniform_real_distribution<double> ux(0.0, config.camera.width_nm());
    std::uniform_real_distribution<double> uy(0.0, config.camera.height_nm());
    std::uniform_real_distribution<double> uz(config.z_min, config.z_max);
    std::normal_distribution<double> photon_dist(config.photon_mean, config.photon_sigma);

    const double min_sep2 = config.min_separation * config.min_separation;
    constexpr int kMaxAttempts = 10000;

    set.emitters.reserve(static_cast<std::size_t>(count));
    for (std::int64_t k = 0; k < count; ++k) {
        Emitter e;
        e.id = k;
        for (int attempt = 0;; ++attempt) {
            if (attempt == kMaxAttempts) {
                throw ValidationError("cannot place " + std::to_string(count) +
                                      " emitters with min_separation " +
                                      std::to_string(config.min_separation) + " nm");
            }
            e.x = ux(rng);
            e.y = uy(rng);
            if (min_sep2 <= 0.0) break;
            const bool clear = std::none_of(set.emitters.begin(), set.emitters.end(), [&](const Emitter& o) {
                const double dx = o.x - e.x;
                const double dy = o.y - e.y;
                return dx * dx + dy * dy < min_sep2;
            });
            if (clear) break;
        }
        // uniform_real_distribution may round up to the upper bound.
        e.x = std::min(e.x, std::nextafter(config.camera.width_nm(), 0.0));
        e.y = std::min(e.y, std::nextafter(config.camera.height_nm(), 0.0));
        e.z = std::clamp(uz(rng), config.z_min, config.z_max);
        do {
            e.photons = photon_dist(rng);
        } while (e.photons < 1.0);
        set.emitters.push_back(e);
    }
    return set;
}

AxisSigmas psf_sigmas(double z, const PsfModel& psf) {
    if (psf.modality != PsfModality::Astigmatic) {
        throw ModalityMismatch("psf_sigmas requires the astigmatic modality");
    }
    const double ax = (z - psf.gamma) / psf.d;
    const double ay = (z + psf.gamma) / psf.d;
    return {psf.sigma0 * std::sqrt(1.0 + ax * ax), psf.sigma0 * std::sqrt(1.0 + ay * ay)};
}

DoubleHelixLobes psf_dh_lobes(double z, const PsfModel& psf) {
    if (psf.modality != PsfModality::DoubleHelix) {
        throw ModalityMismatch("psf_dh_lobes requires the double-helix modality");
    }
    const double theta = psf.dh_rotation_rate * z;
    const double half = 0.5 * psf.dh_lobe_distance;
    const double ox = half * std::cos(theta);
    const double oy = half * std::sin(theta);
    return {ox, oy, -ox, -oy, psf.sigma0};
}

PhotonImage render_clean_frame(const EmitterSet& set, const CameraModel& camera, const PsfModel& psf) {
    PhotonImage img(static_cast<std::size_t>(camera.height), static_cast<std::size_t>(camera.width), 0.0);
    for (const Emitter& e : set.emitters) {
        if (psf.modality == PsfModality::Astigmatic) {
            const auto s = psf_sigmas(e.z, psf);
            splat_gaussian(img, camera, e.x, e.y, s.sigma_x, s.sigma_y, e.photons);
        } else {
            const auto lobes = psf_dh_lobes(e.z, psf);
            splat_gaussian(img, camera, e.x + lobes.lobe1_x, e.y + lobes.lobe1_y, lobes.sigma,
                           lobes.sigma, 0.5 * e.photons);
            splat_gaussian(img, camera, e.x + lobes.lobe2_x, e.y + lobes.lobe2_y, lobes.sigma,
                           lobes.sigma, 0.5 * e.photons);
        }
    }
    for (double& v : img.values()) v += camera.background_rate;
    return img;
}

Frame apply_camera_noise(const PhotonImage& img, const CameraModel& camera, Rng& rng) {
    Frame frame;
    frame.pixel_pitch_x = camera.pixel_pitch_x;
    frame.pixel_pitch_y = camera.pixel_pitch_y;
    frame.adu = Grid<float>(img.height(), img.width());

    const double read_sigma = camera.gain * camera.read_noise_sigma;
    std::normal_distribution<double> read_noise(0.0, read_sigma > 0.0 ? read_sigma : 1.0);
    auto out = frame.adu.values();
    const auto in = img.values();
    for (std::size_t i = 0; i < in.size(); ++i) {
        std::poisson_distribution<std::int64_t> shot(in[i]);
        const double electrons = in[i] > 0.0 ? static_cast<double>(shot(rng)) : 0.0;
        const double adu = camera.gain * electrons + (read_sigma > 0.0 ? read_noise(rng) : 0.0) + camera.baseline;
        out[i] = static_cast<float>(std::max(0.0, adu));
    }
    return frame;
}

std::pair<Frame, EmitterSet> simulate_frame(const SimConfig& config, std::int64_t frame_id) {
    const auto id = static_cast<std::uint64_t>(frame_id);
    Rng emitter_rng = make_rng(config.rng_seed, id, Stream::Emitters);
    EmitterSet set = sample_emitters(config, frame_id, emitter_rng);
    Rng noise_rng = make_rng(config.rng_seed, id, Stream::CameraNoise);
    Frame frame = apply_camera_noise(render_clean_frame(set, config.camera, config.psf), config.camera, noise_rng);
    frame.frame_id = frame_id;
    return {std::move(frame), std::move(set)};
}

void simulate_dataset(const SimConfig& config,
                      const std::function<void(const Frame&, const EmitterSet&)>& sink,
                      unsigned workers) {
    config.validate();
    constexpr std::int64_t kChunk = 64;
    std::vector<std::optional<std::pair<Frame, EmitterSet>>> chunk;
    for (std::int64_t start = 0; start < config.n_frames; start += kChunk) {
        const std::int64_t n = std::min(kChunk, config.n_frames - start);
        chunk.assign(static_cast<std::size_t>(n), std::nullopt);
        parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t i) {
            chunk[i] = simulate_frame(config, start + static_cast<std::int64_t>(i));
        });
        for (const auto& item : chunk) sink(item->first, item->second);
    }
}

}  // namespace luenn
