#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "luenn/grid.hpp"
#include "luenn/rng.hpp"

namespace luenn {

/// Ground-truth emitter. Positions in nm, measured from the frame's top-left
/// corner; x runs along columns and y along rows.
struct Emitter {
    std::int64_t id = 0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double photons = 0.0;

    bool operator==(const Emitter&) const = default;
};

struct EmitterSet {
    std::int64_t frame_id = 0;
    std::vector<Emitter> emitters;

    bool operator==(const EmitterSet&) const = default;
};

struct CameraModel {
    double pixel_pitch_x = 100.0;  // nm
    double pixel_pitch_y = 100.0;  // nm
    int width = 40;
    int height = 40;
    double background_rate = 20.0;  // photons / pixel / frame
    double gain = 1.0;               // ADU per electron
    double baseline = 0.0;           // ADU
    double read_noise_sigma = 1.0;   // electrons

    double width_nm() const noexcept { return width * pixel_pitch_x; }
    double height_nm() const noexcept { return height * pixel_pitch_y; }
    double area_um2() const noexcept { return width_nm() * height_nm() * 1e-6; }

    void validate() const;
};

enum class PsfModality { Astigmatic, DoubleHelix };

struct PsfModel {
    PsfModality modality = PsfModality::Astigmatic;
    double sigma0 = 130.0;            // nm, in-focus width (also the double-helix lobe width)
    double gamma = 300.0;             // nm, astigmatic focal offset
    double d = 400.0;                 // nm, depth scale
    double dh_lobe_distance = 600.0;  // nm
    double dh_rotation_rate = 0.002;  // rad / nm

    void validate() const;
};

struct SimConfig {
    double density = 1.0;  // emitters / um^2
    double photon_mean = 5000.0;
    double photon_sigma = 250.0;
    double z_min = -750.0;
    double z_max = 750.0;
    /// Minimum pairwise lateral distance between emitters of one frame (nm); 0 disables.
    double min_separation = 0.0;
    CameraModel camera;
    PsfModel psf;
    std::int64_t n_frames = 100;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// Expected photons per pixel.
using PhotonImage = Grid<double>;

/// Camera frame in ADU.
struct Frame {
    std::int64_t frame_id = 0;
    Grid<float> adu;
    double pixel_pitch_x = 100.0;
    double pixel_pitch_y = 100.0;
};

struct AxisSigmas {
    double sigma_x;
    double sigma_y;
};

struct DoubleHelixLobes {
    double lobe1_x, lobe1_y;  // offsets from the emitter position, nm
    double lobe2_x, lobe2_y;
    double sigma;
};

EmitterSet sample_emitters(const SimConfig& config, std::int64_t frame_id, Rng& rng);

/// Astigmatic widths. Throws ModalityMismatch for a double-helix model.
AxisSigmas psf_sigmas(double z, const PsfModel& psf);

/// Double-helix lobe geometry. Throws ModalityMismatch for an astigmatic model.
DoubleHelixLobes psf_dh_lobes(double z, const PsfModel& psf);

/// Noise-free expected photon image with exact pixel integration.
PhotonImage render_clean_frame(const EmitterSet& set, const CameraModel& camera,
                               const PsfModel& psf);

Frame apply_camera_noise(const PhotonImage& img, const CameraModel& camera, Rng& rng);

/// One simulated frame, reproducible in isolation from (rng_seed, frame_id).
std::pair<Frame, EmitterSet> simulate_frame(const SimConfig& config, std::int64_t frame_id);

/// Produces config.n_frames frames and hands them to `sink` in frame order.
/// Work is spread over `workers` threads; output does not depend on it.
void simulate_dataset(const SimConfig& config,
                      const std::function<void(const Frame&, const EmitterSet&)>& sink,
                      unsigned workers = 1);

}  // namespace luenn
