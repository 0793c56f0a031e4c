#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "luenn/codec.hpp"
#include "luenn/grid.hpp"
#include "luenn/metrics.hpp"
#include "luenn/filtering.hpp"
#include "luenn/sim.hpp"

namespace luenn::io {

/// Shortest locale-independent form with at most 9 significant digits.
std::string format_double(double v);

/// Locale-independent parse of the whole of `text`; false on any leftover.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, std::int64_t& out);

// ---------------------------------------------------------------------------
// Emitter-list CSV
//
//   frame,id,x_nm,y_nm,z_nm,photons
//   frame,id,x_nm,y_nm,z_nm,photons,peak_mag,sharpness,dispersion   (decoded seeds, photons = -1)
// ---------------------------------------------------------------------------

inline constexpr std::string_view kEmitterHeader = "frame,id,x_nm,y_nm,z_nm,photons";
inline constexpr std::string_view kSeedHeader = "frame,id,x_nm,y_nm,z_nm,photons,peak_mag,sharpness,dispersion";

void write_emitters(std::ostream& out, std::span<const EmitterSet> frames);
void write_seeds(std::ostream& out, std::span<const Seed> seeds);

struct EmitterList {
    bool has_features = false;
    std::vector<EmitterSet> frames;  // grouped by frame id, in order of first appearance
    LocalizationSet seeds;           // every row, in file order
};

EmitterList read_emitter_list(std::istream& in, const std::string& source = "<stream>");

void write_emitters_file(const std::filesystem::path& path, std::span<const EmitterSet> frames);
void write_seeds_file(const std::filesystem::path& path, std::span<const Seed> seeds);
EmitterList read_emitter_list_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// GridFile: 44-byte little-endian header then f32 payload.
//
//   offset  size  field
//        0     4  magic "LUGR"
//        4     2  version (1)
//        6     2  dtype tag (1 = f32)
//        8     4  n_channels
//       12     4  height
//       16     4  width
//       20     8  pixel_pitch_nm (f64)
//       28     8  z_min (f64)
//       36     8  z_max (f64)
//       44     -  n_channels * height * width f32, channel-major then row-major
// ---------------------------------------------------------------------------

inline constexpr std::uint16_t kGridVersion = 1;
inline constexpr std::uint16_t kGridDtypeF32 = 1;
inline constexpr std::size_t kGridHeaderBytes = 44;

struct GridFile {
    std::vector<Grid<float>> channels;
    double pixel_pitch = 0.0;
    double z_min = 0.0;
    double z_max = 0.0;

    bool operator==(const GridFile&) const = default;
};

std::vector<std::uint8_t> encode_grid(const GridFile& grid);
GridFile decode_grid(std::span<const std::uint8_t> bytes, const std::string& source = "<buffer>");

void write_grid_file(const std::filesystem::path& path, const GridFile& grid);
GridFile read_grid_file(const std::filesystem::path& path);

GridFile to_grid(const Frame& frame, double z_min, double z_max);
Frame frame_from_grid(const GridFile& grid, std::int64_t frame_id);
GridFile to_grid(const ComplexMapPair& pair);
/// Requires exactly two channels.
ComplexMapPair pair_from_grid(const GridFile& grid);

// ---------------------------------------------------------------------------
// Tabular reports
// ---------------------------------------------------------------------------

void write_reports(std::ostream& out, std::span<const MetricReport> reports);
void write_filter_curve(std::ostream& out, std::span<const FilterPoint> curve);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace luenn::io
