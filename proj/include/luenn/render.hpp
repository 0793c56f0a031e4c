#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "luenn/codec.hpp"
#include "luenn/grid.hpp"

namespace luenn {

enum class ColorMode { Depth, FrameId, Density };
enum class IntensityScale { Linear, Sqrt };
enum class Axis { X, Y, Z };

struct Region {
    double x0, y0, x1, y1;  // nm, half-open [x0, x1) x [y0, y1)
};

struct CrossSection {
    Axis axis = Axis::Y;
    double center = 0.0;     // nm
    double thickness = 0.0;  // nm
};

struct RenderConfig {
    double bin_size = 5.0;  // nm
    ColorMode color_mode = ColorMode::Depth;
    double z_clip_min = -750.0;
    double z_clip_max = 750.0;
    IntensityScale intensity_scale = IntensityScale::Sqrt;
    std::optional<Region> region;
    std::optional<CrossSection> cross_section;

    void validate() const;
};

struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // row-major RGB

    std::array<std::uint8_t, 3> at(std::size_t row, std::size_t col) const {
        const std::size_t i = 3 * (row * width + col);
        return {pixels[i], pixels[i + 1], pixels[i + 2]};
    }
};

struct RenderResult {
    RgbImage image;
    Grid<double> mass;  // per-bin seed counts before color mapping
    Region region{0, 0, 0, 0};
    bool empty = false;  // nothing fell inside the region / slab
};

/// Perceptually uniform ramp (viridis control points); t is clamped to [0, 1].
std::array<std::uint8_t, 3> colormap(double t);

RenderResult render_histogram(std::span<const Seed> seeds, const RenderConfig& cfg);

/// Renders the seeds inside the configured slab projected onto the plane
/// orthogonal to the slab axis: Y -> (x, z), X -> (y, z), Z -> (x, y).
RenderResult render_cross_section(std::span<const Seed> seeds, const RenderConfig& cfg);

void write_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace luenn
