#include "luenn/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

#include <png.h>

#include "luenn/error.hpp"

namespace luenn {

namespace {

struct Point {
    double u, v;  // image-plane coordinates (columns, rows)
    double z;
    double frame;
};

constexpr std::array<std::array<double, 3>, 9> kViridis{{
    {68, 1, 84},
    {71, 44, 122},
    {59, 81, 139},
    {44, 113, 142},
    {33, 144, 141},
    {39, 173, 129},
    {92, 200, 99},
    {170, 220, 50},
    {253, 231, 37},
}};

Region bounding_box(std::span<const Point> points, double bin) {
    double x0 = std::numeric_limits<double>::infinity();
    double y0 = x0;
    double x1 = -x0;
    double y1 = -x0;
    for (const Point& p : points) {
        x0 = std::min(x0, p.u);
        y0 = std::min(y0, p.v);
        x1 = std::max(x1, p.u);
        y1 = std::max(y1, p.v);
    }
    // Extend the upper edge by one bin so the extreme seeds fall inside.
    return {x0, y0, x1 + bin, y1 + bin};
}

RenderResult rasterize(std::vector<Point> points, const RenderConfig& cfg) {
    RenderResult out;
    if (cfg.region) {
        const Region r = *cfg.region;
        std::erase_if(points, [&](const Point& p) { return !(p.u >= r.x0 && p.u < r.x1 && p.v >= r.y0 && p.v < r.y1); });
        out.region = r;
    } else if (!points.empty()) {
        out.region = bounding_box(points, cfg.bin_size);
    }

    const auto cols = static_cast<std::size_t>(std::max(1.0, std::ceil((out.region.x1 - out.region.x0) / cfg.bin_size)));
    const auto rows = static_cast<std::size_t>(std::max(1.0, std::ceil((out.region.y1 - out.region.y0) / cfg.bin_size)));
    out.mass = Grid<double>(rows, cols, 0.0);
    out.image.width = cols;
    out.image.height = rows;
    out.image.pixels.assign(rows * cols * 3, 0);
    out.empty = points.empty();
    if (points.empty()) return out;

    Grid<double> z_sum(rows, cols, 0.0);
    Grid<double> frame_sum(rows, cols, 0.0);
    double frame_lo = std::numeric_limits<double>::infinity();
    double frame_hi = -frame_lo;
    for (const Point& p : points) {
        const auto c = std::min(cols - 1, static_cast<std::size_t>((p.u - out.region.x0) / cfg.bin_size));
        const auto r = std::min(rows - 1, static_cast<std::size_t>((p.v - out.region.y0) / cfg.bin_size));
        out.mass(r, c) += 1.0;
        z_sum(r, c) += p.z;
        frame_sum(r, c) += p.frame;
        frame_lo = std::min(frame_lo, p.frame);
        frame_hi = std::max(frame_hi, p.frame);
    }

    const double max_mass = *std::max_element(out.mass.values().begin(), out.mass.values().end());
    const double z_span = cfg.z_clip_max - cfg.z_clip_min;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double m = out.mass(r, c);
            if (m == 0.0) continue;
            double t = 0.0;
            switch (cfg.color_mode) {
                case ColorMode::Depth: t = (z_sum(r, c) / m - cfg.z_clip_min) / z_span; break;
                case ColorMode::FrameId:
                    t = frame_hi > frame_lo ? (frame_sum(r, c) / m - frame_lo) / (frame_hi - frame_lo) : 0.5;
                    break;
                case ColorMode::Density: t = m / max_mass; break;
            }
            double intensity = m / max_mass;
            if (cfg.intensity_scale == IntensityScale::Sqrt) intensity = std::sqrt(intensity);
            const auto rgb = colormap(t);
            const std::size_t i = 3 * (r * cols + c);
            for (std::size_t k = 0; k < 3; ++k) {
                // Never round a populated bin down to black.
                const double v = std::max(1.0, std::round(rgb[k] * intensity));
                out.image.pixels[i + k] = static_cast<std::uint8_t>(std::min(255.0, v));
            }
        }
    }
    return out;
}

bool in_clip(const Seed& s, const RenderConfig& cfg) {
    return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.z) && s.z >= cfg.z_clip_min &&
           s.z <= cfg.z_clip_max;
}

}  // namespace

void RenderConfig::validate() const {
    if (!(std::isfinite(bin_size) && bin_size > 0.0)) throw ValidationError("bin_size must be positive");
    if (!(z_clip_min < z_clip_max)) throw ValidationError("z_clip must be ordered");
    if (region && !(region->x0 < region->x1 && region->y0 < region->y1)) {
        throw ValidationError("render region must have positive extent");
    }
    if (cross_section && !(cross_section->thickness > 0.0)) {
        throw ValidationError("cross-section thickness must be positive");
    }
}

std::array<std::uint8_t, 3> colormap(double t) {
    t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
    const double pos = t * static_cast<double>(kViridis.size() - 1);
    const auto lo = std::min(kViridis.size() - 2, static_cast<std::size_t>(pos));
    const double f = pos - static_cast<double>(lo);
    std::array<std::uint8_t, 3> out{};
    for (std::size_t k = 0; k < 3; ++k) {
        const double v = kViridis[lo][k] + f * (kViridis[lo + 1][k] - kViridis[lo][k]);
        out[k] = static_cast<std::uint8_t>(std::lround(v));
    }
    return out;
}

RenderResult render_histogram(std::span<const Seed> seeds, const RenderConfig& cfg) {
    cfg.validate();
    std::vector<Point> points;
    points.reserve(seeds.size());
    for (const Seed& s : seeds) {
        if (in_clip(s, cfg)) points.push_back({s.x, s.y, s.z, static_cast<double>(s.frame_id)});
    }
    return rasterize(std::move(points), cfg);
}

RenderResult render_cross_section(std::span<const Seed> seeds, const RenderConfig& cfg) {
    cfg.validate();
    if (!cfg.cross_section) throw ValidationError("render_cross_section requires a cross-section");
    const CrossSection& cs = *cfg.cross_section;
    std::vector<Point> points;
    for (const Seed& s : seeds) {
        if (!in_clip(s, cfg)) continue;
        const double coord = cs.axis == Axis::X ? s.x : cs.axis == Axis::Y ? s.y : s.z;
        if (std::abs(coord - cs.center) > 0.5 * cs.thickness) continue;
        const double frame = static_cast<double>(s.frame_id);
        switch (cs.axis) {
            case Axis::X: points.push_back({s.y, s.z, s.z, frame}); break;
            case Axis::Y: points.push_back({s.x, s.z, s.z, frame}); break;
            case Axis::Z: points.push_back({s.x, s.y, s.z, frame}); break;
        }
    }
    return rasterize(std::move(points), cfg);
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
    if (image.width == 0 || image.height == 0) throw ValidationError("cannot write an empty PNG");
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!file) throw IoError("cannot open " + path.string() + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng failed writing " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t r = 0; r < image.height; ++r) {
        png_write_row(png, image.pixels.data() + r * image.width * 3);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace luenn
