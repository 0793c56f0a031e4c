#include "luenn/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "luenn/error.hpp"

namespace luenn::io {

namespace {

static_assert(std::numeric_limits<float>::is_iec559 && std::numeric_limits<double>::is_iec559);

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    using U = std::conditional_t<sizeof(T) == 2, std::uint16_t, std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
    using U = std::conditional_t<sizeof(T) == 2, std::uint16_t, std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(static_cast<U>(bytes[offset + i]) << (8 * i));
    return std::bit_cast<T>(bits);
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
    return std::string(buf, res.ptr);
}

bool parse_double(std::string_view text, double& out) {
    if (text.empty()) return false;
    const char* first = text.data();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, text.data() + text.size(), out);
    return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

bool parse_int(std::string_view text, std::int64_t& out) {
    if (text.empty()) return false;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

void write_emitters(std::ostream& out, std::span<const EmitterSet> frames) {
    out << kEmitterHeader << '\n';
    for (const EmitterSet& set : frames) {
        for (const Emitter& e : set.emitters) {
            out << set.frame_id << ',' << e.id << ',' << format_double(e.x) << ',' << format_double(e.y) << ','
                << format_double(e.z) << ',' << format_double(e.photons) << '\n';
        }
    }
}

void write_seeds(std::ostream& out, std::span<const Seed> seeds) {
    out << kSeedHeader << '\n';
    std::map<std::int64_t, std::int64_t> next_id;
    for (const Seed& s : seeds) {
        out << s.frame_id << ',' << next_id[s.frame_id]++ << ',' << format_double(s.x) << ',' << format_double(s.y)
            << ',' << format_double(s.z) << ",-1," << format_double(s.peak_magnitude) << ','
            << format_double(s.peak_sharpness) << ',' << format_double(s.phase_dispersion) << '\n';
    }
}

EmitterList read_emitter_list(std::istream& in, const std::string& source) {
    EmitterList list;
    std::string line;
    if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
    const std::string_view header = strip_cr(line);
    if (header == kSeedHeader) {
        list.has_features = true;
    } else if (header != kEmitterHeader) {
        throw ParseError(source, 1, "unexpected header '" + std::string(header) + "'");
    }
    const std::size_t n_fields = list.has_features ? 9 : 6;

    std::map<std::int64_t, std::size_t> frame_slot;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view row = strip_cr(line);
        if (row.empty()) continue;
        const auto fields = split(row, ',');
        if (fields.size() != n_fields) {
            throw ParseError(source, line_no, "expected " + std::to_string(n_fields) + " fields, found " +
                                                  std::to_string(fields.size()));
        }
        std::int64_t frame = 0, id = 0;
        if (!parse_int(fields[0], frame)) throw ParseError(source, line_no, "bad frame '" + std::string(fields[0]) + "'");
        if (!parse_int(fields[1], id)) throw ParseError(source, line_no, "bad id '" + std::string(fields[1]) + "'");
        double values[7] = {0, 0, 0, 0, 0, 0, 0};
        for (std::size_t k = 2; k < n_fields; ++k) {
            if (!parse_double(fields[k], values[k - 2]) || !std::isfinite(values[k - 2])) {
                throw ParseError(source, line_no, "bad number '" + std::string(fields[k]) + "'");
            }
        }
        Emitter e{id, values[0], values[1], values[2], values[3]};
        auto [it, inserted] = frame_slot.try_emplace(frame, list.frames.size());
        if (inserted) list.frames.push_back(EmitterSet{frame, {}});
        list.frames[it->second].emitters.push_back(e);

        Seed s;
        s.frame_id = frame;
        s.x = e.x;
        s.y = e.y;
        s.z = e.z;
        if (list.has_features) {
            s.peak_magnitude = values[4];
            s.peak_sharpness = values[5];
            s.phase_dispersion = values[6];
        }
        list.seeds.push_back(s);
    }
    return list;
}

void write_emitters_file(const std::filesystem::path& path, std::span<const EmitterSet> frames) {
    auto out = open_out(path);
    write_emitters(out, frames);
    finish(out, path);
}

void write_seeds_file(const std::filesystem::path& path, std::span<const Seed> seeds) {
    auto out = open_out(path);
    write_seeds(out, seeds);
    finish(out, path);
}

EmitterList read_emitter_list_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_emitter_list(in, path.string());
}

std::vector<std::uint8_t> encode_grid(const GridFile& grid) {
    if (grid.channels.empty()) throw ValidationError("grid file needs at least one channel");
    const std::size_t h = grid.channels.front().height();
    const std::size_t w = grid.channels.front().width();
    for (const auto& ch : grid.channels) {
        if (ch.height() != h || ch.width() != w) throw ValidationError("grid channels differ in shape");
    }
    std::vector<std::uint8_t> out;
    out.reserve(kGridHeaderBytes + grid.channels.size() * h * w * 4);
    out.insert(out.end(), {'L', 'U', 'G', 'R'});
    put_le(out, kGridVersion);
    put_le(out, kGridDtypeF32);
    put_le(out, static_cast<std::uint32_t>(grid.channels.size()));
    put_le(out, static_cast<std::uint32_t>(h));
    put_le(out, static_cast<std::uint32_t>(w));
    put_le(out, grid.pixel_pitch);
    put_le(out, grid.z_min);
    put_le(out, grid.z_max);
    for (const auto& ch : grid.channels) {
        for (float v : ch.values()) put_le(out, v);
    }
    return out;
}

GridFile decode_grid(std::span<const std::uint8_t> bytes, const std::string& source) {
    if (bytes.size() < kGridHeaderBytes) {
        throw ParseError(source, bytes.size(), "truncated header: expected " + std::to_string(kGridHeaderBytes) +
                                                   " bytes, found " + std::to_string(bytes.size()));
    }
    if (std::memcmp(bytes.data(), "LUGR", 4) != 0) throw ParseError(source, 0, "magic mismatch (expected LUGR)");
    const auto version = get_le<std::uint16_t>(bytes, 4);
    if (version != kGridVersion) throw ParseError(source, 4, "unsupported version " + std::to_string(version));
    const auto dtype = get_le<std::uint16_t>(bytes, 6);
    if (dtype != kGridDtypeF32) throw ParseError(source, 6, "unsupported dtype tag " + std::to_string(dtype));
    const auto n_channels = get_le<std::uint32_t>(bytes, 8);
    const auto height = get_le<std::uint32_t>(bytes, 12);
    const auto width = get_le<std::uint32_t>(bytes, 16);
    if (n_channels == 0 || height == 0 || width == 0) throw ParseError(source, 8, "zero dimension in header");

    GridFile grid;
    grid.pixel_pitch = get_le<double>(bytes, 20);
    grid.z_min = get_le<double>(bytes, 28);
    grid.z_max = get_le<double>(bytes, 36);

    const std::uint64_t expected = std::uint64_t{n_channels} * height * width;
    const std::size_t payload = bytes.size() - kGridHeaderBytes;
    if (payload % 4 != 0 || payload / 4 != expected) {
        const std::string counts = "expected " + std::to_string(expected) + " floats, found " +
                                   std::to_string(payload / 4) + (payload % 4 ? " and a partial value" : "");
        if (payload < expected * 4) throw ParseError(source, bytes.size(), "truncated payload: " + counts);
        throw ParseError(source, kGridHeaderBytes + expected * 4, "payload length mismatch: " + counts);
    }

    std::size_t offset = kGridHeaderBytes;
    grid.channels.reserve(n_channels);
    for (std::uint32_t c = 0; c < n_channels; ++c) {
        Grid<float> ch(height, width);
        for (float& v : ch.values()) {
            v = get_le<float>(bytes, offset);
            offset += 4;
        }
        grid.channels.push_back(std::move(ch));
    }
    return grid;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
    return bytes;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    auto out = open_out(path, std::ios::out | std::ios::binary);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    finish(out, path);
}

void write_grid_file(const std::filesystem::path& path, const GridFile& grid) {
    const auto bytes = encode_grid(grid);
    auto out = open_out(path, std::ios::out | std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    finish(out, path);
}

GridFile read_grid_file(const std::filesystem::path& path) { return decode_grid(read_bytes(path), path.string()); }

GridFile to_grid(const Frame& frame, double z_min, double z_max) {
    return GridFile{{frame.adu}, frame.pixel_pitch_x, z_min, z_max};
}

Frame frame_from_grid(const GridFile& grid, std::int64_t frame_id) {
    if (grid.channels.size() != 1) {
        throw ValidationError("frame grid must have 1 channel, found " + std::to_string(grid.channels.size()));
    }
    Frame f;
    f.frame_id = frame_id;
    f.adu = grid.channels.front();
    f.pixel_pitch_x = f.pixel_pitch_y = grid.pixel_pitch;
    return f;
}

GridFile to_grid(const ComplexMapPair& pair) {
    pair.validate();
    GridFile grid;
    grid.pixel_pitch = pair.pixel_pitch;
    grid.z_min = pair.z_min;
    grid.z_max = pair.z_max;
    for (const Grid<double>* src : {&pair.re, &pair.im}) {
        Grid<float> ch(src->height(), src->width());
        auto dst = ch.values();
        const auto in = src->values();
        for (std::size_t i = 0; i < in.size(); ++i) dst[i] = static_cast<float>(in[i]);
        grid.channels.push_back(std::move(ch));
    }
    return grid;
}

ComplexMapPair pair_from_grid(const GridFile& grid) {
    if (grid.channels.size() != 2) {
        throw ValidationError("complex map grid must have 2 channels, found " + std::to_string(grid.channels.size()));
    }
    ComplexMapPair pair;
    pair.pixel_pitch = grid.pixel_pitch;
    pair.z_min = grid.z_min;
    pair.z_max = grid.z_max;
    Grid<double>* dst[2] = {&pair.re, &pair.im};
    for (std::size_t c = 0; c < 2; ++c) {
        const auto& src = grid.channels[c];
        *dst[c] = Grid<double>(src.height(), src.width());
        auto out = dst[c]->values();
        const auto in = src.values();
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i];
    }
    pair.validate();
    return pair;
}

void write_reports(std::ostream& out, std::span<const MetricReport> reports) {
    out << "density\tn_frames\tn_seeds\tn_tp\tn_fp\tn_fn\tji\trmse_lateral\trmse_axial\trmse_3d\t"
           "efficiency_lateral\tefficiency_3d\tseeds_to_converge\n";
    for (const MetricReport& r : reports) {
        out << format_double(r.density) << '\t' << r.n_frames << '\t' << r.n_seeds << '\t' << r.n_tp << '\t'
            << r.n_fp << '\t' << r.n_fn << '\t' << format_double(r.ji) << '\t' << format_double(r.rmse_lateral)
            << '\t' << format_double(r.rmse_axial) << '\t' << format_double(r.rmse_3d) << '\t'
            << format_double(r.efficiency_lateral) << '\t' << format_double(r.efficiency_3d) << '\t';
        if (r.seeds_to_converge) {
            out << *r.seeds_to_converge;
        } else {
            out << "NA";
        }
        out << '\n';
    }
}

void write_filter_curve(std::ostream& out, std::span<const FilterPoint> curve) {
    out << "rate\tn_seeds\tji\trmse_lateral\trmse_3d\n";
    for (const FilterPoint& p : curve) {
        out << format_double(p.rate) << '\t' << p.n_seeds << '\t' << format_double(p.ji) << '\t'
            << format_double(p.rmse_lateral) << '\t' << format_double(p.rmse_3d) << '\n';
    }
}

}  // namespace luenn::io
