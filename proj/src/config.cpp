#include "luenn/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "luenn/error.hpp"
#include "luenn/io.hpp"

namespace luenn {

namespace {

struct Field {
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, std::string_view)> set;
};

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    throw ValidationError("invalid value '" + std::string(value) + "' for " + std::string(key) + " (expected " +
                          std::string(expected) + ")");
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename Ref>
Field real_field(std::string_view key, Ref ref) {
    return {[ref](const RunConfig& c) { return io::format_double(ref(const_cast<RunConfig&>(c))); },
            [ref, key](RunConfig& c, std::string_view v) {
                double d = 0.0;
                if (!io::parse_double(v, d)) bad_value(key, v, "a number");
                ref(c) = d;
            }};
}

template <typename T, typename Ref>
Field integer_field(std::string_view key, Ref ref) {
    return {[ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); },
            [ref, key](RunConfig& c, std::string_view v) {
                T i{};
                const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), i);
                if (ec != std::errc{} || end != v.data() + v.size()) {
                    bad_value(key, v, std::is_unsigned_v<T> ? "a non-negative integer" : "an integer");
                }
                ref(c) = i;
            }};
}

template <typename E, typename Ref>
Field enum_field(std::string_view key, std::vector<std::pair<std::string_view, E>> names, Ref ref) {
    return {[ref, names](const RunConfig& c) {
                const E value = ref(const_cast<RunConfig&>(c));
                for (const auto& [n, e] : names) {
                    if (e == value) return std::string(n);
                }
                return std::string("?");
            },
            [ref, names, key](RunConfig& c, std::string_view v) {
                std::string options;
                for (const auto& [n, e] : names) {
                    if (n == v) {
                        ref(c) = e;
                        return;
                    }
                    options += (options.empty() ? "" : "|") + std::string(n);
                }
                bad_value(key, v, options);
            }};
}

Field string_field(std::string_view, std::string RunConfig::*member) {
    return {[member](const RunConfig& c) { return c.*member; },
            [member](RunConfig& c, std::string_view v) { c.*member = std::string(v); }};
}

std::vector<double> parse_number_list(std::string_view key, std::string_view v, std::size_t count) {
    std::vector<double> out;
    for (std::size_t start = 0;;) {
        const auto pos = v.find(',', start);
        double d = 0.0;
        const auto item = trim(v.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (!io::parse_double(item, d)) bad_value(key, v, std::to_string(count) + " comma-separated numbers");
        out.push_back(d);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    if (out.size() != count) bad_value(key, v, std::to_string(count) + " comma-separated numbers");
    return out;
}

const std::map<std::string, Field, std::less<>>& fields() {
    static const std::map<std::string, Field, std::less<>> table = [] {
        std::map<std::string, Field, std::less<>> t;
        auto real = [&](std::string_view key, auto ref) { t.emplace(std::string(key), real_field(key, ref)); };

        t.emplace("preset", string_field("preset", &RunConfig::preset));
        t.emplace("sim.snr", string_field("sim.snr", &RunConfig::snr));
        real("sim.density", [](RunConfig& c) -> double& { return c.sim.density; });
        real("sim.photon_mean", [](RunConfig& c) -> double& { return c.sim.photon_mean; });
        real("sim.photon_sigma", [](RunConfig& c) -> double& { return c.sim.photon_sigma; });
        real("sim.z_min", [](RunConfig& c) -> double& { return c.sim.z_min; });
        real("sim.z_max", [](RunConfig& c) -> double& { return c.sim.z_max; });
        real("sim.min_separation", [](RunConfig& c) -> double& { return c.sim.min_separation; });
        t.emplace("sim.n_frames", integer_field<std::int64_t>("sim.n_frames", [](RunConfig& c) -> std::int64_t& { return c.sim.n_frames; }));
        t.emplace("sim.seed", integer_field<std::uint64_t>("sim.seed", [](RunConfig& c) -> std::uint64_t& { return c.sim.rng_seed; }));

        real("camera.pixel_pitch_x", [](RunConfig& c) -> double& { return c.sim.camera.pixel_pitch_x; });
        real("camera.pixel_pitch_y", [](RunConfig& c) -> double& { return c.sim.camera.pixel_pitch_y; });
        t.emplace("camera.width", integer_field<int>("camera.width", [](RunConfig& c) -> int& { return c.sim.camera.width; }));
        t.emplace("camera.height", integer_field<int>("camera.height", [](RunConfig& c) -> int& { return c.sim.camera.height; }));
        real("camera.background_rate", [](RunConfig& c) -> double& { return c.sim.camera.background_rate; });
        real("camera.gain", [](RunConfig& c) -> double& { return c.sim.camera.gain; });
        real("camera.baseline", [](RunConfig& c) -> double& { return c.sim.camera.baseline; });
        real("camera.read_noise_sigma", [](RunConfig& c) -> double& { return c.sim.camera.read_noise_sigma; });

        t.emplace("psf.modality", enum_field<PsfModality>("psf.modality",
                                                          {{"astigmatic", PsfModality::Astigmatic}, {"double_helix", PsfModality::DoubleHelix}},
                                                          [](RunConfig& c) -> PsfModality& { return c.sim.psf.modality; }));
        real("psf.sigma0", [](RunConfig& c) -> double& { return c.sim.psf.sigma0; });
        real("psf.gamma", [](RunConfig& c) -> double& { return c.sim.psf.gamma; });
        real("psf.d", [](RunConfig& c) -> double& { return c.sim.psf.d; });
        real("psf.dh_lobe_distance", [](RunConfig& c) -> double& { return c.sim.psf.dh_lobe_distance; });
        real("psf.dh_rotation_rate", [](RunConfig& c) -> double& { return c.sim.psf.dh_rotation_rate; });

        real("decode.detection_threshold", [](RunConfig& c) -> double& { return c.decode.detection_threshold; });
        t.emplace("decode.nms_radius", integer_field<int>("decode.nms_radius", [](RunConfig& c) -> int& { return c.decode.nms_radius; }));
        t.emplace("decode.phase_window", integer_field<int>("decode.phase_window", [](RunConfig& c) -> int& { return c.decode.phase_window; }));
        real("decode.target_sigma", [](RunConfig& c) -> double& { return c.decode.target_sigma; });
        real("decode.map_noise", [](RunConfig& c) -> double& { return c.map_noise; });

        real("metrics.tol_lateral", [](RunConfig& c) -> double& { return c.match.tol_lateral; });
        real("metrics.tol_axial", [](RunConfig& c) -> double& { return c.match.tol_axial; });
        t.emplace("metrics.match_mode", enum_field<MatchMode>("metrics.match_mode",
                                                              {{"volumetric", MatchMode::Volumetric}, {"lateral", MatchMode::Lateral}},
                                                              [](RunConfig& c) -> MatchMode& { return c.match.mode; }));
        real("metrics.rel_tolerance", [](RunConfig& c) -> double& { return c.convergence.rel_tolerance; });
        t.emplace("metrics.patience", integer_field<std::size_t>("metrics.patience", [](RunConfig& c) -> std::size_t& { return c.convergence.patience; }));
        t.emplace("metrics.checkpoint_seeds", integer_field<std::size_t>("metrics.checkpoint_seeds", [](RunConfig& c) -> std::size_t& { return c.convergence.checkpoint_seeds; }));

        real("filter.rate", [](RunConfig& c) -> double& { return c.filter_rate; });
        real("filter.c_lateral", [](RunConfig& c) -> double& { return c.proxy.c_lateral; });
        real("filter.c_axial", [](RunConfig& c) -> double& { return c.proxy.c_axial; });

        real("render.bin_size", [](RunConfig& c) -> double& { return c.render.bin_size; });
        t.emplace("render.color_mode", enum_field<ColorMode>("render.color_mode",
                                                             {{"depth", ColorMode::Depth}, {"frame_id", ColorMode::FrameId}, {"density", ColorMode::Density}},
                                                             [](RunConfig& c) -> ColorMode& { return c.render.color_mode; }));
        real("render.z_clip_min", [](RunConfig& c) -> double& { return c.render.z_clip_min; });
        real("render.z_clip_max", [](RunConfig& c) -> double& { return c.render.z_clip_max; });
        t.emplace("render.intensity_scale", enum_field<IntensityScale>("render.intensity_scale",
                                                                       {{"linear", IntensityScale::Linear}, {"sqrt", IntensityScale::Sqrt}},
                                                                       [](RunConfig& c) -> IntensityScale& { return c.render.intensity_scale; }));
        t.emplace("render.region", Field{
            [](const RunConfig& c) {
                if (!c.render.region) return std::string("none");
                const Region& r = *c.render.region;
                return io::format_double(r.x0) + "," + io::format_double(r.y0) + "," + io::format_double(r.x1) + "," +
                       io::format_double(r.y1);
            },
            [](RunConfig& c, std::string_view v) {
                if (v == "none") {
                    c.render.region.reset();
                    return;
                }
                const auto n = parse_number_list("render.region", v, 4);
                c.render.region = Region{n[0], n[1], n[2], n[3]};
            }});
        t.emplace("render.cross_section", Field{
            [](const RunConfig& c) {
                if (!c.render.cross_section) return std::string("none");
                const CrossSection& cs = *c.render.cross_section;
                const char* axis = cs.axis == Axis::X ? "x" : cs.axis == Axis::Y ? "y" : "z";
                return std::string(axis) + "," + io::format_double(cs.center) + "," + io::format_double(cs.thickness);
            },
            [](RunConfig& c, std::string_view v) {
                if (v == "none") {
                    c.render.cross_section.reset();
                    return;
                }
                if (v.size() < 2 || v[1] != ',' || (v[0] != 'x' && v[0] != 'y' && v[0] != 'z')) {
                    bad_value("render.cross_section", v, "none or axis,center,thickness");
                }
                const auto n = parse_number_list("render.cross_section", v.substr(2), 2);
                const Axis axis = v[0] == 'x' ? Axis::X : v[0] == 'y' ? Axis::Y : Axis::Z;
                c.render.cross_section = CrossSection{axis, n[0], n[1]};
            }});
        return t;
    }();
    return table;
}

struct PresetRow {
    std::string_view name;
    double photon_mean;
    double photon_sigma;
    double density;
    std::string_view snr;
    PsfModality modality;
};

constexpr PresetRow kPresets[] = {
    {"AI-1", 1000, 50, 0.77, "low", PsfModality::Astigmatic},
    {"AI-2", 5000, 250, 0.77, "medium", PsfModality::Astigmatic},
    {"AI-3", 20000, 1000, 0.77, "high", PsfModality::Astigmatic},
    {"AI-4", 1000, 50, 4.13, "low", PsfModality::Astigmatic},
    {"AI-5", 5000, 250, 4.13, "medium", PsfModality::Astigmatic},
    {"AI-6", 20000, 1000, 4.13, "high", PsfModality::Astigmatic},
    {"AI-7", 1000, 50, 15.5, "low", PsfModality::Astigmatic},
    {"AI-8", 5000, 250, 15.5, "medium", PsfModality::Astigmatic},
    {"AI-9", 20000, 1000, 15.5, "high", PsfModality::Astigmatic},
    {"AI-AS", 1000, 300, 0.62, "low", PsfModality::Astigmatic},
    {"AI-DH", 3600, 1000, 0.62, "low", PsfModality::DoubleHelix},
};

}  // namespace

void RunConfig::validate() const {
    sim.validate();
    decode.validate();
    render.validate();
    if (!(match.tol_lateral > 0.0 && match.tol_axial > 0.0)) throw ValidationError("matching tolerances must be positive");
    if (!(convergence.rel_tolerance > 0.0) || convergence.patience == 0 || convergence.checkpoint_seeds == 0) {
        throw ValidationError("convergence settings must be positive");
    }
    if (!(filter_rate >= 0.0 && filter_rate <= kMaxFilterRate)) throw RangeError("filter.rate must lie in [0, 0.85]");
    if (!(map_noise >= 0.0)) throw ValidationError("decode.map_noise must be >= 0");
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const PresetRow& p : kPresets) v.emplace_back(p.name);
        return v;
    }();
    return names;
}

RunConfig expand_preset(std::string_view name) {
    for (const PresetRow& p : kPresets) {
        if (p.name != name) continue;
        RunConfig cfg;
        cfg.preset = std::string(p.name);
        cfg.snr = std::string(p.snr);
        cfg.sim.photon_mean = p.photon_mean;
        cfg.sim.photon_sigma = p.photon_sigma;
        cfg.sim.density = p.density;
        cfg.sim.psf.modality = p.modality;
        return cfg;
    }
    throw ValidationError("unknown preset '" + std::string(name) + "'");
}

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
    const auto it = fields().find(key);
    if (it == fields().end()) throw ValidationError("unknown config key '" + std::string(key) + "'");
    it->second.set(cfg, value);
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, f] : fields()) keys.push_back(k);
    return keys;
}

std::string serialize_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& [key, field] : fields()) out += key + " = " + field.get(cfg) + "\n";
    return out;
}

RunConfig parse_config(std::string_view text, RunConfig base, const std::string& source) {
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        start = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (fields().find(key) == fields().end()) {
            throw ParseError(source, line_no, "unknown key '" + std::string(key) + "'");
        }
        if (!seen.insert(std::string(key)).second) throw ParseError(source, line_no, "duplicate key '" + std::string(key) + "'");
        try {
            set_config_value(base, key, value);
        } catch (const ParseError&) {
            throw;
        } catch (const ValidationError& e) {
            throw ParseError(source, line_no, e.what());
        }
    }
    return base;
}

RunConfig read_config_file(const std::string& path, RunConfig base) {
    return parse_config(io::read_text(path), std::move(base), path);
}

}  // namespace luenn
