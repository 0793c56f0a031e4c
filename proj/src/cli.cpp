#include "luenn/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "luenn/config.hpp"
#include "luenn/error.hpp"
#include "luenn/filtering.hpp"
#include "luenn/io.hpp"
#include "luenn/metrics.hpp"
#include "luenn/parallel.hpp"
#include "luenn/render.hpp"

namespace fs = std::filesystem;

namespace luenn {

namespace {

struct CommonOptions {
    std::optional<std::string> preset;
    std::optional<std::string> config;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
};

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("--preset", o.preset, "Named preset (AI-1..AI-9, AI-AS, AI-DH)");
    app->add_option("--config", o.config, "Run configuration file (key = value)");
    app->add_option("--set", o.sets, "Override one config key: key=value (repeatable)");
    app->add_option("--seed", o.seed, "Master random seed");
    app->add_option("--workers", o.workers, "Worker threads; output does not depend on it")->check(CLI::PositiveNumber);
}

// Composition order: defaults < preset < config file < --set < dedicated flags.
RunConfig resolve(const CommonOptions& o, RunConfig base = {}) {
    RunConfig cfg = o.preset ? expand_preset(*o.preset) : std::move(base);
    if (o.config) cfg = read_config_file(*o.config, std::move(cfg));
    for (const std::string& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.seed) cfg.sim.rng_seed = *o.seed;
    return cfg;
}

std::string numbered(std::string_view stem, std::int64_t id, std::string_view ext) {
    std::ostringstream ss;
    ss << stem << '_' << std::setw(6) << std::setfill('0') << id << ext;
    return ss.str();
}

// Trailing digits of a file stem, e.g. map_000012 -> 12.
std::optional<std::int64_t> trailing_number(const fs::path& p) {
    const std::string stem = p.stem().string();
    std::size_t i = stem.size();
    while (i > 0 && std::isdigit(static_cast<unsigned char>(stem[i - 1]))) --i;
    if (i == stem.size()) return std::nullopt;
    std::int64_t v = 0;
    if (!io::parse_int(std::string_view(stem).substr(i), v)) return std::nullopt;
    return v;
}

std::vector<fs::path> grid_files_in(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".lugr") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

void make_dirs(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

template <typename F>
void with_output(const std::optional<std::string>& path, std::ostream& fallback, F&& write) {
    if (!path) {
        write(fallback);
        return;
    }
    std::ostringstream ss;
    write(ss);
    io::write_text(*path, ss.str());
}

void apply_decode_flags(RunConfig& cfg, const std::optional<double>& threshold, const std::optional<int>& nms,
                        const std::optional<int>& window, const std::optional<double>& sigma) {
    if (threshold) cfg.decode.detection_threshold = *threshold;
    if (nms) cfg.decode.nms_radius = *nms;
    if (window) cfg.decode.phase_window = *window;
    if (sigma) cfg.decode.target_sigma = *sigma;
}

std::vector<EmitterSet> frames_by_id(const io::EmitterList& list, std::int64_t n_frames) {
    std::map<std::int64_t, const EmitterSet*> by_id;
    for (const EmitterSet& s : list.frames) by_id[s.frame_id] = &s;
    std::vector<EmitterSet> out;
    for (std::int64_t f = 0; f < n_frames; ++f) {
        const auto it = by_id.find(f);
        out.push_back(it != by_id.end() ? *it->second : EmitterSet{f, {}});
    }
    return out;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"SMLM simulation, complex-domain encoding/decoding and evaluation", "luenn"};
    app.require_subcommand(1);

    // simulate
    CommonOptions sim_o;
    std::string sim_out;
    std::optional<std::int64_t> sim_frames;
    std::optional<double> sim_density;
    auto* simulate = app.add_subcommand("simulate", "Simulate camera frames and ground-truth emitters");
    add_common(simulate, sim_o);
    simulate->add_option("--out", sim_out, "Output directory")->required();
    simulate->add_option("--frames", sim_frames, "Number of frames");
    simulate->add_option("--density", sim_density, "Emitters per um^2");

    // encode
    CommonOptions enc_o;
    std::optional<std::string> enc_in, enc_gt, enc_out;
    auto* encode = app.add_subcommand("encode", "Encode ground truth into complex map GridFiles");
    add_common(encode, enc_o);
    encode->add_option("--in", enc_in, "Directory written by simulate");
    encode->add_option("--gt", enc_gt, "Ground-truth emitter CSV (alternative to --in)");
    encode->add_option("--out", enc_out, "Output directory (default <in>/maps)");

    // decode
    CommonOptions dec_o;
    std::optional<std::string> dec_maps;
    std::vector<std::string> dec_map_files;
    std::string dec_out;
    std::optional<double> dec_threshold, dec_sigma;
    std::optional<int> dec_nms, dec_window;
    auto* decode_cmd = app.add_subcommand("decode", "Decode complex map GridFiles into localizations");
    add_common(decode_cmd, dec_o);
    decode_cmd->add_option("--maps", dec_maps, "Directory of 2-channel .lugr files");
    decode_cmd->add_option("--map", dec_map_files, "Single 2-channel .lugr file (repeatable)");
    decode_cmd->add_option("--out", dec_out, "Output seed CSV")->required();
    decode_cmd->add_option("--threshold", dec_threshold, "Detection threshold (fraction of unit amplitude)");
    decode_cmd->add_option("--nms-radius", dec_nms, "Non-maximum suppression radius (super-res px)");
    decode_cmd->add_option("--phase-window", dec_window, "Phase window (odd, super-res px)");
    decode_cmd->add_option("--target-sigma", dec_sigma, "Target Gaussian sigma (super-res px)");

    // evaluate
    CommonOptions ev_o;
    std::string ev_gt, ev_pred;
    std::optional<std::string> ev_out;
    std::optional<double> ev_tol_lat, ev_tol_ax, ev_density;
    bool ev_lateral = false;
    auto* evaluate = app.add_subcommand("evaluate", "Match predictions to ground truth and report metrics");
    add_common(evaluate, ev_o);
    evaluate->add_option("--gt", ev_gt, "Ground-truth CSV")->required();
    evaluate->add_option("--pred", ev_pred, "Prediction CSV")->required();
    evaluate->add_option("--tol-lateral", ev_tol_lat, "Lateral matching tolerance (nm)");
    evaluate->add_option("--tol-axial", ev_tol_ax, "Axial matching tolerance (nm)");
    evaluate->add_flag("--lateral-only", ev_lateral, "Match on lateral distance only");
    evaluate->add_option("--density", ev_density, "Density tag for the report");
    evaluate->add_option("--out", ev_out, "Report file (default stdout)");

    // sweep
    CommonOptions sw_o;
    std::vector<double> sw_densities;
    std::optional<std::int64_t> sw_frames;
    std::int64_t sw_max_frames = 100000;
    std::optional<double> sw_noise, sw_min_sep;
    std::optional<std::string> sw_out;
    auto* sweep = app.add_subcommand("sweep", "Density sweep with the oracle decoder");
    add_common(sweep, sw_o);
    sweep->add_option("--densities", sw_densities, "Comma-separated densities (emitters/um^2)")->required()->delimiter(',');
    sweep->add_option("--frames", sw_frames, "Fixed frames per density (default: until residual convergence)");
    sweep->add_option("--max-frames", sw_max_frames, "Frame cap per density when running to convergence");
    sweep->add_option("--map-noise", sw_noise, "Gaussian noise added to oracle maps");
    sweep->add_option("--min-separation", sw_min_sep, "Minimum emitter separation (nm)");
    sweep->add_option("--out", sw_out, "Columnar output (default stdout)");

    // filter
    CommonOptions fl_o;
    std::string fl_gt, fl_pred, fl_scores = "proxy";
    std::optional<double> fl_rate, fl_threshold;
    std::vector<double> fl_rates;
    std::optional<std::string> fl_out;
    auto* filter = app.add_subcommand("filter", "Uncertainty filtering of predictions");
    add_common(filter, fl_o);
    filter->add_option("--gt", fl_gt, "Ground-truth CSV (needed for curves and oracle scores)");
    filter->add_option("--pred", fl_pred, "Prediction CSV with decoder features")->required();
    filter->add_option("--rate", fl_rate, "Drop this fraction of worst-scored seeds; writes survivors");
    filter->add_option("--rates", fl_rates, "Comma-separated ascending rates; writes the curve")->delimiter(',');
    filter->add_option("--threshold", fl_threshold, "Keep seeds with score <= threshold; writes survivors");
    filter->add_option("--scores", fl_scores, "Score source")->check(CLI::IsMember({"proxy", "oracle"}));
    filter->add_option("--out", fl_out, "Output file (default stdout)");

    // render
    CommonOptions rd_o;
    std::string rd_in, rd_out;
    std::optional<std::string> rd_bin, rd_color, rd_zclip, rd_intensity, rd_region, rd_section;
    auto* render = app.add_subcommand("render", "Render a localization histogram to PNG");
    add_common(render, rd_o);
    render->add_option("--in", rd_in, "Seed or emitter CSV")->required();
    render->add_option("--out", rd_out, "PNG path")->required();
    render->add_option("--bin", rd_bin, "Bin size (nm)");
    render->add_option("--color-mode", rd_color, "depth | frame_id | density");
    render->add_option("--z-clip", rd_zclip, "zmin,zmax (nm)");
    render->add_option("--intensity", rd_intensity, "linear | sqrt");
    render->add_option("--region", rd_region, "x0,y0,x1,y1 (nm)");
    render->add_option("--cross-section", rd_section, "axis,center,thickness, e.g. y,1000,200");

    // residuals
    CommonOptions rs_o;
    std::optional<std::string> rs_gt, rs_pred, rs_out;
    std::int64_t rs_max_frames = 100000;
    std::optional<double> rs_tol;
    std::optional<std::size_t> rs_patience, rs_checkpoint;
    auto* residuals = app.add_subcommand("residuals", "Residual-convergence check of running metrics");
    add_common(residuals, rs_o);
    residuals->add_option("--gt", rs_gt, "Ground-truth CSV (with --pred); otherwise runs the oracle pipeline");
    residuals->add_option("--pred", rs_pred, "Prediction CSV");
    residuals->add_option("--max-frames", rs_max_frames, "Frame cap for the oracle run");
    residuals->add_option("--rel-tolerance", rs_tol, "Relative residual tolerance");
    residuals->add_option("--patience", rs_patience, "Consecutive quiet checkpoints required");
    residuals->add_option("--checkpoint", rs_checkpoint, "Seeds between checkpoints");
    residuals->add_option("--out", rs_out, "Checkpoint table (default stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitValidation;
    }

    try {
        if (simulate->parsed()) {
            RunConfig cfg = resolve(sim_o);
            if (sim_frames) cfg.sim.n_frames = *sim_frames;
            if (sim_density) cfg.sim.density = *sim_density;
            cfg.validate();
            const fs::path dir(sim_out);
            make_dirs(dir / "frames");
            io::write_text(dir / "config.cfg", serialize_config(cfg));
            std::vector<EmitterSet> truth;
            simulate_dataset(cfg.sim, [&](const Frame& frame, const EmitterSet& set) {
                io::write_grid_file(dir / "frames" / numbered("frame", frame.frame_id, ".lugr"),
                                    io::to_grid(frame, cfg.sim.z_min, cfg.sim.z_max));
                truth.push_back(set);
            }, sim_o.workers);
            io::write_emitters_file(dir / "emitters.csv", truth);
            std::size_t n = 0;
            for (const auto& s : truth) n += s.emitters.size();
            out << "simulated " << truth.size() << " frames, " << n << " emitters -> " << dir.string() << "\n";
            return kExitOk;
        }

        if (encode->parsed()) {
            if (!enc_in && !enc_gt) throw ValidationError("encode needs --in or --gt");
            RunConfig base;
            if (enc_in) base = read_config_file((fs::path(*enc_in) / "config.cfg").string());
            RunConfig cfg = resolve(enc_o, base);
            cfg.validate();
            const fs::path gt_path = enc_gt ? fs::path(*enc_gt) : fs::path(*enc_in) / "emitters.csv";
            const fs::path dir = enc_out ? fs::path(*enc_out) : fs::path(enc_in.value_or(".")) / "maps";
            const auto list = io::read_emitter_list_file(gt_path);
            std::int64_t n_frames = enc_in ? cfg.sim.n_frames : 0;
            for (const auto& s : list.frames) n_frames = std::max(n_frames, s.frame_id + 1);
            const auto frames = frames_by_id(list, n_frames);
            make_dirs(dir);
            parallel_for(frames.size(), enc_o.workers, [&](std::size_t i) {
                const ComplexMapPair pair = encode_targets(frames[i], cfg.sim.camera, cfg.sim.z_min, cfg.sim.z_max, cfg.decode);
                io::write_grid_file(dir / numbered("map", frames[i].frame_id, ".lugr"), io::to_grid(pair));
            });
            out << "encoded " << frames.size() << " frames -> " << dir.string() << "\n";
            return kExitOk;
        }

        if (decode_cmd->parsed()) {
            RunConfig cfg = resolve(dec_o);
            apply_decode_flags(cfg, dec_threshold, dec_nms, dec_window, dec_sigma);
            cfg.decode.validate();
            std::vector<fs::path> files(dec_map_files.begin(), dec_map_files.end());
            if (dec_maps) {
                const auto found = grid_files_in(*dec_maps);
                files.insert(files.end(), found.begin(), found.end());
            }
            if (files.empty()) throw ValidationError("decode needs --maps or --map");
            std::vector<DecodeResult> results(files.size());
            parallel_for(files.size(), dec_o.workers, [&](std::size_t i) {
                const auto id = trailing_number(files[i]).value_or(static_cast<std::int64_t>(i));
                results[i] = decode(io::pair_from_grid(io::read_grid_file(files[i])), cfg.decode, id);
            });
            LocalizationSet seeds;
            std::size_t dropped = 0;
            for (const auto& r : results) {
                seeds.insert(seeds.end(), r.seeds.begin(), r.seeds.end());
                dropped += r.n_undefined_depth;
            }
            io::write_seeds_file(dec_out, seeds);
            out << "decoded " << files.size() << " maps, " << seeds.size() << " seeds, " << dropped
                << " dropped (undefined depth) -> " << dec_out << "\n";
            return kExitOk;
        }

        if (evaluate->parsed()) {
            RunConfig cfg = resolve(ev_o);
            if (ev_tol_lat) cfg.match.tol_lateral = *ev_tol_lat;
            if (ev_tol_ax) cfg.match.tol_axial = *ev_tol_ax;
            if (ev_lateral) cfg.match.mode = MatchMode::Lateral;
            const auto gt = io::read_emitter_list_file(ev_gt);
            const auto pred = io::read_emitter_list_file(ev_pred);
            const MetricReport report = make_report(evaluate_frames(gt.frames, pred.seeds, cfg.match), ev_density.value_or(0.0));
            with_output(ev_out, out, [&](std::ostream& os) { io::write_reports(os, std::span(&report, 1)); });
            return kExitOk;
        }

        if (sweep->parsed()) {
            RunConfig cfg = resolve(sw_o);
            if (sw_noise) cfg.map_noise = *sw_noise;
            if (sw_min_sep) cfg.sim.min_separation = *sw_min_sep;
            cfg.validate();
            SweepConfig sc;
            sc.match = cfg.match;
            sc.convergence = cfg.convergence;
            sc.max_frames = sw_max_frames;
            sc.fixed_frames = sw_frames;
            sc.workers = sw_o.workers;
            const auto reports = density_sweep(sw_densities, cfg.sim, oracle_decoder(cfg.decode, cfg.map_noise), sc);
            with_output(sw_out, out, [&](std::ostream& os) { io::write_reports(os, reports); });
            return kExitOk;
        }

        if (filter->parsed()) {
            RunConfig cfg = resolve(fl_o);
            const int modes = (fl_rate ? 1 : 0) + (fl_rates.empty() ? 0 : 1) + (fl_threshold ? 1 : 0);
            if (modes != 1) throw ValidationError("filter needs exactly one of --rate, --rates, --threshold");
            const auto pred = io::read_emitter_list_file(fl_pred);
            std::vector<EmitterSet> gt;
            if (!fl_gt.empty()) gt = io::read_emitter_list_file(fl_gt).frames;
            if ((fl_scores == "oracle" || !fl_rates.empty()) && fl_gt.empty()) {
                throw ValidationError("--gt is required for oracle scores and for --rates");
            }
            cfg.proxy.z_span = cfg.sim.z_max - cfg.sim.z_min;
            const auto scores = fl_scores == "oracle" ? oracle_scores(gt, pred.seeds, cfg.match)
                                                      : scalar_scores(proxy_uncertainty(pred.seeds, cfg.proxy));
            if (!fl_rates.empty()) {
                const auto curve = filter_sweep(gt, pred.seeds, scores, fl_rates, cfg.match);
                with_output(fl_out, out, [&](std::ostream& os) { io::write_filter_curve(os, curve); });
            } else {
                const LocalizationSet kept = fl_rate ? filter_by_rate(pred.seeds, scores, *fl_rate)
                                                     : filter_by_threshold(pred.seeds, scores, *fl_threshold);
                with_output(fl_out, out, [&](std::ostream& os) { io::write_seeds(os, kept); });
            }
            return kExitOk;
        }

        if (render->parsed()) {
            RunConfig cfg = resolve(rd_o);
            if (rd_bin) set_config_value(cfg, "render.bin_size", *rd_bin);
            if (rd_color) set_config_value(cfg, "render.color_mode", *rd_color);
            if (rd_intensity) set_config_value(cfg, "render.intensity_scale", *rd_intensity);
            if (rd_region) set_config_value(cfg, "render.region", *rd_region);
            if (rd_section) set_config_value(cfg, "render.cross_section", *rd_section);
            if (rd_zclip) {
                const auto comma = rd_zclip->find(',');
                if (comma == std::string::npos) throw ValidationError("--z-clip expects zmin,zmax");
                set_config_value(cfg, "render.z_clip_min", rd_zclip->substr(0, comma));
                set_config_value(cfg, "render.z_clip_max", rd_zclip->substr(comma + 1));
            }
            const auto seeds = io::read_emitter_list_file(rd_in).seeds;
            const RenderResult result = cfg.render.cross_section ? render_cross_section(seeds, cfg.render)
                                                                 : render_histogram(seeds, cfg.render);
            if (result.empty) err << "warning: no seeds inside the rendered region\n";
            write_png(rd_out, result.image);
            out << "rendered " << result.image.width << "x" << result.image.height << " -> " << rd_out << "\n";
            return kExitOk;
        }

        if (residuals->parsed()) {
            RunConfig cfg = resolve(rs_o);
            if (rs_tol) cfg.convergence.rel_tolerance = *rs_tol;
            if (rs_patience) cfg.convergence.patience = *rs_patience;
            if (rs_checkpoint) cfg.convergence.checkpoint_seeds = *rs_checkpoint;
            cfg.validate();
            if (rs_gt.has_value() != rs_pred.has_value()) throw ValidationError("--gt and --pred go together");

            std::vector<Checkpoint> checkpoints;
            ResidualTracker tracker(cfg.convergence);
            MetricAccumulator acc;
            std::size_t next = cfg.convergence.checkpoint_seeds;
            auto consume = [&](const Matching& m) {
                acc.add(m);
                if (acc.n_seeds < next) return false;
                const MetricReport r = make_report(acc);
                checkpoints.push_back({acc.n_seeds, r.ji, r.rmse_lateral, r.rmse_3d});
                next = (acc.n_seeds / cfg.convergence.checkpoint_seeds + 1) * cfg.convergence.checkpoint_seeds;
                return tracker.push(checkpoints.back());
            };
            if (rs_gt) {
                const auto gt = io::read_emitter_list_file(*rs_gt);
                const auto pred = io::read_emitter_list_file(*rs_pred);
                std::map<std::int64_t, LocalizationSet> by_frame;
                for (const Seed& s : pred.seeds) by_frame[s.frame_id].push_back(s);
                for (const EmitterSet& set : gt.frames) {
                    if (consume(match_localizations(set, by_frame[set.frame_id], cfg.match))) break;
                }
            } else {
                const DecoderSource source = oracle_decoder(cfg.decode, cfg.map_noise);
                for (std::int64_t f = 0; f < rs_max_frames; ++f) {
                    const EmitterSet set = simulate_ground_truth(cfg.sim, f);
                    if (consume(match_localizations(set, source(set, cfg.sim), cfg.match))) break;
                }
            }
            const ConvergenceResult& res = tracker.result();
            with_output(rs_out, out, [&](std::ostream& os) {
                os << "n_seeds\tji\trmse_lateral\trmse_3d\n";
                for (const Checkpoint& cp : checkpoints) {
                    os << cp.n_seeds << '\t' << io::format_double(cp.ji) << '\t' << io::format_double(cp.rmse_lateral)
                       << '\t' << io::format_double(cp.rmse_3d) << '\n';
                }
            });
            out << "converged\t" << (res.converged ? "yes" : "no") << "\nseeds_needed\t" << res.seeds_needed
                << "\nlast_residuals\t" << io::format_double(res.last_residual_ji) << '\t'
                << io::format_double(res.last_residual_lateral) << '\t' << io::format_double(res.last_residual_3d) << "\n";
            return kExitOk;
        }
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}

}  // namespace luenn
