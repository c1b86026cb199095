// Copyright (c) 2026 The noisecal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "noisecal/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>

#include "noisecal/atomic_file.hpp"
#include "noisecal/bayer_io.hpp"
#include "noisecal/calibration.hpp"
#include "noisecal/error.hpp"
#include "noisecal/manifest.hpp"
#include "noisecal/metrics.hpp"
#include "noisecal/noise_model.hpp"
#include "noisecal/parallel.hpp"
#include "noisecal/render.hpp"
#include "noisecal/rng.hpp"
#include "noisecal/sensor_sim.hpp"
#include "noisecal/synthesis.hpp"

namespace noisecal {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Seed for one generated artifact, keyed by role and integer coordinates.
std::uint64_t sub_seed(std::uint64_t seed, std::string_view role, std::initializer_list<std::uint64_t> coords) {
    std::uint64_t s = derive_seed(seed, fnv1a(role));
    for (auto c : coords) s = derive_seed(s, c);
    return s;
}

std::string iso_dir(int iso) { return "iso_" + std::to_string(iso); }

std::string two_digits(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02zu", i);
    return buf;
}

std::vector<fs::path> bin_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".bin") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

json read_sidecar(const fs::path& raw) {
    const fs::path side = sidecar_path(raw);
    if (!fs::is_regular_file(side)) throw DataError("missing sidecar " + side.string() + " for " + raw.string());
    try {
        return json::parse(read_file(side));
    } catch (const json::exception& e) {
        throw DataError("cannot parse sidecar " + side.string() + ": " + e.what());
    }
}

std::string rel(const fs::path& p, const fs::path& root) { return fs::relative(p, root).generic_string(); }

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    fs::path spec;
    fs::path out;
    std::uint64_t seed = 1;
    std::size_t pairs_per_level = 4;
    std::vector<double> levels{0.025, 0.05, 0.08, 0.12, 0.16, 0.2};
    std::optional<std::size_t> darks;
    std::vector<std::string> scenes{"gradient", "checker", "noise-texture"};
    std::vector<int> isos;
    bool no_flats = false;
};

// Exposure time assigned to a flat-field level. Only its distinctness matters.
double level_exposure(double level) { return level / 10.0; }

void simulate(const SimulateArgs& args) {
    const SensorSpec spec = load_sensor_spec(args.spec);
    std::vector<int> isos = args.isos.empty() ? spec.iso_ladder : args.isos;
    for (int iso : isos) {
        if (std::find(spec.iso_ladder.begin(), spec.iso_ladder.end(), iso) == spec.iso_ladder.end()) {
            throw InvalidArgument("ISO " + std::to_string(iso) + " is not on the sensor's ladder");
        }
    }
    for (double level : args.levels) {
        if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("flat-field levels must lie in (0, 1)");
    }
    std::vector<SceneKind> kinds;
    for (const auto& s : args.scenes) kinds.push_back(parse_scene_kind(s));
    const fs::path out = args.out;

    if (!args.no_flats) {
        struct Job {
            int iso;
            std::size_t level;
            std::size_t pair;
        };
        std::vector<Job> jobs;
        for (int iso : isos)
            for (std::size_t li = 0; li < args.levels.size(); ++li)
                for (std::size_t pi = 0; pi < args.pairs_per_level; ++pi) jobs.push_back({iso, li, pi});
        parallel_for(jobs.size(), [&](std::size_t begin, std::size_t end) {
            for (std::size_t j = begin; j < end; ++j) {
                const Job& job = jobs[j];
                const double level = args.levels[job.level];
                const FlatPair pair = gen_flat_pair(
                    spec, job.iso, level_exposure(level), level,
                    sub_seed(args.seed, "flat", {static_cast<std::uint64_t>(job.iso), job.level, job.pair}));
                const fs::path dir = out / "flat" / iso_dir(job.iso);
                const std::string stem = "e" + two_digits(job.level) + "_p" + two_digits(job.pair);
                write_bayer(dir / (stem + "_1.bin"), pair.first);
                write_bayer(dir / (stem + "_2.bin"), pair.second);
            }
        });
    }

    const std::size_t dark_count = args.darks.value_or(spec.uses_dark_frames ? kDefaultDarkFrameCount : 0);
    if (dark_count > 0) {
        for (int iso : isos) {
            const auto frames =
                gen_dark_frames(spec, iso, dark_count, sub_seed(args.seed, "dark", {static_cast<std::uint64_t>(iso)}));
            for (std::size_t i = 0; i < frames.size(); ++i) {
                write_dark_frame(out / "darks" / iso_dir(iso) / ("dark_" + two_digits(i) + ".bin"), frames[i],
                                 spec.black_level, spec.white_level, spec.camera_id);
            }
        }
    }

    for (std::size_t si = 0; si < kinds.size(); ++si) {
        const std::string name(to_string(kinds[si]));
        const fs::path dir = out / "scenes" / name;
        const BayerImage clean = gen_scene(spec, kinds[si], sub_seed(args.seed, "scene", {si}));
        write_bayer(dir / "clean.bin", clean);
        parallel_for(isos.size(), [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const auto iso = static_cast<std::uint64_t>(isos[i]);
                for (std::uint64_t k = 1; k <= 2; ++k) {
                    const BayerImage real = capture_scene(spec, clean, isos[i], sub_seed(args.seed, "real", {si, iso, k}));
                    write_bayer(dir / iso_dir(isos[i]) / ("real_" + std::to_string(k) + ".bin"), real);
                }
            }
        });
    }

    save_dng_profile(out / "dng_profile.json", dng_like_profile(spec));
    save_model(out / "truth_model.json", truth_model(spec));
    write_file_atomic(out / "sensor_spec.json", to_json(spec).dump(2) + "\n");
    std::cout << "simulated " << spec.camera_id << " at " << isos.size() << " ISOs into " << out.string() << "\n";
}

// --------------------------------------------------------------- calibrate

struct CalibrateArgs {
    fs::path flats;
    fs::path out;
    std::optional<fs::path> ptc_dir;
    std::size_t tile = kDefaultTilePx;
    std::size_t crop = 256;
    double search = 0.5;
    double floor = 0.02;
    double ceiling = 0.98;
    bool uses_dark_frames = false;
    std::string camera_id;
};

void calibrate(const CalibrateArgs& args) {
    CalibrationConfig cfg;
    cfg.tile_px = args.tile;
    cfg.dark_mean_floor = args.floor;
    cfg.bright_mean_ceiling = args.ceiling;
    cfg.validate();
    if (!(args.search > 0.0 && args.search <= 1.0)) throw InvalidArgument("--search must lie in (0, 1]");
    if (args.crop < 2) throw InvalidArgument("--crop must be at least 2");

    // iso -> exposure -> sorted file list
    std::map<int, std::map<double, std::vector<fs::path>>> groups;
    std::string camera_id = args.camera_id;
    const auto files = bin_files(args.flats);
    if (files.empty()) throw DataError("no .bin flat-field captures under " + args.flats.string());
    for (const auto& f : files) {
        const json side = read_sidecar(f);
        try {
            groups[side.at("iso").get<int>()][side.at("exposure_s").get<double>()].push_back(f);
            if (camera_id.empty()) camera_id = side.value("camera_id", std::string{});
        } catch (const json::exception& e) {
            throw DataError("sidecar of " + f.string() + " lacks iso/exposure_s: " + e.what());
        }
    }

    NoiseModel model;
    model.camera_id = camera_id;
    model.uses_dark_frames = args.uses_dark_frames;
    for (const auto& [iso, by_exposure] : groups) {
        std::vector<FlatPair> pairs;
        for (const auto& [exposure, paths] : by_exposure) {
            if (paths.size() % 2) {
                std::cerr << "warning: ISO " << iso << " exposure " << exposure << "s has an odd capture count; "
                          << paths.back().string() << " is unpaired and ignored\n";
            }
            for (std::size_t i = 0; i + 1 < paths.size(); i += 2) {
                pairs.push_back({read_bayer(paths[i]), read_bayer(paths[i + 1])});
            }
        }
        if (pairs.empty()) throw DataError("insufficient unclipped data: ISO " + std::to_string(iso) + " has no pairs");

        // The crop is chosen once per ISO on a mid-exposure capture.
        const BayerImage& probe = pairs[pairs.size() / 2].first;
        // Small captures: shrink the crop to the searched window instead of failing.
        const auto window = [&](std::size_t side) {
            return std::min(args.crop, static_cast<std::size_t>(static_cast<double>(side) * args.search)) &
                   ~std::size_t{1};
        };
        const std::size_t cw = window(probe.width);
        const std::size_t ch = window(probe.height);
        if (cw != args.crop || ch != args.crop) {
            std::cerr << "note: ISO " << iso << " crop reduced to " << cw << "x" << ch << "\n";
        }
        const CropRegion crop = select_crop(probe, cw, ch, args.search);

        const auto series = calibrate_iso(pairs, cfg, crop);
        ChannelTable table{};
        for (Channel c : kChannels) {
            const PtcSeries& s = series[static_cast<std::size_t>(c)];
            table[static_cast<std::size_t>(c)] = {s.fit->a, s.fit->b};
            std::cout << "ISO " << iso << " " << to_string(c) << ": a=" << s.fit->a << " b=" << s.fit->b
                      << " r2=" << s.fit->r_squared << " points=" << s.points.size()
                      << " outliers=" << s.fit->outlier_count() << "\n";
            if (args.ptc_dir) {
                write_ptc_csv(*args.ptc_dir / ("ptc_" + camera_id + "_iso" + std::to_string(iso) + "_" +
                                               std::string(to_string(c)) + ".csv"),
                              s);
            }
        }
        model.iso_table[iso] = table;
    }
    model.validate();
    save_model(args.out, model);
    std::cout << "wrote " << args.out.string() << " (" << model.iso_table.size() << " ISOs)\n";
}

// -------------------------------------------------------------------- tune

struct TuneArgs {
    fs::path model;
    fs::path out;
    std::vector<int> anchors;
};

void tune_cmd(const TuneArgs& args) {
    std::optional<std::pair<int, int>> anchors;
    if (!args.anchors.empty()) {
        if (args.anchors.size() != 2) throw InvalidArgument("--anchors takes exactly two ISO values");
        anchors = std::pair{args.anchors[0], args.anchors[1]};
    }
    const NoiseModel model = load_model(args.model);
    const NoiseModel tuned = tune(model, anchors);
    for (Channel c : kChannels) {
        const PowerLaw& p = tuned.tuning->per_channel[static_cast<std::size_t>(c)];
        std::cout << to_string(c) << ": k=" << p.k << " m=" << p.m << "\n";
    }
    save_model(args.out, tuned);
    std::cout << "wrote " << args.out.string() << " (anchors " << tuned.tuning->anchor_lo << ", "
              << tuned.tuning->anchor_hi << ")\n";
}

// -------------------------------------------------------------- synthesize

struct SynthesizeArgs {
    std::vector<fs::path> clean;
    std::optional<fs::path> model;
    std::optional<fs::path> darks;
    std::vector<int> isos;
    std::uint64_t seed = 0;
    std::string method = "pg";
    std::string mode;
    std::optional<double> sigma;
    std::optional<int> iso_base;
    bool no_clip = false;
    bool pnm = false;
    fs::path out;
};

struct CleanInput {
    std::string scene_id;
    fs::path path;
};

// Directories expand to every clean.bin below them; the scene id is the
// containing directory name for clean.bin files and the file stem otherwise.
std::vector<CleanInput> expand_clean(const std::vector<fs::path>& inputs) {
    std::vector<CleanInput> out;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            for (const auto& p : bin_files(in)) {
                if (p.filename() == "clean.bin") out.push_back({p.parent_path().filename().string(), p});
            }
        } else if (fs::is_regular_file(in)) {
            const std::string id =
                in.filename() == "clean.bin" ? in.parent_path().filename().string() : in.stem().string();
            out.push_back({id, in});
        } else {
            throw DataError("clean input not found: " + in.string());
        }
    }
    if (out.empty()) throw DataError("no clean images found");
    std::set<std::string> seen;
    for (const auto& c : out) {
        if (!seen.insert(c.scene_id).second) throw DataError("two clean inputs share the scene id '" + c.scene_id + "'");
    }
    return out;
}

void synthesize(const SynthesizeArgs& args) {
    const Method method = parse_method(args.method);
    std::optional<NoiseModel> model;
    if (args.model) model = load_model(*args.model);
    if ((method == Method::Pg || method == Method::PgDark) && !model) {
        throw InvalidArgument("--model is required for method " + args.method);
    }
    if ((method == Method::Awgn || method == Method::AwgnScaled) && !args.sigma) {
        throw InvalidArgument("--sigma is required for method " + args.method);
    }
    if (method == Method::AwgnScaled && !args.iso_base) throw InvalidArgument("--iso-base is required for awgn_scaled");
    std::optional<DarkFrameSet> darks;
    if (method == Method::PgDark) {
        if (!args.darks) throw InvalidArgument("--darks is required for method pg_dark");
        darks = load_dark_frames(*args.darks);
    }
    ParamMode mode = ParamMode::Calibrated;
    if (!args.mode.empty()) {
        mode = parse_param_mode(args.mode);
    } else if (model && model->tuning) {
        mode = ParamMode::Tuned;
    }
    const RenderFormat fmt = args.pnm ? RenderFormat::Pnm : RenderFormat::Tiff;
    const std::string rgb_ext = render_extension(fmt, true);
    const auto inputs = expand_clean(args.clean);
    const fs::path out = args.out;

    DatasetManifest manifest;
    manifest.model_hash = model ? model_hash(*model) : std::string{};
    manifest.scenes.resize(inputs.size());
    std::vector<BayerImage> cleans(inputs.size());
    for (std::size_t s = 0; s < inputs.size(); ++s) {
        cleans[s] = read_bayer(inputs[s].path);
        ManifestScene& scene = manifest.scenes[s];
        scene.scene_id = inputs[s].scene_id;
        const fs::path clean_out = out / scene.scene_id / "clean.bin";
        const fs::path clean_render = out / scene.scene_id / ("clean" + rgb_ext);
        write_bayer(clean_out, cleans[s]);
        write_render16(clean_render, demosaic_bilinear(cleans[s]), fmt);
        scene.clean_path = rel(clean_out, out);
        scene.clean_render_path = rel(clean_render, out);
        scene.isos.resize(args.isos.size());
    }
    manifest.camera_id = model ? model->camera_id : cleans.front().camera_id;

    const std::size_t jobs = inputs.size() * args.isos.size();
    parallel_for(jobs, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            const std::size_t s = j / args.isos.size();
            const std::size_t i = j % args.isos.size();
            const int iso = args.isos[i];
            SynthesisRequest req;
            req.clean = cleans[s];
            req.target_iso = iso;
            req.method = method;
            req.model = model;
            req.mode = mode;
            req.darks = darks ? &*darks : nullptr;
            req.seed = sub_seed(args.seed, "synth", {fnv1a(inputs[s].scene_id), static_cast<std::uint64_t>(iso)});
            req.options.clip = !args.no_clip;
            req.awgn_sigma = args.sigma.value_or(0.0);
            req.awgn_iso_base = args.iso_base.value_or(0);
            const SynthesisResult res = run_synthesis(req);

            const fs::path dir = out / inputs[s].scene_id / iso_dir(iso);
            const fs::path raw = dir / "noisy.bin";
            const fs::path render = dir / ("noisy" + rgb_ext);
            write_bayer(raw, res.image, to_json(res.provenance));
            write_render16(render, demosaic_bilinear(res.image), fmt);
            manifest.scenes[s].isos[i] = {iso, rel(raw, out), rel(render, out), req.seed, std::string(to_string(method))};
        }
    });
    manifest.refresh_counts();
    save_manifest(out / "manifest.json", manifest);
    std::cout << "synthesized " << manifest.counts.noisy_images << " images (" << to_string(method) << ", "
              << to_string(mode) << ") into " << out.string() << "\n";
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    fs::path real_root;
    std::vector<std::string> synth;
    std::vector<std::string> metrics{"noise_distance", "psnr", "ssim"};
    std::vector<int> isos;
    std::vector<std::string> scenes;
    std::size_t patch = kDefaultPatchPx;
    fs::path out;
    std::optional<fs::path> csv;
};

std::vector<int> isos_below(const fs::path& scene_dir) {
    std::vector<int> isos;
    for (const auto& e : fs::directory_iterator(scene_dir)) {
        const std::string name = e.path().filename().string();
        if (e.is_directory() && name.rfind("iso_", 0) == 0) {
            try {
                isos.push_back(std::stoi(name.substr(4)));
            } catch (const std::exception&) {
                // not an ISO directory
            }
        }
    }
    std::sort(isos.begin(), isos.end());
    return isos;
}

void evaluate_cmd(const EvaluateArgs& args) {
    std::map<std::string, fs::path> synth_dirs;
    for (const auto& s : args.synth) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
            throw InvalidArgument("--synth expects name=dir, got '" + s + "'");
        }
        if (!synth_dirs.emplace(s.substr(0, eq), s.substr(eq + 1)).second) {
            throw InvalidArgument("--synth name '" + s.substr(0, eq) + "' given twice");
        }
    }
    if (synth_dirs.empty()) throw InvalidArgument("at least one --synth name=dir is required");
    std::vector<Metric> metrics;
    for (const auto& m : args.metrics) metrics.push_back(metric_by_name(m));

    std::vector<std::string> scenes = args.scenes;
    if (scenes.empty()) {
        if (!fs::is_directory(args.real_root)) throw DataError("not a directory: " + args.real_root.string());
        for (const auto& e : fs::directory_iterator(args.real_root)) {
            if (e.is_directory() && fs::is_regular_file(e.path() / "clean.bin")) {
                scenes.push_back(e.path().filename().string());
            }
        }
        std::sort(scenes.begin(), scenes.end());
    }
    if (scenes.empty()) throw DataError("no scenes with clean.bin under " + args.real_root.string());
    const std::vector<int> isos = args.isos.empty() ? isos_below(args.real_root / scenes.front()) : args.isos;
    if (isos.empty()) throw DataError("no iso_N directories under " + (args.real_root / scenes.front()).string());

    EvalReport report;
    for (int iso : isos) {
        std::vector<EvalScene> batch;
        for (const auto& scene : scenes) {
            const fs::path sd = args.real_root / scene;
            EvalScene es;
            es.clean = read_bayer(sd / "clean.bin");
            es.real_pair = {read_bayer(sd / iso_dir(iso) / "real_1.bin"), read_bayer(sd / iso_dir(iso) / "real_2.bin")};
            for (const auto& [name, dir] : synth_dirs) {
                es.synth_by_method.emplace(name, read_bayer(dir / scene / iso_dir(iso) / "noisy.bin"));
            }
            batch.push_back(std::move(es));
        }
        EvalReport r = evaluate(batch, metrics, args.patch);
        for (const auto& row : r.rows) {
            std::cout << "ISO " << row.iso << " " << row.method << " " << row.metric << ": baseline=" << row.baseline
                      << " value=" << row.value << " gap=" << row.gap << "\n";
        }
        merge_into(report, r);
    }
    write_file_atomic(args.out, report.to_json().dump(2) + "\n");
    fs::path csv = args.csv.value_or(fs::path(args.out).replace_extension(".csv"));
    write_file_atomic(csv, report.to_csv());
    std::cout << "wrote " << args.out.string() << " and " << csv.string() << "\n";
}

// --------------------------------------------------------------------- main

void report_error(bool json_errors, int code, const std::string& message) {
    if (json_errors) {
        const json j = {{"error", {{"code", code}, {"kind", code == kExitUsage ? "usage" : "data"}, {"message", message}}}};
        std::cerr << j.dump() << "\n";
    } else {
        std::cerr << "error: " << message << "\n";
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    const bool json_errors = std::find(args.begin(), args.end(), "--json-errors") != args.end();

    CLI::App app{"Poisson-Gaussian noise calibration and synthesis for Bayer raw images", "noisecal"};
    app.require_subcommand(1);
    app.fallthrough();
    bool json_flag = false;
    app.add_flag("--json-errors", json_flag, "Print errors to stderr as JSON");

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Generate flat-field pairs, dark frames and scenes from a sensor spec");
    sim_cmd->add_option("--spec", sim.spec, "Sensor spec JSON")->required();
    sim_cmd->add_option("--out", sim.out, "Output directory")->required();
    sim_cmd->add_option("--seed", sim.seed, "Random seed");
    sim_cmd->add_option("--pairs-per-level", sim.pairs_per_level, "Flat-field pairs per exposure level");
    sim_cmd->add_option("--levels", sim.levels, "Flat-field mean levels")->delimiter(',');
    sim_cmd->add_option("--darks", sim.darks, "Dark frames per ISO");
    sim_cmd->add_option("--scenes", sim.scenes, "Scene kinds (gradient, checker, noise-texture)")->delimiter(',');
    sim_cmd->add_option("--iso", sim.isos, "Subset of the ISO ladder")->delimiter(',');
    sim_cmd->add_flag("--no-flats", sim.no_flats, "Skip flat-field generation");

    CalibrateArgs cal;
    auto* cal_cmd = app.add_subcommand("calibrate", "Fit per-channel (a, b) per ISO from flat-field pairs");
    cal_cmd->add_option("--flats", cal.flats, "Directory of flat-field captures")->required();
    cal_cmd->add_option("--out", cal.out, "Output model JSON")->required();
    cal_cmd->add_option("--ptc-dir", cal.ptc_dir, "Directory for PTC diagnostic CSVs");
    cal_cmd->add_option("--tile", cal.tile, "Tile size on the channel plane");
    cal_cmd->add_option("--crop", cal.crop, "Crop side in mosaic pixels");
    cal_cmd->add_option("--search", cal.search, "Central fraction searched for the crop");
    cal_cmd->add_option("--floor", cal.floor, "Discard pairs with channel mean at or below this");
    cal_cmd->add_option("--ceiling", cal.ceiling, "Discard pairs with channel mean at or above this");
    cal_cmd->add_option("--camera-id", cal.camera_id, "Override the camera id");
    cal_cmd->add_flag("--uses-dark-frames", cal.uses_dark_frames, "Mark the model for dark-frame synthesis");

    TuneArgs tun;
    auto* tune_sub = app.add_subcommand("tune", "Fit a = k * ISO^m per channel through two anchor ISOs");
    tune_sub->add_option("--model", tun.model, "Calibrated model JSON")->required();
    tune_sub->add_option("--out", tun.out, "Output model JSON")->required();
    tune_sub->add_option("--anchors", tun.anchors, "Two anchor ISOs (default: 2nd and 4th measured)")->delimiter(',');

    SynthesizeArgs syn;
    auto* syn_cmd = app.add_subcommand("synthesize", "Add synthetic noise to clean images");
    syn_cmd->add_option("--clean", syn.clean, "Clean .bin files or directories")->required();
    syn_cmd->add_option("--model", syn.model, "Noise model or DNG-style profile JSON");
    syn_cmd->add_option("--darks", syn.darks, "Dark-frame directory (pg_dark)");
    syn_cmd->add_option("--iso", syn.isos, "Target ISOs")->required()->delimiter(',');
    syn_cmd->add_option("--seed", syn.seed, "Random seed")->required();
    syn_cmd->add_option("--method", syn.method, "pg, pg_dark, awgn or awgn_scaled");
    syn_cmd->add_option("--mode", syn.mode, "calibrated or tuned (default: tuned when the model is tuned)");
    syn_cmd->add_option("--sigma", syn.sigma, "AWGN standard deviation");
    syn_cmd->add_option("--iso-base", syn.iso_base, "Reference ISO of --sigma for awgn_scaled");
    syn_cmd->add_flag("--no-clip", syn.no_clip, "Keep values outside [0, 1]");
    syn_cmd->add_flag("--pnm", syn.pnm, "Write PPM renders instead of TIFF");
    syn_cmd->add_option("--out", syn.out, "Output dataset directory")->required();

    EvaluateArgs ev;
    auto* ev_cmd = app.add_subcommand("evaluate", "Compare synthetic noise with real pairs");
    ev_cmd->add_option("--real-root", ev.real_root, "Directory of <scene>/clean.bin and iso_N/real_{1,2}.bin")
        ->required();
    ev_cmd->add_option("--synth", ev.synth, "name=dir of a synthesized dataset (repeatable)")->required();
    ev_cmd->add_option("--metric", ev.metrics, "Metrics (noise_distance, psnr, ssim)")->delimiter(',');
    ev_cmd->add_option("--iso", ev.isos, "ISOs to evaluate (default: all found)")->delimiter(',');
    ev_cmd->add_option("--scenes", ev.scenes, "Scene ids (default: all found)")->delimiter(',');
    ev_cmd->add_option("--patch", ev.patch, "Patch size");
    ev_cmd->add_option("--out", ev.out, "Report JSON")->required();
    ev_cmd->add_option("--csv", ev.csv, "Report CSV (default: next to the JSON)");

    fs::path manifest_path;
    auto* vm_cmd = app.add_subcommand("validate-manifest", "Check that a dataset manifest is complete");
    vm_cmd->add_option("manifest", manifest_path, "manifest.json")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        CLI::App* target = &app;
        for (auto* sub : app.get_subcommands({})) {
            if (sub->count() > 0) target = sub;
        }
        std::cout << target->help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        CLI::App* target = &app;
        for (auto* sub : app.get_subcommands({})) {
            if (sub->count() > 0) target = sub;
        }
        report_error(json_errors, kExitUsage, e.what());
        if (!json_errors) std::cerr << target->help();
        return kExitUsage;
    }

    try {
        if (sim_cmd->parsed()) simulate(sim);
        if (cal_cmd->parsed()) calibrate(cal);
        if (tune_sub->parsed()) tune_cmd(tun);
        if (syn_cmd->parsed()) synthesize(syn);
        if (ev_cmd->parsed()) evaluate_cmd(ev);
        if (vm_cmd->parsed()) {
            validate_manifest(manifest_path);
            const auto m = load_manifest(manifest_path);
            std::cout << "manifest ok: " << m.counts.scenes << " scenes, " << m.counts.noisy_images
                      << " noisy images\n";
        }
    } catch (const std::invalid_argument& e) {
        report_error(json_errors, kExitUsage, e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        report_error(json_errors, kExitData, e.what());
        return kExitData;
    }
    return kExitOk;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

}  // namespace noisecal
