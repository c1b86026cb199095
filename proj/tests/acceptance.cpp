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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Criteria 1, 3, 6, 9 and 10 drive the command-line tool end to end.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "golden_tiff.hpp"
#include "noisecal/atomic_file.hpp"
#include "noisecal/bayer_io.hpp"
#include "noisecal/calibration.hpp"
#include "noisecal/metrics.hpp"
#include "noisecal/noise_model.hpp"
#include "noisecal/render.hpp"
#include "noisecal/sensor_sim.hpp"
#include "noisecal/synthesis.hpp"
#include "test_support.hpp"

using namespace noisecal;
using noisecal::testing::Gen;
using noisecal::testing::TempDir;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 4) {
    std::ostringstream o;
    o.precision(digits);
    o << v;
    return o.str();
}

std::string pct(double v) { return fmt(100.0 * v, 3) + "%"; }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
}

// Runs the tool, appending its output to `log`. Returns the exit code.
int cli(const fs::path& log, const std::vector<std::string>& args, const std::string& env = {}) {
    std::string cmd = env.empty() ? "" : env + " ";
    cmd += quote(noisecal::testing::cli_path());
    for (const auto& a : args) cmd += " " + quote(a);
    cmd += " >>" + quote(log.string()) + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string log_tail(const fs::path& log) {
    std::string text = fs::exists(log) ? read_file(log) : "";
    if (text.size() > 400) text = "..." + text.substr(text.size() - 400);
    for (auto& c : text)
        if (c == '\n') c = ' ';
    return text;
}

fs::path fixture(const std::string& name) { return fs::path(noisecal::testing::source_dir()) / "fixtures" / name; }

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::map<std::string, std::uint64_t> tree_hashes(const fs::path& root) {
    std::map<std::string, std::uint64_t> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file() || e.path().extension() == ".log") continue;
        out[fs::relative(e.path(), root).generic_string()] = fnv1a64(read_file(e.path()));
    }
    return out;
}

// simulate -> calibrate -> tune -> synthesize (ours, dng) -> evaluate -> validate-manifest
struct Pipeline {
    fs::path root;
    bool ok = false;
    std::string failure;
    double seconds = 0.0;
};

Pipeline run_phone_pipeline(const fs::path& root, const std::string& env) {
    Pipeline p;
    p.root = root;
    fs::create_directories(root);
    const fs::path log = root / "pipeline.log";
    const SensorSpec spec = load_sensor_spec(fixture("paperlike-phone.json"));
    std::string isos;
    for (int iso : spec.iso_ladder) isos += (isos.empty() ? "" : ",") + std::to_string(iso);
    const std::string r = root.string();
    const std::vector<std::pair<std::string, std::vector<std::string>>> steps{
        {"simulate", {"simulate", "--spec", fixture("paperlike-phone.json").string(), "--out", r + "/sim", "--seed", "2026"}},
        {"calibrate",
         {"calibrate", "--flats", r + "/sim/flat", "--out", r + "/model.json", "--ptc-dir", r + "/ptc",
          "--uses-dark-frames"}},
        {"tune", {"tune", "--model", r + "/model.json", "--out", r + "/tuned.json"}},
        {"synthesize ours",
         {"synthesize", "--clean", r + "/sim/scenes", "--model", r + "/tuned.json", "--iso", isos, "--seed", "7",
          "--out", r + "/ours"}},
        {"synthesize dng",
         {"synthesize", "--clean", r + "/sim/scenes", "--model", r + "/sim/dng_profile.json", "--iso", isos, "--seed",
          "7", "--out", r + "/dng"}},
        {"evaluate",
         {"evaluate", "--real-root", r + "/sim/scenes", "--synth", "ours=" + r + "/ours", "--synth",
          "dng=" + r + "/dng", "--out", r + "/eval.json"}},
        {"validate ours", {"validate-manifest", r + "/ours/manifest.json"}},
        {"validate dng", {"validate-manifest", r + "/dng/manifest.json"}},
    };
    const auto t0 = Clock::now();
    for (const auto& [name, args] : steps) {
        const int code = cli(log, args, env);
        if (code != 0) {
            p.failure = name + " exited " + std::to_string(code) + ": " + log_tail(log);
            p.seconds = seconds_since(t0);
            return p;
        }
    }
    p.seconds = seconds_since(t0);
    p.ok = true;
    fs::rename(log, root / "pipeline.txt.log");
    return p;
}

// ------------------------------------------------------------------ criteria

Outcome oracle_recovery(const fs::path& work) {
    const double a = 4e-4, b = 1e-6;
    const fs::path dir = work / "recovery";
    fs::create_directories(dir);
    const fs::path log = dir / "run.log";
    write_file_atomic(dir / "spec.json", to_json(uniform_sensor(a, b, 100, 512)).dump(2));
    if (cli(log, {"simulate", "--spec", (dir / "spec.json").string(), "--out", (dir / "sim").string(), "--seed", "11",
                  "--pairs-per-level", "16", "--darks", "0", "--scenes", "gradient"}) != 0)
        return {false, "simulate failed: " + log_tail(log)};
    const auto t0 = Clock::now();
    if (cli(log,
            {"calibrate", "--flats", (dir / "sim/flat").string(), "--out", (dir / "model.json").string(), "--search",
             "1.0", "--crop", "512"},
            "NOISECAL_THREADS=1") != 0)
        return {false, "calibrate failed: " + log_tail(log)};
    const double secs = seconds_since(t0);
    const NoiseModel m = load_model(dir / "model.json");
    double worst_a = 0, worst_b = 0;
    for (const auto& p : m.iso_table.at(100)) {
        worst_a = std::max(worst_a, std::fabs(p.a - a) / a);
        worst_b = std::max(worst_b, std::fabs(p.b - b) / b);
    }
    const bool pass = worst_a <= 0.02 && worst_b <= 0.15 && secs < 30.0;
    return {pass, "max |a err| " + pct(worst_a) + " (tol 2%), max |b err| " + pct(worst_b) +
                      " (tol 15%), calibrate " + fmt(secs, 3) + " s single-threaded (limit 30 s)"};
}

Outcome anchored_power_law(const Pipeline& run) {
    if (!run.ok) return {false, "pipeline failed: " + run.failure};
    const NoiseModel cal = load_model(run.root / "model.json");
    const NoiseModel tuned = load_model(run.root / "tuned.json");
    if (!tuned.tuning) return {false, "tuned model carries no power law"};
    double worst_anchor = 0;
    for (int iso : {tuned.tuning->anchor_lo, tuned.tuning->anchor_hi})
        for (Channel c : kChannels) {
            const double want = cal.iso_table.at(iso)[static_cast<int>(c)].a;
            worst_anchor = std::max(worst_anchor, std::fabs(tuned_a(tuned, iso, c) - want) / want);
        }

    const SensorSpec spec = load_sensor_spec(fixture("paperlike-phone.json"));
    const NoiseModel truth_tuned = tune(truth_model(spec));
    double worst_m = 0;
    for (const auto& law : truth_tuned.tuning->per_channel) worst_m = std::max(worst_m, std::fabs(law.m - 1.0));
    const int lo = truth_tuned.tuning->anchor_lo, hi = truth_tuned.tuning->anchor_hi;
    const bool unsuppressed = spec.suppression_at(lo) == 1.0 && spec.suppression_at(hi) == 1.0;

    double cal_m_spread = 0;
    for (const auto& law : tuned.tuning->per_channel) cal_m_spread = std::max(cal_m_spread, std::fabs(law.m - 1.0));
    const bool pass = worst_anchor <= 1e-12 && worst_m <= 1e-6 && unsuppressed;
    return {pass, "anchor rel err " + fmt(worst_anchor, 3) + " (tol 1e-12); truth-table m err " + fmt(worst_m, 3) +
                      " at ISO " + std::to_string(lo) + "/" + std::to_string(hi) +
                      " (tol 1e-6); calibrated-data m err " + fmt(cal_m_spread, 3) + " (informational)"};
}

Outcome suppression(const Pipeline& run) {
    if (!run.ok) return {false, "pipeline failed: " + run.failure};
    const SensorSpec spec = load_sensor_spec(fixture("paperlike-phone.json"));
    const NoiseModel cal = load_model(run.root / "model.json");
    const NoiseModel tuned = load_model(run.root / "tuned.json");
    double min_under = 1.0, worst_tuned_top = 0, max_cal = 0, max_tuned = 0;
    for (int iso : spec.iso_ladder) {
        const bool top = spec.suppression_at(iso) < 1.0;
        for (Channel c : kChannels) {
            const double truth = spec.truth_at(iso, c).a;
            const double ca = cal.iso_table.at(iso)[static_cast<int>(c)].a;
            const double ta = tuned_a(tuned, iso, c);
            max_cal = std::max(max_cal, std::fabs(ca - truth) / truth);
            max_tuned = std::max(max_tuned, std::fabs(ta - truth) / truth);
            if (top) {
                min_under = std::min(min_under, (truth - ca) / truth);
                worst_tuned_top = std::max(worst_tuned_top, std::fabs(ta - truth) / truth);
            }
        }
    }
    const bool pass = min_under >= 0.5 && worst_tuned_top <= 0.05 && max_tuned < max_cal;
    return {pass, "calibrated under-estimate at suppressed ISOs >= " + pct(min_under) + " (need >= 50%), tuned err " +
                      pct(worst_tuned_top) + " (tol 5%), max err calibrated " + pct(max_cal) + " vs tuned " +
                      pct(max_tuned)};
}

Outcome variance_law() {
    std::size_t failures = 0;
    double worst_var = 0, worst_se = 0;
    std::uint64_t seed = 400;
    for (double a : {1e-4, 4e-4, 1.6e-3}) {
        for (double b : {0.0, 1e-6, 1e-5}) {
            const Plane out = synthesize_pg(Plane(1000, 1000, 0.5), a, b, {seed++, 0});
            // mean of the 100 tile variances (100x100 tiles)
            long double tile_sum = 0;
            for (std::size_t ty = 0; ty < 10; ++ty)
                for (std::size_t tx = 0; tx < 10; ++tx) {
                    std::vector<double> t;
                    for (std::size_t y = 0; y < 100; ++y)
                        for (std::size_t x = 0; x < 100; ++x) t.push_back(out.at(tx * 100 + x, ty * 100 + y));
                    tile_sum += noisecal::testing::ref_var(t);
                }
            const double var = static_cast<double>(tile_sum / 100);
            const double want = a * 0.5 + b;
            const double se = std::sqrt(want / 1e6);
            const double ve = std::fabs(var - want) / want;
            const double me = std::fabs(noisecal::testing::ref_mean(out.data) - 0.5) / se;
            worst_var = std::max(worst_var, ve);
            worst_se = std::max(worst_se, me);
            if (ve > 0.05 || me > 3.0) ++failures;
        }
    }
    return {failures == 0, "9 (a,b) cells: max variance err " + pct(worst_var) + " (tol 5%), max mean offset " +
                               fmt(worst_se, 3) + " SE (tol 3)"};
}

Outcome dark_alignment() {
    const SensorSpec spec = load_sensor_spec(fixture("paperlike-phone.json"));
    DarkFrameSet darks;
    darks.camera_id = spec.camera_id;
    darks.frames[1600] = gen_dark_frames(spec, 1600, 10, 99);
    BayerImage clean = blank_capture(spec, 1600, spec.dark_exposure_s, 0.0);
    SynthOptions opts;
    opts.shot_noise = false;
    opts.clip = false;
    const ChannelTable t = spec.truth_table(1600);
    std::size_t mismatched = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const DarkInjection inj = synthesize_pg_dark(clean, t, darks, 1600, seed, opts);
        if (inj.image.data != darks.frames[1600][inj.frame_index].deviation) ++mismatched;
    }
    std::vector<int> counts(10, 0);
    for (std::uint64_t seed = 0; seed < 10000; ++seed) ++counts[select_dark_frame(seed, 10)];
    double worst = 0;
    for (int c : counts) worst = std::max(worst, std::fabs(c / 10000.0 - 0.1));
    return {mismatched == 0 && worst <= 0.015, std::to_string(mismatched) +
                                                   "/10 outputs differ from the selected frame; max selection "
                                                   "frequency deviation " +
                                                   pct(worst) + " over 10^4 seeds (tol 1.5%)"};
}

Outcome directional(const Pipeline& run) {
    if (!run.ok) return {false, "pipeline failed: " + run.failure};
    const SensorSpec spec = load_sensor_spec(fixture("paperlike-phone.json"));
    const json rep = json::parse(read_file(run.root / "eval.json"));
    std::map<std::tuple<int, std::string, std::string>, double> gap;
    for (const auto& row : rep.at("rows")) {
        if (!row.at("gap").is_number()) continue;
        gap[{row.at("iso").get<int>(), row.at("method").get<std::string>(), row.at("metric").get<std::string>()}] =
            row.at("gap").get<double>();
    }
    std::size_t checked = 0, wins = 0;
    std::string losses;
    for (int iso : spec.iso_ladder) {
        if (iso <= spec.base_iso()) continue;
        for (const std::string metric : {"noise_distance", "psnr"}) {
            ++checked;
            const auto ours = gap.find({iso, "ours", metric}), dng = gap.find({iso, "dng", metric});
            if (ours != gap.end() && dng != gap.end() && ours->second < dng->second) {
                ++wins;
            } else {
                losses += " " + metric + "@" + std::to_string(iso);
            }
        }
    }
    return {checked > 0 && wins == checked, "ours < dng on " + std::to_string(wins) + "/" + std::to_string(checked) +
                                                " (ISO, metric) cells above base ISO" +
                                                (losses.empty() ? "" : "; losses:" + losses)};
}

Outcome thresholds() {
    const CalibrationConfig cfg;
    const bool boundaries = !passes_clip_thresholds(0.02, cfg) && !passes_clip_thresholds(0.98, cfg) &&
                            passes_clip_thresholds(std::nextafter(0.02, 1.0), cfg) &&
                            passes_clip_thresholds(std::nextafter(0.98, 0.0), cfg) && cfg.dark_mean_floor == 0.02 &&
                            cfg.bright_mean_ceiling == 0.98;
    CalibrationConfig small = cfg;
    small.tile_px = 8;
    auto flat = [](double v) {
        BayerImage img(32, 32, CfaLayout::RGGB, v);
        img.exposure_s = v;
        return img;
    };
    std::vector<FlatPair> pairs{{flat(0.01), flat(0.01)}, {flat(0.021), flat(0.021)},
                                {flat(0.979), flat(0.979)}, {flat(0.99), flat(0.99)}};
    bool kept_inner = true;
    for (const auto& s : collect_ptc(pairs, small, {0, 0, 32, 32}))
        kept_inner = kept_inner && s.exposures == std::vector<double>{0.021, 0.979};
    return {boundaries && kept_inner, std::string("0.02 and 0.98 excluded, next doubles inward kept: ") +
                                          (boundaries ? "yes" : "no") + "; pairs at 0.01/0.021/0.979/0.99 keep " +
                                          (kept_inner ? "0.021 and 0.979 only" : "the wrong set")};
}

Outcome metric_sanity() {
    Gen g(8);
    bool self_one = true;
    for (int i = 0; i < 5; ++i) {
        const Plane x = g.plane(64, 48);
        self_one = self_one && ssim(x, x) == 1.0;
    }
    Plane p0(32, 32, 0.3), p1(32, 32);  // MSE 0.01 up to the rounding of 0.3 + 0.1
    for (auto& v : p1.data) v = 0.3 + 0.1;
    const double mse = (p1.data[0] - 0.3) * (p1.data[0] - 0.3);
    const double want = 10 * std::log10(1.0 / mse);
    const double psnr_err = std::fabs(psnr(p0, p1) - 20.0);
    const bool psnr_ok = psnr_err <= 1e-9 && std::fabs(psnr(p0, p1) - want) <= 1e-12;

    const SensorSpec spec = load_sensor_spec(fixture("paperlike-phone.json"));
    const BayerImage clean = gen_scene(spec, SceneKind::Gradient, 1);
    const int iso = spec.iso_ladder.back();
    const BayerImage r1 = capture_scene(spec, clean, iso, 21), r2 = capture_scene(spec, clean, iso, 22);
    const double s = ssim(r1.as_plane(), r2.as_plane());
    const double nd = noise_distance(r1.as_plane(), r2.as_plane(), clean.as_plane(), clean.layout);
    // scale: the mean truth noise variance over the scene
    double scale = 0;
    for (std::size_t i = 0; i < clean.data.size(); ++i) {
        const auto c = spec.truth_at(iso, channel_at(clean.layout, i % clean.width, i / clean.width));
        scale += (c.a * clean.data[i] + c.b) / clean.data.size();
    }
    const double rel_nd = nd / scale;
    const bool pass = self_one && psnr_ok && s < 0.2 && rel_nd < 0.05;
    return {pass, std::string("ssim(x,x)==1: ") + (self_one ? "yes" : "no") + "; PSNR@MSE 0.01 off by " +
                      fmt(psnr_err, 3) + " dB (tol 1e-9); real-pair SSIM at ISO " + std::to_string(iso) + " " +
                      fmt(s, 3) + " (need < 0.2), noise-distance " + pct(rel_nd) +
                      " of the noise variance (need < 5%)"};
}

Outcome io_determinism(const Pipeline& a, const Pipeline& b, const fs::path& work) {
    Gen g(9);
    const fs::path dir = work / "roundtrip";
    std::size_t bad = 0;
    for (int i = 0; i < 100; ++i) {
        BayerImage img(g.even(2, 64), g.even(2, 64), kLayouts[i % 4]);
        img.black_level = i % 2 ? 528 : 512;
        img.white_level = i % 2 ? 4095 : 16383;
        img.iso = 100 * (1 + i % 7);
        const int range = img.white_level - img.black_level;
        for (auto& v : img.data) v = static_cast<double>(g.index(0, range)) / range;
        const fs::path p = dir / ("img" + std::to_string(i) + ".bin");
        write_bayer(p, img);
        const RawBayer raw = read_bayer_raw(p);
        const BayerImage back = read_bayer(p);
        if (back.data != img.data || back.layout != img.layout || raw.dn != denormalize(img)) ++bad;
    }

    bool same_tree = false;
    std::size_t files = 0;
    std::string tree_note;
    if (a.ok && b.ok) {
        const auto ha = tree_hashes(a.root), hb = tree_hashes(b.root);
        files = ha.size();
        same_tree = ha == hb;
        if (!same_tree) {
            for (const auto& [k, v] : ha) {
                const auto it = hb.find(k);
                if (it == hb.end() || it->second != v) {
                    tree_note = " first difference: " + k;
                    break;
                }
            }
        }
    } else {
        tree_note = " pipeline failed: " + (a.ok ? b.failure : a.failure);
    }

    const auto golden = read_file(fs::path(noisecal::testing::source_dir()) / "tests/golden/rgb2x2.tiff");
    const auto encoded = encode_tiff16(demosaic_bilinear(noisecal::testing::golden_mosaic()));
    const auto handmade = noisecal::testing::golden_tiff_bytes();
    const bool golden_ok = std::string(encoded.begin(), encoded.end()) == golden &&
                           std::string(handmade.begin(), handmade.end()) == golden;

    return {bad == 0 && same_tree && golden_ok,
            std::to_string(100 - bad) + "/100 round trips exact; rerun trees " +
                (same_tree ? "identical (" + std::to_string(files) + " files, FNV-1a)" : "differ") + tree_note +
                "; golden TIFF " + (golden_ok ? "byte-exact" : "mismatch")};
}

Outcome smoke(const Pipeline& run) {
    if (!run.ok) return {false, "pipeline failed after " + fmt(run.seconds, 3) + " s: " + run.failure};
    return {run.seconds < 180.0,
            "simulate -> calibrate -> tune -> synthesize x2 -> evaluate -> validate-manifest in " +
                fmt(run.seconds, 3) + " s (limit 180 s), manifests valid"};
}

}  // namespace

int main() {
    const fs::path work = fs::temp_directory_path() / ("noisecal_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(work);
    fs::create_directories(work);

    std::map<int, std::pair<std::string, Outcome>> results;
    auto record = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        results[id] = {name, o};
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << " (" << name << "): " << o.detail
                  << std::endl;
    };

    // The main pipeline runs with the default worker count, the rerun single-threaded.
    const Pipeline main_run = run_phone_pipeline(work / "run_a", "");
    const Pipeline rerun = run_phone_pipeline(work / "run_b", "NOISECAL_THREADS=1");

    record(1, "oracle parameter recovery", [&] { return oracle_recovery(work); });
    record(2, "anchored power law", [&] { return anchored_power_law(main_run); });
    record(3, "suppression and tuning", [&] { return suppression(main_run); });
    record(4, "synthesis variance law", [] { return variance_law(); });
    record(5, "dark-frame alignment", [] { return dark_alignment(); });
    record(6, "directional gap ordering", [&] { return directional(main_run); });
    record(7, "clip thresholds", [] { return thresholds(); });
    record(8, "metric sanity", [] { return metric_sanity(); });
    record(9, "I/O and determinism", [&] { return io_determinism(main_run, rerun, work); });
    record(10, "end-to-end smoke", [&] { return smoke(main_run); });

    std::size_t passed = 0;
    for (const auto& [id, r] : results) passed += r.second.pass;
    std::cout << passed << "/" << results.size() << " criteria passed" << std::endl;
    if (passed == results.size()) fs::remove_all(work);
    else std::cout << "artifacts kept in " << work.string() << std::endl;
    return passed == results.size() ? 0 : 1;
}
