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

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <map>

#include <json.hpp>

#include "noisecal/atomic_file.hpp"
#include "noisecal/noise_model.hpp"
#include "noisecal/sensor_sim.hpp"
#include "test_support.hpp"

using namespace noisecal;
using noisecal::testing::TempDir;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
}

Run run(const TempDir& dir, const std::vector<std::string>& args, const std::string& env = {}) {
    std::string cmd = env.empty() ? "" : env + " ";
    cmd += quote(noisecal::testing::cli_path());
    for (const auto& a : args) cmd += " " + quote(a);
    cmd += " >" + quote((dir / "stdout.txt").string()) + " 2>" + quote((dir / "stderr.txt").string());
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(dir / "stdout.txt");
    r.err = read_file(dir / "stderr.txt");
    return r;
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
    return files;
}

fs::path small_spec(const TempDir& dir) {
    SensorSpec s;
    s.camera_id = "tiny";
    s.width = 128;
    s.height = 128;
    s.black_level = 64;
    s.white_level = 4095;
    s.iso_ladder = {100, 200, 400, 800};
    s.truth.fill(TruthChannel{4e-6, 1.0, 1e-8, 1.0});
    s.dark_signature = DarkSignature{0.001, 0.0005, 3, 0.5};
    s.uses_dark_frames = true;
    const fs::path p = dir / "spec.json";
    write_file_atomic(p, to_json(s).dump(2));
    return p;
}

// One simulated capture set shared by the pipeline cases.
struct Workspace {
    TempDir dir{"cli_ws"};
    fs::path sim = dir / "sim";
    Workspace() {
        const Run r = run(dir, {"simulate", "--spec", small_spec(dir).string(), "--out", sim.string(), "--seed", "5",
                                "--pairs-per-level", "2", "--darks", "3"});
        REQUIRE_MESSAGE(r.code == 0, r.err);
    }
};

Workspace& workspace() {
    static Workspace ws;
    return ws;
}

}  // namespace

TEST_CASE("no subcommand is a usage error") {
    TempDir dir("cli_usage");
    const Run r = run(dir, {});
    CHECK(r.code == 1);
    CHECK(r.err.find("Usage") != std::string::npos);
}

TEST_CASE("synthesize without --seed exits 1 and prints its usage") {
    TempDir dir("cli_seed");
    const Run r = run(dir, {"synthesize", "--clean", "x.bin", "--iso", "100", "--out", "o"});
    CHECK(r.code == 1);
    CHECK(r.err.find("--seed") != std::string::npos);
    CHECK(r.err.find("synthesize") != std::string::npos);
}

TEST_CASE("unknown options and bad values are usage errors") {
    TempDir dir("cli_bad");
    CHECK(run(dir, {"calibrate", "--flats", "f", "--out", "m.json", "--bogus"}).code == 1);
    CHECK(run(dir, {"tune", "--model", "m.json", "--out", "t.json", "--anchors", "100"}).code == 1);
    CHECK(run(dir, {"evaluate", "--real-root", "r", "--synth", "noequals", "--out", "e.json"}).code == 1);
}

TEST_CASE("help exits 0") {
    TempDir dir("cli_help");
    const Run r = run(dir, {"synthesize", "--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("--mode") != std::string::npos);
}

TEST_CASE("data errors exit 2, optionally as JSON") {
    TempDir dir("cli_data");
    const Run plain = run(dir, {"validate-manifest", (dir / "missing.json").string()});
    CHECK(plain.code == 2);
    CHECK(plain.err.rfind("error: ", 0) == 0);

    const Run j = run(dir, {"--json-errors", "validate-manifest", (dir / "missing.json").string()});
    CHECK(j.code == 2);
    const json e = json::parse(j.err);
    CHECK(e.at("error").at("code") == 2);
    CHECK(e.at("error").at("kind") == "data");
    CHECK(e.at("error").at("message").get<std::string>().find("missing.json") != std::string::npos);

    const Run u = run(dir, {"--json-errors", "synthesize", "--clean", "x", "--iso", "1", "--out", "o"});
    CHECK(u.code == 1);
    CHECK(json::parse(u.err).at("error").at("kind") == "usage");
}

TEST_CASE("simulate writes flats, darks, scenes and truth") {
    const auto& ws = workspace();
    CHECK(fs::is_regular_file(ws.sim / "truth_model.json"));
    CHECK(fs::is_regular_file(ws.sim / "dng_profile.json"));
    CHECK(fs::is_regular_file(ws.sim / "darks/iso_800/dark_02.bin"));
    CHECK(fs::is_regular_file(ws.sim / "scenes/checker/iso_400/real_2.bin"));
    std::size_t flats = 0;
    for (const auto& e : fs::recursive_directory_iterator(ws.sim / "flat"))
        if (e.path().extension() == ".bin") ++flats;
    CHECK(flats == 4 * 6 * 2 * 2);
}

TEST_CASE("calibrate, tune, synthesize, validate and evaluate end to end") {
    auto& ws = workspace();
    TempDir& dir = ws.dir;
    Run r = run(dir, {"calibrate", "--flats", (ws.sim / "flat").string(), "--out", (dir / "model.json").string(),
                      "--ptc-dir", (dir / "ptc").string(), "--uses-dark-frames"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const NoiseModel cal = load_model(dir / "model.json");
    CHECK(cal.iso_table.size() == 4);
    CHECK(cal.uses_dark_frames);
    CHECK(cal.iso_table.at(400)[0].a == doctest::Approx(1.6e-3).epsilon(0.15));
    CHECK(fs::is_regular_file(dir / "ptc/ptc_tiny_iso400_G2.csv"));

    r = run(dir, {"tune", "--model", (dir / "model.json").string(), "--out", (dir / "tuned.json").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(load_model(dir / "tuned.json").tuning.has_value());

    r = run(dir, {"synthesize", "--clean", (ws.sim / "scenes").string(), "--model", (dir / "tuned.json").string(),
                  "--iso", "400,1600", "--seed", "9", "--out", (dir / "ours").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(fs::is_regular_file(dir / "ours/gradient/iso_1600/noisy.tiff"));
    const json side = json::parse(read_file(dir / "ours/checker/iso_400/noisy.json"));
    CHECK(side.at("iso") == 400);
    CHECK(side.at("provenance").at("method") == "pg");

    r = run(dir, {"validate-manifest", (dir / "ours/manifest.json").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("3 scenes, 6 noisy images") != std::string::npos);

    r = run(dir, {"synthesize", "--clean", (ws.sim / "scenes").string(), "--model", (dir / "model.json").string(),
                  "--darks", (ws.sim / "darks").string(), "--method", "pg_dark", "--iso", "400", "--seed", "9",
                  "--out", (dir / "dark").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);

    r = run(dir, {"evaluate", "--real-root", (ws.sim / "scenes").string(), "--synth",
                  "ours=" + (dir / "ours").string(), "--synth", "dark=" + (dir / "dark").string(), "--iso", "400",
                  "--patch", "64", "--out", (dir / "eval.json").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const json rep = json::parse(read_file(dir / "eval.json"));
    CHECK(rep.at("rows").size() == 2 * 3);
    CHECK(rep.at("patch_count") == 3 * 4);
    CHECK(fs::is_regular_file(dir / "eval.csv"));

    fs::remove(dir / "ours/noise-texture/iso_400/noisy.tiff");
    CHECK(run(dir, {"validate-manifest", (dir / "ours/manifest.json").string()}).code == 2);
}

TEST_CASE("synthesize is byte-identical for a fixed seed, independent of threads") {
    auto& ws = workspace();
    TempDir dir("cli_det");
    const fs::path model = ws.sim / "truth_model.json";
    auto synth = [&](const std::string& seed, const fs::path& out, const std::string& env) {
        const Run r = run(dir,
                          {"synthesize", "--clean", (ws.sim / "scenes").string(), "--model", model.string(), "--iso",
                           "200,800", "--seed", seed, "--out", out.string()},
                          env);
        REQUIRE_MESSAGE(r.code == 0, r.err);
        return tree(out);
    };
    const auto a = synth("42", dir / "a", "NOISECAL_THREADS=1");
    const auto b = synth("42", dir / "b", "NOISECAL_THREADS=4");
    const auto c = synth("43", dir / "c", "");
    CHECK(a.size() == b.size());
    CHECK(a == b);
    CHECK(a.at("checker/iso_800/noisy.bin") != c.at("checker/iso_800/noisy.bin"));
}

TEST_CASE("corrupt input is a data error") {
    auto& ws = workspace();
    TempDir dir("cli_corrupt");
    fs::copy(ws.sim / "scenes/checker/clean.bin", dir / "clean.bin");
    fs::copy(ws.sim / "scenes/checker/clean.json", dir / "clean.json");
    fs::resize_file(dir / "clean.bin", 100);
    const Run r = run(dir, {"synthesize", "--clean", (dir / "clean.bin").string(), "--model",
                            (ws.sim / "truth_model.json").string(), "--iso", "100", "--seed", "1", "--out",
                            (dir / "o").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("100 bytes") != std::string::npos);
}
