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

#include <cmath>
#include <fstream>
#include <sstream>

#include "noisecal/calibration.hpp"
#include "noisecal/error.hpp"
#include "noisecal/sensor_sim.hpp"
#include "test_support.hpp"

using namespace noisecal;
using noisecal::testing::Gen;

namespace {

// Gaussian stand-in for a flat-field capture with variance a * level + b.
BayerImage gaussian_flat(Gen& g, std::size_t size, double level, double a, double b, double exposure) {
    BayerImage img(size, size, CfaLayout::RGGB);
    const double sd = std::sqrt(a * level + b);
    for (auto& v : img.data) v = level + g.normal(0, sd);
    img.exposure_s = exposure;
    img.iso = 100;
    return img;
}

std::vector<FlatPair> gaussian_pairs(Gen& g, const std::vector<double>& levels, std::size_t per_level, double a,
                                     double b, std::size_t size = 64) {
    std::vector<FlatPair> pairs;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        for (std::size_t k = 0; k < per_level; ++k) {
            const double e = 0.01 * static_cast<double>(i + 1);
            pairs.push_back({gaussian_flat(g, size, levels[i], a, b, e), gaussian_flat(g, size, levels[i], a, b, e)});
        }
    }
    return pairs;
}

// Closed-form OLS of y on x.
std::pair<double, double> ols(const std::vector<PtcPoint>& pts) {
    long double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<long double>(pts.size());
    for (const auto& p : pts) {
        sx += p.mean;
        sy += p.variance;
        sxx += static_cast<long double>(p.mean) * p.mean;
        sxy += static_cast<long double>(p.mean) * p.variance;
    }
    const long double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const long double icpt = (sy - slope * sx) / n;
    return {static_cast<double>(slope), static_cast<double>(icpt)};
}

std::vector<PtcPoint> line_points(double a, double b, std::size_t n, double lo = 0.05, double hi = 0.9) {
    std::vector<PtcPoint> pts;
    for (std::size_t i = 0; i < n; ++i) {
        const double mu = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        pts.push_back({mu, a * mu + b});
    }
    return pts;
}

}  // namespace

TEST_CASE("pair variance of identical tiles is zero") {
    Gen g(1);
    std::vector<double> t(256);
    for (auto& v : t) v = g.uniform();
    const PtcPoint p = pair_variance(t, t);
    CHECK(p.variance == 0.0);
    CHECK(p.mean == doctest::Approx(noisecal::testing::ref_mean(t)).epsilon(1e-14));
}

TEST_CASE("a constant offset between tiles shifts the mean by half and leaves variance at zero") {
    Gen g(2);
    std::vector<double> b(256), a(256);
    for (std::size_t i = 0; i < b.size(); ++i) {
        b[i] = static_cast<double>(g.index(0, 255)) / 1024.0;
        a[i] = b[i] + 0.125;
    }
    const PtcPoint p = pair_variance(a, b);
    CHECK(p.variance == doctest::Approx(0.0));
    CHECK(p.mean == doctest::Approx(noisecal::testing::ref_mean(b) + 0.0625).epsilon(1e-14));
}

TEST_CASE("pair variance recovers the per-capture variance (Monte-Carlo)") {
    Gen g(3);
    std::vector<double> a(1000000), b(1000000);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = 0.5 + g.normal(0, 0.01);
        b[i] = 0.5 + g.normal(0, 0.01);
    }
    CHECK(noisecal::testing::rel_err(pair_variance(a, b).variance, 1e-4) < 0.02);
}

TEST_CASE("pair variance is symmetric and cancels fixed patterns (property)") {
    Gen g(4);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 64 * g.index(1, 16);
        std::vector<double> a(n), b(n), pattern(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<double>(g.index(0, 4095)) / 8192.0;
            b[i] = static_cast<double>(g.index(0, 4095)) / 8192.0;
            pattern[i] = static_cast<double>(g.index(0, 4095)) / 8192.0;
        }
        const PtcPoint ab = pair_variance(a, b), ba = pair_variance(b, a);
        CHECK(ab.variance == ba.variance);
        CHECK(ab.mean == ba.mean);
        auto ap = a, bp = b;
        for (std::size_t i = 0; i < n; ++i) {
            ap[i] += pattern[i];
            bp[i] += pattern[i];
        }
        // dyadic samples: adding the pattern is exact, so the difference tile is unchanged
        CHECK(pair_variance(ap, bp).variance == ab.variance);
    }
}

TEST_CASE("pair variance rejects mismatched tiles") {
    std::vector<double> a(16), b(15);
    CHECK_THROWS_AS(pair_variance(a, b), InvalidArgument);
}

TEST_CASE("clip thresholds: the floor and ceiling themselves are excluded") {
    const CalibrationConfig cfg;
    CHECK(cfg.dark_mean_floor == 0.02);
    CHECK(cfg.bright_mean_ceiling == 0.98);
    CHECK_FALSE(passes_clip_thresholds(0.01, cfg));
    CHECK_FALSE(passes_clip_thresholds(0.02, cfg));
    CHECK(passes_clip_thresholds(std::nextafter(0.02, 1.0), cfg));
    CHECK(passes_clip_thresholds(0.5, cfg));
    CHECK(passes_clip_thresholds(std::nextafter(0.98, 0.0), cfg));
    CHECK_FALSE(passes_clip_thresholds(0.98, cfg));
    CHECK_FALSE(passes_clip_thresholds(0.99, cfg));
}

TEST_CASE("config validation") {
    CalibrationConfig cfg;
    cfg.dark_mean_floor = 0.5;
    cfg.bright_mean_ceiling = 0.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.bright_mean_ceiling = 1.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.tile_px = 4;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("collect_ptc drops too-dark and too-bright pairs") {
    Gen g(5);
    CalibrationConfig cfg;
    cfg.tile_px = 16;
    const CropRegion full{0, 0, 64, 64};
    std::vector<FlatPair> pairs;
    pairs.push_back({gaussian_flat(g, 64, 0.01, 0, 1e-8, 0.1), gaussian_flat(g, 64, 0.01, 0, 1e-8, 0.1)});
    pairs.push_back({gaussian_flat(g, 64, 0.99, 0, 1e-8, 0.2), gaussian_flat(g, 64, 0.99, 0, 1e-8, 0.2)});
    CHECK_THROWS_WITH_AS(collect_ptc(pairs, cfg, full), doctest::Contains("insufficient unclipped data"), DataError);
    pairs.push_back({gaussian_flat(g, 64, 0.5, 0, 1e-8, 0.3), gaussian_flat(g, 64, 0.5, 0, 1e-8, 0.3)});
    const auto series = collect_ptc(pairs, cfg, full);
    for (const auto& s : series) {
        CHECK(s.points.size() == 4);  // 32x32 channel plane, 16 px tiles
        CHECK(s.exposures == std::vector<double>{0.3});
    }
}

TEST_CASE("collect_ptc applies the thresholds as <= floor and >= ceiling") {
    // Dyadic thresholds make the plane mean of a constant image exact, so the
    // comparison itself is what gets pinned here.
    CalibrationConfig cfg;
    cfg.tile_px = 8;
    cfg.dark_mean_floor = 0.03125;
    cfg.bright_mean_ceiling = 0.96875;
    const CropRegion full{0, 0, 32, 32};
    auto flat = [](double v) {
        BayerImage img(32, 32, CfaLayout::RGGB, v);
        img.exposure_s = 0.1;
        return img;
    };
    std::vector<FlatPair> at_floor{{flat(0.03125), flat(0.03125)}};
    CHECK_THROWS_AS(collect_ptc(at_floor, cfg, full), DataError);
    std::vector<FlatPair> above_floor{{flat(0.03125 + 1.0 / 1024), flat(0.03125 + 1.0 / 1024)}};
    CHECK(collect_ptc(above_floor, cfg, full)[0].points.size() == 4);
    std::vector<FlatPair> at_ceiling{{flat(0.96875), flat(0.96875)}};
    CHECK_THROWS_AS(collect_ptc(at_ceiling, cfg, full), DataError);
    std::vector<FlatPair> below_ceiling{{flat(0.96875 - 1.0 / 1024), flat(0.96875 - 1.0 / 1024)}};
    CHECK(collect_ptc(below_ceiling, cfg, full)[3].points.size() == 4);
    // the pair mean decides: one frame at the floor, its partner above it
    std::vector<FlatPair> straddle{{flat(0.03125), flat(0.03125 + 2.0 / 1024)}};
    CHECK(collect_ptc(straddle, cfg, full)[0].points.size() == 4);
}

TEST_CASE("collect_ptc with default thresholds drops 0.01 and 0.99 pairs, keeps 0.021 and 0.979") {
    CalibrationConfig cfg;
    cfg.tile_px = 8;
    const CropRegion full{0, 0, 32, 32};
    auto flat = [](double v) {
        BayerImage img(32, 32, CfaLayout::RGGB, v);
        img.exposure_s = v;
        return img;
    };
    std::vector<FlatPair> pairs{{flat(0.01), flat(0.01)}, {flat(0.021), flat(0.021)},
                                {flat(0.979), flat(0.979)}, {flat(0.99), flat(0.99)}};
    for (const auto& s : collect_ptc(pairs, cfg, full)) CHECK(s.exposures == std::vector<double>{0.021, 0.979});
}

TEST_CASE("the clip threshold is evaluated per channel") {
    CalibrationConfig cfg;
    cfg.tile_px = 8;
    BayerImage mixed(32, 32, CfaLayout::RGGB, 0.5);
    mixed.exposure_s = 0.1;
    for (std::size_t y = 0; y < 32; y += 2)
        for (std::size_t x = 0; x < 32; x += 2) mixed.at(x, y) = 0.99;
    std::vector<FlatPair> pairs{{mixed, mixed}};
    // red is saturated on every pair, so red has nothing left
    CHECK_THROWS_WITH_AS(collect_ptc(pairs, cfg, {0, 0, 32, 32}), doctest::Contains("channel R"), DataError);
}

TEST_CASE("ten valid pairs with 2x2 tiles give 40 points per channel") {
    Gen g(6);
    CalibrationConfig cfg;
    cfg.tile_px = 16;
    std::vector<FlatPair> pairs;
    for (int i = 0; i < 10; ++i) {
        const double e = 0.1 * (i + 1);
        pairs.push_back({gaussian_flat(g, 64, 0.05 + 0.09 * i, 4e-4, 1e-6, e),
                         gaussian_flat(g, 64, 0.05 + 0.09 * i, 4e-4, 1e-6, e)});
    }
    for (const auto& s : collect_ptc(pairs, cfg, {0, 0, 64, 64})) CHECK(s.points.size() == 40);
}

TEST_CASE("collect_ptc rejects mixed ISO, geometry and exposure") {
    Gen g(7);
    CalibrationConfig cfg;
    cfg.tile_px = 8;
    auto pairs = gaussian_pairs(g, {0.2}, 2, 4e-4, 1e-6, 32);
    auto bad_iso = pairs;
    bad_iso[1].second.iso = 200;
    CHECK_THROWS_AS(collect_ptc(bad_iso, cfg, {0, 0, 32, 32}), DataError);
    auto bad_exposure = pairs;
    bad_exposure[0].second.exposure_s = 9;
    CHECK_THROWS_AS(collect_ptc(bad_exposure, cfg, {0, 0, 32, 32}), DataError);
    auto bad_layout = pairs;
    bad_layout[0].first.layout = CfaLayout::BGGR;
    CHECK_THROWS_AS(collect_ptc(bad_layout, cfg, {0, 0, 32, 32}), DataError);
}

TEST_CASE("robust fit on an exact line") {
    const auto pts = line_points(2, 1, 20);
    const RobustFit f = robust_fit(pts, {});
    CHECK(f.a == doctest::Approx(2).epsilon(1e-12));
    CHECK(f.b == doctest::Approx(1).epsilon(1e-12));
    CHECK(f.r_squared == doctest::Approx(1.0));
    CHECK(f.outlier_count() == 0);
}

TEST_CASE("a 100-sigma outlier is removed and the fit equals OLS on the clean subset") {
    Gen g(8);
    const double sigma = 1e-6;
    std::vector<PtcPoint> pts = line_points(4e-4, 1e-6, 40);
    for (auto& p : pts) p.variance += g.normal(0, sigma);
    const std::vector<PtcPoint> clean = pts;
    pts.push_back({0.5, 4e-4 * 0.5 + 1e-6 + 100 * sigma});
    const RobustFit f = robust_fit(pts, {});
    CHECK(f.outlier_count() == 1);
    CHECK_FALSE(f.inlier.back());
    const auto [a, b] = ols(clean);
    CHECK(std::fabs(f.a - a) <= 1e-9 * std::fabs(a));
    CHECK(std::fabs(f.b - b) <= 1e-9 * std::max(std::fabs(b), 1e-12));
}

TEST_CASE("robust fit is scale-equivariant (property)") {
    Gen g(9);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<PtcPoint> pts = line_points(g.uniform(1e-4, 1e-2), g.uniform(0, 1e-4), 30);
        for (auto& p : pts) p.variance *= 1 + g.normal(0, 0.02);
        const double c = g.uniform(0.1, 10);
        auto scaled = pts;
        for (auto& p : scaled) p.variance *= c;
        const RobustFit f = robust_fit(pts, {}), fs = robust_fit(scaled, {});
        CHECK(fs.a == doctest::Approx(c * f.a).epsilon(1e-9));
        CHECK(fs.b == doctest::Approx(c * f.b).epsilon(1e-6));
        CHECK(fs.inlier == f.inlier);
    }
}

TEST_CASE("fit error shrinks as the number of points grows") {
    auto mean_abs_err = [](std::size_t n) {
        double total = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Gen g(1000 + seed);
            std::vector<PtcPoint> pts = line_points(4e-4, 1e-6, n);
            for (auto& p : pts) p.variance *= 1 + g.normal(0, 0.05);
            total += std::fabs(robust_fit(pts, {}).a - 4e-4);
        }
        return total / 20;
    };
    const double e16 = mean_abs_err(16), e256 = mean_abs_err(256), e4096 = mean_abs_err(4096);
    CHECK(e256 < e16);
    CHECK(e4096 < e256);
}

TEST_CASE("robust fit preconditions") {
    CHECK_THROWS_AS(robust_fit(line_points(1, 1, 7), {}), DataError);
    std::vector<PtcPoint> same(20, PtcPoint{0.3, 0.1});
    CHECK_THROWS_WITH_AS(robust_fit(same, {}), doctest::Contains("rank deficient"), DataError);
    std::vector<PtcPoint> three;
    for (int i = 0; i < 12; ++i) three.push_back({0.1 * (i % 3 + 1), 0.01 * (i % 3 + 1)});
    CHECK_THROWS_AS(robust_fit(three, {}), DataError);
}

TEST_CASE("calibrate_iso on a clean line reaches the reference fit quality") {
    Gen g(10);
    CalibrationConfig cfg;
    cfg.tile_px = 128;
    const auto pairs = gaussian_pairs(g, {0.05, 0.2, 0.35, 0.5, 0.65, 0.8}, 2, 4e-4, 1e-6, 512);
    const auto series = calibrate_iso(pairs, cfg, {0, 0, 512, 512});
    for (const auto& s : series) {
        REQUIRE(s.fit);
        CHECK(s.fit->r_squared >= 0.999);
        CHECK(s.fit->a == doctest::Approx(4e-4).epsilon(0.02));
        CHECK(s.points.size() == 48);
        CHECK(s.exposures.size() == 6);
    }
}

TEST_CASE("a single exposure level is reported as insufficient data") {
    Gen g(11);
    CalibrationConfig cfg;
    cfg.tile_px = 8;
    const auto pairs = gaussian_pairs(g, {0.3}, 4, 4e-4, 1e-6, 64);
    CHECK_THROWS_WITH_AS(calibrate_iso(pairs, cfg, {0, 0, 64, 64}), doctest::Contains("insufficient unclipped data"),
                         DataError);
}

TEST_CASE("simulated sensor at three ISOs yields increasing a") {
    SensorSpec spec = uniform_sensor(4e-4, 1e-6, 100, 128);
    spec.iso_ladder = {100, 200, 400};
    for (auto& t : spec.truth) t = {4e-6, 1.0, 1e-8, 1.0};
    CalibrationConfig cfg;
    cfg.tile_px = 16;
    std::array<double, 3> a{};
    for (int i = 0; i < 3; ++i) {
        const int iso = spec.iso_ladder[i];
        std::vector<FlatPair> pairs;
        int k = 0;
        for (double level : {0.05, 0.1, 0.2, 0.3, 0.4, 0.5}) {
            for (int p = 0; p < 3; ++p) pairs.push_back(gen_flat_pair(spec, iso, level, level, 500 + k++));
        }
        a[i] = calibrate_iso(pairs, cfg, {0, 0, 128, 128})[1].fit->a;
    }
    CHECK(a[0] < a[1]);
    CHECK(a[1] < a[2]);
}

TEST_CASE("PTC diagnostics CSV has one row per point") {
    noisecal::testing::TempDir dir("ptc");
    PtcSeries s;
    s.points = line_points(1, 0, 9);
    s.fit = robust_fit(s.points, {});
    write_ptc_csv(dir / "x.csv", s);
    std::ifstream in(dir / "x.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "mean,variance,inlier");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(line.back() == '1');
    }
    CHECK(rows == 9);
}
