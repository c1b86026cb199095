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

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noisecal/bayer.hpp"

namespace noisecal {

// One photon-transfer sample: tile-pair mean signal and noise variance, both
// on the normalized scale.
struct PtcPoint {
    double mean = 0.0;
    double variance = 0.0;
};

struct RobustFit {
    double a = 0.0;          // slope: shot-noise coefficient
    double b = 0.0;          // intercept: read-noise variance
    double r_squared = 0.0;  // on inliers
    std::vector<bool> inlier;
    int huber_iterations = 0;

    std::size_t outlier_count() const;
};

struct PtcSeries {
    std::string camera_id;
    int iso = 0;
    Channel channel = Channel::R;
    std::vector<PtcPoint> points;
    std::vector<double> exposures;  // distinct exposure times that survived the clip thresholds
    std::optional<RobustFit> fit;
};

struct CalibrationConfig {
    double dark_mean_floor = 0.02;
    double bright_mean_ceiling = 0.98;
    std::size_t tile_px = kDefaultTilePx;
    double huber_delta = 1.35;
    double outlier_k = 3.0;
    int max_iterations = 50;
    double tolerance = 1e-10;
    std::size_t min_points = 8;
    std::size_t min_exposure_levels = 4;

    void validate() const;
};

// Two captures of the same static flat field at the same ISO and exposure.
struct FlatPair {
    BayerImage first;
    BayerImage second;
};

// Pairs are discarded for a channel when the pair's mean on that channel is
// at or below the floor, or at or above the ceiling.
bool passes_clip_thresholds(double channel_mean, const CalibrationConfig& cfg);

// mean = (mean(A) + mean(B)) / 2, variance = var(A - B) / 2 with the n - 1
// estimator. Differencing removes any static pattern shared by both tiles.
PtcPoint pair_variance(std::span<const double> tile_a, std::span<const double> tile_b);

// Per-channel PTC points for one ISO. Indexed by Channel.
std::array<PtcSeries, 4> collect_ptc(std::span<const FlatPair> pairs, const CalibrationConfig& cfg,
                                     const CropRegion& crop);

// Huber IRLS, outlier cut at |r| / scale > outlier_k, then OLS on the inliers.
RobustFit robust_fit(std::span<const PtcPoint> points, const CalibrationConfig& cfg);

// collect_ptc followed by robust_fit on every channel. The returned series
// carry their fits; a fit with a <= 0 or b < 0 is rejected with DataError.
std::array<PtcSeries, 4> calibrate_iso(std::span<const FlatPair> pairs, const CalibrationConfig& cfg,
                                       const CropRegion& crop);

// Diagnostics in the form mean,variance,inlier (one row per point).
void write_ptc_csv(const std::filesystem::path& path, const PtcSeries& series);

}  // namespace noisecal
