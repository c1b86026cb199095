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
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "noisecal/bayer.hpp"
#include "noisecal/calibration.hpp"
#include "noisecal/noise_model.hpp"
#include "noisecal/synthesis.hpp"

namespace noisecal {

// Ground-truth noise of one channel: a(iso) = k * iso^m, b(iso) = b_k * iso^b_m.
struct TruthChannel {
    double k = 0.0;
    double m = 1.0;
    double b_k = 0.0;
    double b_m = 0.0;
};

// Fixed spatial pattern present in every capture (pixel and column components),
// scaled by (iso / base_iso)^iso_exponent.
struct DarkSignature {
    double sigma = 0.0;
    double column_sigma = 0.0;
    std::uint64_t seed = 0;
    double iso_exponent = 0.5;
};

struct SensorSpec {
    std::string camera_id = "sim";
    std::size_t width = 512;
    std::size_t height = 512;
    CfaLayout layout = CfaLayout::RGGB;
    int black_level = 512;
    int white_level = 16383;
    std::vector<int> iso_ladder{100};
    std::array<TruthChannel, 4> truth{};
    // Per-ISO multiplier in (0, 1] applied to a in the manufacturer-style profile.
    std::map<int, double> flattening;
    // Per-ISO factor in (0, 1] scaling flat-field noise variance only.
    std::map<int, double> suppression;
    std::optional<DarkSignature> dark_signature;
    bool uses_dark_frames = false;
    double dark_exposure_s = 1.0;

    void validate() const;
    int base_iso() const { return iso_ladder.front(); }
    ChannelParams truth_at(int iso, Channel ch) const;
    ChannelTable truth_table(int iso) const;
    double suppression_at(int iso) const;
    double flattening_at(int iso) const;
};

// Sensor with the same (a, b) on every channel at a single ISO.
SensorSpec uniform_sensor(double a, double b, int iso = 100, std::size_t size = 512);

nlohmann::json to_json(const SensorSpec& spec);
SensorSpec sensor_spec_from_json(const nlohmann::json& doc);
SensorSpec load_sensor_spec(const std::filesystem::path& path);

// Fixed pattern at `iso` (zero plane when the sensor has no signature).
Plane dark_signature(const SensorSpec& spec, int iso);

BayerImage blank_capture(const SensorSpec& spec, int iso, double exposure_s, double fill = 0.0);

FlatPair gen_flat_pair(const SensorSpec& spec, int iso, double exposure_s, double level, std::uint64_t seed);

inline constexpr std::size_t kDefaultDarkFrameCount = 10;

// Deviation-from-black frames, quantized to the sensor's DN grid.
std::vector<DarkFrame> gen_dark_frames(const SensorSpec& spec, int iso, std::size_t count, std::uint64_t seed);
DarkFrameSet gen_dark_frame_set(const SensorSpec& spec, std::size_t count, std::uint64_t seed);

enum class SceneKind { Gradient, Checker, NoiseTexture };
std::string_view to_string(SceneKind kind);
SceneKind parse_scene_kind(std::string_view text);

BayerImage gen_scene(const SensorSpec& spec, SceneKind kind, std::uint64_t seed);

// A real noisy exposure of `clean` at `iso`: truth shot and read noise plus the
// dark signature, no flat-field suppression.
BayerImage capture_scene(const SensorSpec& spec, const BayerImage& clean, int iso, std::uint64_t seed);

// Single-pair-per-ISO profile: channel-averaged truth with a scaled by the
// flattening factor.
DngProfile dng_like_profile(const SensorSpec& spec);

NoiseModel truth_model(const SensorSpec& spec);

}  // namespace noisecal
