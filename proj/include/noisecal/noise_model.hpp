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
#include <map>
#include <optional>
#include <string>
#include <utility>

#include <json.hpp>

#include "noisecal/bayer.hpp"

namespace noisecal {

inline constexpr int kModelSchemaVersion = 1;

// Poisson-Gaussian parameters of one channel: variance = a * mean + b.
struct ChannelParams {
    double a = 0.0;
    double b = 0.0;

    bool operator==(const ChannelParams&) const = default;
};

using ChannelTable = std::array<ChannelParams, 4>;  // indexed by Channel

// a(iso) = k * iso^m
struct PowerLaw {
    double k = 0.0;
    double m = 0.0;

    double at(double iso) const;
    bool operator==(const PowerLaw&) const = default;
};

struct Tuning {
    std::array<PowerLaw, 4> per_channel;
    int anchor_lo = 0;
    int anchor_hi = 0;

    bool operator==(const Tuning&) const = default;
};

struct NoiseModel {
    std::string camera_id;
    std::map<int, ChannelTable> iso_table;
    std::optional<Tuning> tuning;
    bool uses_dark_frames = false;
    int schema_version = kModelSchemaVersion;

    // Throws DataError naming the first violated field.
    void validate() const;
    bool operator==(const NoiseModel&) const = default;
};

// Manufacturer-style profile: a single (a, b) per ISO shared by all channels.
struct DngProfile {
    std::string camera_id;
    std::map<int, ChannelParams> iso_table;

    void validate() const;
    bool operator==(const DngProfile&) const = default;
};

NoiseModel to_noise_model(const DngProfile& profile);
// Inverse of to_noise_model; throws if channels differ or the model is tuned.
DngProfile to_dng_profile(const NoiseModel& model);

// Two-point power law through (iso_lo, a_lo) and (iso_hi, a_hi).
PowerLaw fit_power_law(const std::map<int, double>& iso_to_a, int anchor_lo, int anchor_hi);

// 2nd and 4th entries of the sorted measured ISO list.
std::pair<int, int> default_anchors(const NoiseModel& model);

// Returns a copy of `model` with per-channel power laws fitted at the anchors.
NoiseModel tune(const NoiseModel& model, std::optional<std::pair<int, int>> anchors = std::nullopt);

double tuned_a(const NoiseModel& model, int iso, Channel ch);

enum class ParamMode { Calibrated, Tuned };

std::string_view to_string(ParamMode mode);
ParamMode parse_param_mode(std::string_view text);

// Measured ISO closest to `iso` on a log scale; ties resolve to the lower one.
int nearest_measured_iso(const NoiseModel& model, int iso);

// Parameters used for synthesis. Tuned mode replaces a with the power law and
// keeps b from the nearest measured ISO.
ChannelParams effective_params(const NoiseModel& model, int iso, Channel ch, ParamMode mode);

nlohmann::json to_json(const NoiseModel& model);
nlohmann::json to_json(const DngProfile& profile);
NoiseModel noise_model_from_json(const nlohmann::json& doc);
DngProfile dng_profile_from_json(const nlohmann::json& doc);
bool is_dng_profile_json(const nlohmann::json& doc);

void save_model(const std::filesystem::path& path, const NoiseModel& model);
void save_dng_profile(const std::filesystem::path& path, const DngProfile& profile);
// Loads either schema; a DNG-style profile is converted to a four-channel model.
NoiseModel load_model(const std::filesystem::path& path);
DngProfile load_dng_profile(const std::filesystem::path& path);

// FNV-1a over the canonical JSON serialization, as 16 hex digits.
std::string model_hash(const NoiseModel& model);

}  // namespace noisecal
