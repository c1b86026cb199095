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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "noisecal/bayer.hpp"
#include "noisecal/noise_model.hpp"
#include "noisecal/rng.hpp"

namespace noisecal {

// A dark capture stored as its signed deviation from black, on the normalized
// scale. Negative values are kept so injection stays additive.
struct DarkFrame {
    std::size_t width = 0;
    std::size_t height = 0;
    CfaLayout layout = CfaLayout::RGGB;
    int iso = 0;
    double exposure_s = 0.0;
    std::vector<double> deviation;
};

struct DarkFrameSet {
    std::string camera_id;
    std::map<int, std::vector<DarkFrame>> frames;  // by ISO

    void validate() const;
    const std::vector<DarkFrame>& at_iso(int iso) const;
};

enum class Method { Pg, PgDark, Awgn, AwgnScaled };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

struct SynthOptions {
    bool clip = true;
    bool shot_noise = true;  // off: the Poisson term is skipped and the clean value passes through
    double poisson_gaussian_threshold = kDefaultPoissonGaussianThreshold;
};

// Identifies the per-pixel random streams of one plane.
struct StreamKey {
    std::uint64_t seed = 0;
    int channel = 0;
};

// lambda ~ P(clean / a); noisy = a * lambda + N(0, b). Returns the noisy
// plane; `clip_events`, when given, receives the number of clamped samples.
Plane synthesize_pg(const Plane& clean, double a, double b, const StreamKey& key, const SynthOptions& opts = {},
                    std::size_t* clip_events = nullptr);

// Applies synthesize_pg to each channel plane with that channel's (a, b).
BayerImage synthesize_pg_image(const BayerImage& clean, const ChannelTable& params, std::uint64_t seed,
                               const SynthOptions& opts = {}, std::size_t* clip_events = nullptr);

struct DarkInjection {
    BayerImage image;
    std::size_t frame_index = 0;
    std::size_t clip_events = 0;
    bool exposure_mismatch = false;
};

// Picks one dark frame uniformly, synthesizes shot noise with b = 0 and adds
// the frame's deviation at identical pixel coordinates.
DarkInjection synthesize_pg_dark(const BayerImage& clean, const ChannelTable& params, const DarkFrameSet& darks,
                                 int iso, std::uint64_t seed, const SynthOptions& opts = {});

std::size_t select_dark_frame(std::uint64_t seed, std::size_t frame_count);

Plane synthesize_awgn(const Plane& clean, double sigma, std::uint64_t seed, const SynthOptions& opts = {},
                      std::size_t* clip_events = nullptr);
double awgn_scaled_sigma(double sigma_base, int iso, int iso_base);

struct SynthesisRequest {
    BayerImage clean;
    int target_iso = 0;
    Method method = Method::Pg;
    std::optional<NoiseModel> model;  // pg and pg_dark
    ParamMode mode = ParamMode::Calibrated;
    const DarkFrameSet* darks = nullptr;  // pg_dark; not owned
    std::uint64_t seed = 0;
    SynthOptions options;
    double awgn_sigma = 0.0;       // awgn; also the base sigma for awgn_scaled
    int awgn_iso_base = 0;         // awgn_scaled
};

struct Provenance {
    Method method = Method::Pg;
    ParamMode mode = ParamMode::Calibrated;
    std::string model_hash;
    std::uint64_t seed = 0;
    int iso = 0;
    std::optional<std::size_t> dark_frame_index;
    bool dark_exposure_mismatch = false;
    std::size_t clip_events = 0;
    std::optional<ChannelTable> params;
    std::optional<double> sigma;
};

nlohmann::json to_json(const Provenance& p);

struct SynthesisResult {
    BayerImage image;
    Provenance provenance;
};

SynthesisResult run_synthesis(const SynthesisRequest& req);

}  // namespace noisecal
