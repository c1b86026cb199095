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
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "noisecal/bayer.hpp"
#include "noisecal/synthesis.hpp"

namespace noisecal {

// Binary Bayer container: header-free little-endian uint16 samples, row-major
// from the top-left, plus a JSON sidecar at the same path with extension .json.
inline constexpr int kBayerSchemaVersion = 1;

std::filesystem::path sidecar_path(const std::filesystem::path& raw_path);

struct RawBayer {
    BayerImage meta;  // geometry and capture fields; data left empty
    std::vector<std::uint16_t> dn;
};

RawBayer read_bayer_raw(const std::filesystem::path& path);
BayerImage read_bayer(const std::filesystem::path& path);

// DN = black + v * (white - black), rounded half to even and clamped to uint16.
std::vector<std::uint16_t> denormalize(const BayerImage& img);

void write_bayer(const std::filesystem::path& path, const BayerImage& img,
                 const std::optional<nlohmann::json>& provenance = std::nullopt);

// Dark frames keep their signed deviation from black (no clamp at zero).
DarkFrame read_dark_frame(const std::filesystem::path& path);
void write_dark_frame(const std::filesystem::path& path, const DarkFrame& frame, int black_level, int white_level,
                      const std::string& camera_id);
// Every *.bin below `dir`, grouped by the sidecar ISO, sorted by path.
DarkFrameSet load_dark_frames(const std::filesystem::path& dir);

}  // namespace noisecal
