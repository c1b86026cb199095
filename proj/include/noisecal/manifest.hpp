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
#include <string>
#include <vector>

#include <json.hpp>

namespace noisecal {

inline constexpr int kManifestSchemaVersion = 1;

struct ManifestIsoEntry {
    int iso = 0;
    std::string noisy_raw_path;     // relative to the manifest directory
    std::string noisy_render_path;
    std::uint64_t seed = 0;
    std::string method;
};

struct ManifestScene {
    std::string scene_id;
    std::string clean_path;
    std::string clean_render_path;
    std::vector<ManifestIsoEntry> isos;
};

struct ManifestCounts {
    std::size_t scenes = 0;
    std::size_t noisy_images = 0;
};

struct DatasetManifest {
    std::string camera_id;
    std::string model_hash;
    std::vector<ManifestScene> scenes;
    ManifestCounts counts;

    // Recomputes `counts` from the entries.
    void refresh_counts();
};

nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::filesystem::path& path);

// Empty when the manifest is consistent; otherwise one message per problem
// (missing file or sidecar, count mismatch, duplicate entries).
std::vector<std::string> manifest_problems(const DatasetManifest& m, const std::filesystem::path& root);

// Throws DataError listing the first problems found.
void validate_manifest(const std::filesystem::path& path);

}  // namespace noisecal
