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

#include "noisecal/manifest.hpp"

#include <set>

#include "noisecal/atomic_file.hpp"
#include "noisecal/bayer_io.hpp"
#include "noisecal/error.hpp"

namespace noisecal {

namespace fs = std::filesystem;
using nlohmann::json;

void DatasetManifest::refresh_counts() {
    counts.scenes = scenes.size();
    counts.noisy_images = 0;
    for (const auto& s : scenes) counts.noisy_images += s.isos.size();
}

json to_json(const DatasetManifest& m) {
    json scenes = json::array();
    for (const auto& s : m.scenes) {
        json isos = json::array();
        for (const auto& e : s.isos) {
            isos.push_back({{"iso", e.iso},
                            {"noisy_raw_path", e.noisy_raw_path},
                            {"noisy_render_path", e.noisy_render_path},
                            {"seed", e.seed},
                            {"method", e.method}});
        }
        scenes.push_back({{"scene_id", s.scene_id},
                          {"clean_path", s.clean_path},
                          {"clean_render_path", s.clean_render_path},
                          {"isos", isos}});
    }
    return {{"schema_version", kManifestSchemaVersion},
            {"camera_id", m.camera_id},
            {"model_hash", m.model_hash},
            {"scenes", scenes},
            {"counts", {{"scenes", m.counts.scenes}, {"noisy_images", m.counts.noisy_images}}}};
}

DatasetManifest manifest_from_json(const json& j) {
    try {
        if (j.at("schema_version").get<int>() != kManifestSchemaVersion) {
            throw DataError("unsupported manifest schema_version " + j.at("schema_version").dump());
        }
        DatasetManifest m;
        m.camera_id = j.at("camera_id").get<std::string>();
        m.model_hash = j.value("model_hash", std::string{});
        for (const auto& s : j.at("scenes")) {
            ManifestScene scene;
            scene.scene_id = s.at("scene_id").get<std::string>();
            scene.clean_path = s.at("clean_path").get<std::string>();
            scene.clean_render_path = s.at("clean_render_path").get<std::string>();
            for (const auto& e : s.at("isos")) {
                ManifestIsoEntry entry;
                entry.iso = e.at("iso").get<int>();
                entry.noisy_raw_path = e.at("noisy_raw_path").get<std::string>();
                entry.noisy_render_path = e.at("noisy_render_path").get<std::string>();
                entry.seed = e.at("seed").get<std::uint64_t>();
                entry.method = e.at("method").get<std::string>();
                scene.isos.push_back(std::move(entry));
            }
            m.scenes.push_back(std::move(scene));
        }
        m.counts.scenes = j.at("counts").at("scenes").get<std::size_t>();
        m.counts.noisy_images = j.at("counts").at("noisy_images").get<std::size_t>();
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed manifest: ") + e.what());
    }
}

void save_manifest(const fs::path& path, const DatasetManifest& m) {
    write_file_atomic(path, to_json(m).dump(2) + "\n");
}

DatasetManifest load_manifest(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw DataError("cannot parse manifest " + path.string() + ": " + e.what());
    }
    return manifest_from_json(j);
}

std::vector<std::string> manifest_problems(const DatasetManifest& m, const fs::path& root) {
    std::vector<std::string> problems;
    auto need = [&](const std::string& rel, bool raw) {
        if (rel.empty()) {
            problems.push_back("empty path in manifest");
            return;
        }
        const fs::path p = root / rel;
        if (!fs::is_regular_file(p)) problems.push_back("missing file: " + rel);
        if (raw && !fs::is_regular_file(sidecar_path(p))) {
            problems.push_back("missing sidecar for " + rel);
        }
    };
    std::set<std::string> scene_ids;
    std::size_t noisy = 0;
    for (const auto& s : m.scenes) {
        if (!scene_ids.insert(s.scene_id).second) problems.push_back("duplicate scene_id " + s.scene_id);
        need(s.clean_path, true);
        need(s.clean_render_path, false);
        std::set<int> isos;
        for (const auto& e : s.isos) {
            if (!isos.insert(e.iso).second) {
                problems.push_back("scene " + s.scene_id + " lists ISO " + std::to_string(e.iso) + " twice");
            }
            need(e.noisy_raw_path, true);
            need(e.noisy_render_path, false);
            ++noisy;
        }
    }
    if (m.counts.scenes != m.scenes.size()) {
        problems.push_back("counts.scenes is " + std::to_string(m.counts.scenes) + " but " +
                           std::to_string(m.scenes.size()) + " scenes are listed");
    }
    if (m.counts.noisy_images != noisy) {
        problems.push_back("counts.noisy_images is " + std::to_string(m.counts.noisy_images) + " but " +
                           std::to_string(noisy) + " entries are listed");
    }
    return problems;
}

void validate_manifest(const fs::path& path) {
    const auto problems = manifest_problems(load_manifest(path), path.parent_path());
    if (problems.empty()) return;
    std::string msg = "manifest " + path.string() + " is invalid: " + problems.front();
    if (problems.size() > 1) msg += " (and " + std::to_string(problems.size() - 1) + " more)";
    throw DataError(msg);
}

}  // namespace noisecal
