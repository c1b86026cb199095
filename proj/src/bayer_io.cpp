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

#include "noisecal/bayer_io.hpp"

#include <algorithm>
#include <cmath>

#include "noisecal/atomic_file.hpp"
#include "noisecal/error.hpp"

namespace noisecal {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path sidecar_path(const fs::path& raw_path) {
    fs::path p = raw_path;
    p.replace_extension(".json");
    return p;
}

namespace {

json sidecar_json(const BayerImage& img) {
    json j;
    j["schema_version"] = kBayerSchemaVersion;
    j["width"] = img.width;
    j["height"] = img.height;
    j["cfa"] = std::string(to_string(img.layout));
    j["black_level"] = img.black_level;
    j["white_level"] = img.white_level;
    j["iso"] = img.iso;
    j["exposure_s"] = img.exposure_s;
    j["camera_id"] = img.camera_id;
    return j;
}

BayerImage meta_from_sidecar(const fs::path& side) {
    if (!fs::exists(side)) throw DataError("missing sidecar " + side.string());
    json j;
    try {
        j = json::parse(read_file(side));
    } catch (const json::exception& e) {
        throw DataError(side.string() + ": " + e.what());
    }
    try {
        const int version = j.at("schema_version").get<int>();
        if (version != kBayerSchemaVersion) {
            throw DataError(side.string() + ": unsupported schema_version " + std::to_string(version));
        }
        BayerImage m;
        m.width = j.at("width").get<std::size_t>();
        m.height = j.at("height").get<std::size_t>();
        m.layout = parse_layout(j.at("cfa").get<std::string>());
        m.black_level = j.at("black_level").get<int>();
        m.white_level = j.at("white_level").get<int>();
        m.iso = j.at("iso").get<int>();
        m.exposure_s = j.at("exposure_s").get<double>();
        m.camera_id = j.at("camera_id").get<std::string>();
        return m;
    } catch (const json::exception& e) {
        throw DataError(side.string() + ": " + e.what());
    } catch (const DataError& e) {
        if (std::string(e.what()).rfind(side.string(), 0) == 0) throw;
        throw DataError(side.string() + ": " + e.what());
    }
}

void write_u16(const fs::path& path, const std::vector<std::uint16_t>& dn) {
    std::vector<unsigned char> bytes(dn.size() * 2);
    for (std::size_t i = 0; i < dn.size(); ++i) {
        bytes[2 * i] = static_cast<unsigned char>(dn[i] & 0xff);
        bytes[2 * i + 1] = static_cast<unsigned char>(dn[i] >> 8);
    }
    write_file_atomic(path, bytes);
}

}  // namespace

RawBayer read_bayer_raw(const fs::path& path) {
    RawBayer raw;
    raw.meta = meta_from_sidecar(sidecar_path(path));
    const std::string bytes = read_file(path);
    const std::size_t expected = raw.meta.width * raw.meta.height;
    if (bytes.size() % 2 != 0 || bytes.size() / 2 != expected) {
        throw DataError(path.string() + ": payload is " + std::to_string(bytes.size()) + " bytes (" +
                        std::to_string(bytes.size() / 2) + " samples) but the sidecar declares " +
                        std::to_string(raw.meta.width) + "x" + std::to_string(raw.meta.height) + " = " +
                        std::to_string(expected) + " samples");
    }
    raw.dn.resize(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        raw.dn[i] = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[2 * i]) |
                                               (static_cast<unsigned char>(bytes[2 * i + 1]) << 8));
    }
    raw.meta.data.assign(expected, 0.0);
    try {
        raw.meta.validate();
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    raw.meta.data.clear();
    return raw;
}

BayerImage read_bayer(const fs::path& path) {
    RawBayer raw = read_bayer_raw(path);
    BayerImage img = std::move(raw.meta);
    img.data = normalize(raw.dn, img.black_level, img.white_level);
    return img;
}

std::vector<std::uint16_t> denormalize(const BayerImage& img) {
    const double range = static_cast<double>(img.white_level - img.black_level);
    std::vector<std::uint16_t> dn(img.data.size());
    for (std::size_t i = 0; i < dn.size(); ++i) {
        // nearbyint follows the default round-to-nearest-even mode.
        const double v = std::nearbyint(img.black_level + img.data[i] * range);
        dn[i] = static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0));
    }
    return dn;
}

void write_bayer(const fs::path& path, const BayerImage& img, const std::optional<json>& provenance) {
    img.validate();
    json side = sidecar_json(img);
    if (provenance) side["provenance"] = *provenance;
    write_u16(path, denormalize(img));
    write_file_atomic(sidecar_path(path), side.dump(2) + "\n");
}

namespace {

DarkFrame dark_from_raw(const RawBayer& raw) {
    DarkFrame f;
    f.width = raw.meta.width;
    f.height = raw.meta.height;
    f.layout = raw.meta.layout;
    f.iso = raw.meta.iso;
    f.exposure_s = raw.meta.exposure_s;
    const double range = static_cast<double>(raw.meta.white_level - raw.meta.black_level);
    f.deviation.resize(raw.dn.size());
    for (std::size_t i = 0; i < raw.dn.size(); ++i) {
        f.deviation[i] = (static_cast<double>(raw.dn[i]) - raw.meta.black_level) / range;
    }
    return f;
}

}  // namespace

DarkFrame read_dark_frame(const fs::path& path) { return dark_from_raw(read_bayer_raw(path)); }

void write_dark_frame(const fs::path& path, const DarkFrame& frame, int black_level, int white_level,
                      const std::string& camera_id) {
    BayerImage meta(frame.width, frame.height, frame.layout);
    meta.black_level = black_level;
    meta.white_level = white_level;
    meta.iso = frame.iso;
    meta.exposure_s = frame.exposure_s;
    meta.camera_id = camera_id;
    meta.validate();
    const double range = static_cast<double>(white_level - black_level);
    std::vector<std::uint16_t> dn(frame.deviation.size());
    for (std::size_t i = 0; i < dn.size(); ++i) {
        const double v = std::nearbyint(black_level + frame.deviation[i] * range);
        dn[i] = static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0));
    }
    write_u16(path, dn);
    json side = sidecar_json(meta);
    side["kind"] = "dark_frame";
    write_file_atomic(sidecar_path(path), side.dump(2) + "\n");
}

DarkFrameSet load_dark_frames(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("dark-frame directory " + dir.string() + " does not exist");
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".bin") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no dark frames found under " + dir.string());
    DarkFrameSet set;
    for (const auto& f : files) {
        const RawBayer raw = read_bayer_raw(f);
        if (set.camera_id.empty()) set.camera_id = raw.meta.camera_id;
        set.frames[raw.meta.iso].push_back(dark_from_raw(raw));
    }
    set.validate();
    return set;
}

}  // namespace noisecal
