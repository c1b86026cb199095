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

#include "noisecal/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>

#include "noisecal/atomic_file.hpp"
#include "noisecal/error.hpp"

namespace noisecal {

using nlohmann::json;

double PowerLaw::at(double iso) const { return k * std::pow(iso, m); }

namespace {

std::string num(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

void check_params(const ChannelParams& p, const std::string& where) {
    if (!std::isfinite(p.a) || !(p.a > 0.0)) throw DataError(where + ".a must be > 0 (got " + num(p.a) + ")");
    if (!std::isfinite(p.b) || p.b < 0.0) throw DataError(where + ".b must be >= 0 (got " + num(p.b) + ")");
}

}  // namespace

void NoiseModel::validate() const {
    if (schema_version != kModelSchemaVersion) {
        throw DataError("unsupported noise-model schema_version " + std::to_string(schema_version));
    }
    if (iso_table.empty()) throw DataError("noise model has an empty iso_table");
    for (const auto& [iso, table] : iso_table) {
        if (iso <= 0) throw DataError("iso_table key " + std::to_string(iso) + " must be positive");
        for (Channel ch : kChannels) {
            check_params(table[static_cast<int>(ch)],
                         "iso_table[" + std::to_string(iso) + "]." + std::string(to_string(ch)));
        }
    }
    if (tuning) {
        for (Channel ch : kChannels) {
            const auto& pl = tuning->per_channel[static_cast<int>(ch)];
            const std::string where = "tuning." + std::string(to_string(ch));
            if (!(pl.k > 0.0) || !std::isfinite(pl.k)) throw DataError(where + ".k must be > 0 (got " + num(pl.k) + ")");
            if (!(pl.m > 0.0) || !std::isfinite(pl.m)) throw DataError(where + ".m must be > 0 (got " + num(pl.m) + ")");
        }
    }
}

void DngProfile::validate() const {
    if (iso_table.empty()) throw DataError("DNG profile has an empty iso_table");
    for (const auto& [iso, p] : iso_table) {
        if (iso <= 0) throw DataError("iso_table key " + std::to_string(iso) + " must be positive");
        check_params(p, "iso_table[" + std::to_string(iso) + "]");
    }
}

NoiseModel to_noise_model(const DngProfile& profile) {
    profile.validate();
    NoiseModel m;
    m.camera_id = profile.camera_id;
    for (const auto& [iso, p] : profile.iso_table) m.iso_table[iso] = {p, p, p, p};
    return m;
}

DngProfile to_dng_profile(const NoiseModel& model) {
    if (model.tuning) throw InvalidArgument("a tuned model has no single-pair profile form");
    DngProfile out;
    out.camera_id = model.camera_id;
    for (const auto& [iso, table] : model.iso_table) {
        for (const auto& p : table) {
            if (!(p == table[0])) {
                throw InvalidArgument("ISO " + std::to_string(iso) + " has per-channel parameters; not a single pair");
            }
        }
        out.iso_table[iso] = table[0];
    }
    return out;
}

PowerLaw fit_power_law(const std::map<int, double>& iso_to_a, int anchor_lo, int anchor_hi) {
    if (anchor_lo == anchor_hi) throw InvalidArgument("power-law anchors must differ");
    if (anchor_lo > anchor_hi) throw InvalidArgument("power-law anchor_lo must be below anchor_hi");
    if (anchor_lo <= 0) throw InvalidArgument("power-law anchors must be positive ISO values");
    const auto lo = iso_to_a.find(anchor_lo);
    const auto hi = iso_to_a.find(anchor_hi);
    if (lo == iso_to_a.end()) throw DataError("anchor ISO " + std::to_string(anchor_lo) + " has no measurement");
    if (hi == iso_to_a.end()) throw DataError("anchor ISO " + std::to_string(anchor_hi) + " has no measurement");
    if (!(lo->second > 0.0) || !(hi->second > 0.0)) throw DataError("power-law anchors need a > 0");

    PowerLaw pl;
    pl.m = std::log(hi->second / lo->second) / std::log(static_cast<double>(anchor_hi) / anchor_lo);
    if (!(pl.m > 0.0)) {
        throw DataError("power-law exponent m=" + num(pl.m) + " is not positive; a must grow with ISO between anchors " +
                        std::to_string(anchor_lo) + " and " + std::to_string(anchor_hi));
    }
    pl.k = lo->second / std::pow(static_cast<double>(anchor_lo), pl.m);
    return pl;
}

std::pair<int, int> default_anchors(const NoiseModel& model) {
    if (model.iso_table.size() < 4) {
        throw DataError("default tuning anchors need at least 4 measured ISO values, model has " +
                        std::to_string(model.iso_table.size()));
    }
    auto it = model.iso_table.begin();
    const int second = std::next(it, 1)->first;
    const int fourth = std::next(it, 3)->first;
    return {second, fourth};
}

NoiseModel tune(const NoiseModel& model, std::optional<std::pair<int, int>> anchors) {
    model.validate();
    const auto [lo, hi] = anchors ? *anchors : default_anchors(model);
    Tuning t;
    t.anchor_lo = lo;
    t.anchor_hi = hi;
    for (Channel ch : kChannels) {
        std::map<int, double> a_by_iso;
        for (const auto& [iso, table] : model.iso_table) a_by_iso[iso] = table[static_cast<int>(ch)].a;
        t.per_channel[static_cast<int>(ch)] = fit_power_law(a_by_iso, lo, hi);
    }
    NoiseModel out = model;
    out.tuning = t;
    return out;
}

double tuned_a(const NoiseModel& model, int iso, Channel ch) {
    if (!model.tuning) throw DataError("noise model for '" + model.camera_id + "' has no tuning");
    if (iso <= 0) throw InvalidArgument("ISO must be positive");
    return model.tuning->per_channel[static_cast<int>(ch)].at(iso);
}

std::string_view to_string(ParamMode mode) { return mode == ParamMode::Tuned ? "tuned" : "calibrated"; }

ParamMode parse_param_mode(std::string_view text) {
    if (text == "tuned") return ParamMode::Tuned;
    if (text == "calibrated") return ParamMode::Calibrated;
    throw InvalidArgument("unknown parameter mode '" + std::string(text) + "'");
}

int nearest_measured_iso(const NoiseModel& model, int iso) {
    if (model.iso_table.empty()) throw DataError("noise model has an empty iso_table");
    if (iso <= 0) throw InvalidArgument("ISO must be positive");
    // Log distance compared as the ratio max/min, cross-multiplied in integers
    // so that exact ties (iso^2 == lo * hi) are detected and go to the lower ISO.
    auto ratio = [iso](int m) {
        return std::pair<std::int64_t, std::int64_t>{std::max(iso, m), std::min(iso, m)};
    };
    int best = model.iso_table.begin()->first;
    for (const auto& [measured, _] : model.iso_table) {
        const auto [num_c, den_c] = ratio(measured);
        const auto [num_b, den_b] = ratio(best);
        if (num_c * den_b < num_b * den_c) best = measured;
    }
    return best;
}

ChannelParams effective_params(const NoiseModel& model, int iso, Channel ch, ParamMode mode) {
    if (mode == ParamMode::Calibrated) {
        const auto it = model.iso_table.find(iso);
        if (it == model.iso_table.end()) {
            throw DataError("ISO " + std::to_string(iso) + " is not in the calibrated table of '" + model.camera_id +
                            "'");
        }
        return it->second[static_cast<int>(ch)];
    }
    ChannelParams p;
    p.a = tuned_a(model, iso, ch);
    p.b = model.iso_table.at(nearest_measured_iso(model, iso))[static_cast<int>(ch)].b;
    return p;
}

json to_json(const NoiseModel& model) {
    json doc;
    doc["schema_version"] = model.schema_version;
    doc["camera_id"] = model.camera_id;
    doc["uses_dark_frames"] = model.uses_dark_frames;
    json table = json::object();
    for (const auto& [iso, t] : model.iso_table) {
        json entry = json::object();
        for (Channel ch : kChannels) {
            const auto& p = t[static_cast<int>(ch)];
            entry[std::string(to_string(ch))] = {{"a", p.a}, {"b", p.b}};
        }
        table[std::to_string(iso)] = entry;
    }
    doc["iso_table"] = table;
    if (model.tuning) {
        json tj = json::object();
        for (Channel ch : kChannels) {
            const auto& pl = model.tuning->per_channel[static_cast<int>(ch)];
            tj[std::string(to_string(ch))] = {{"k", pl.k}, {"m", pl.m}};
        }
        doc["tuning"] = tj;
        doc["tuning_anchors"] = {model.tuning->anchor_lo, model.tuning->anchor_hi};
    }
    return doc;
}

json to_json(const DngProfile& profile) {
    json doc;
    doc["schema_version"] = kModelSchemaVersion;
    doc["kind"] = "dng_profile";
    doc["camera_id"] = profile.camera_id;
    json table = json::object();
    for (const auto& [iso, p] : profile.iso_table) table[std::to_string(iso)] = {{"a", p.a}, {"b", p.b}};
    doc["iso_table"] = table;
    return doc;
}

namespace {

int parse_iso_key(const std::string& key) {
    std::size_t used = 0;
    int iso = 0;
    try {
        iso = std::stoi(key, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != key.size() || iso <= 0) throw DataError("iso_table key '" + key + "' is not a positive integer");
    return iso;
}

int read_schema_version(const json& doc) {
    if (!doc.is_object()) throw DataError("noise model document must be a JSON object");
    if (!doc.contains("schema_version")) throw DataError("noise model is missing schema_version");
    const int v = doc.at("schema_version").get<int>();
    if (v != kModelSchemaVersion) throw DataError("unsupported noise-model schema_version " + std::to_string(v));
    return v;
}

ChannelParams read_pair(const json& j) { return {j.at("a").get<double>(), j.at("b").get<double>()}; }

}  // namespace

bool is_dng_profile_json(const json& doc) {
    if (!doc.is_object()) return false;
    if (doc.contains("kind")) return doc.at("kind") == "dng_profile";
    if (!doc.contains("iso_table") || !doc.at("iso_table").is_object() || doc.at("iso_table").empty()) return false;
    return doc.at("iso_table").begin()->contains("a");
}

NoiseModel noise_model_from_json(const json& doc) {
    try {
        if (is_dng_profile_json(doc)) return to_noise_model(dng_profile_from_json(doc));
        NoiseModel m;
        m.schema_version = read_schema_version(doc);
        m.camera_id = doc.value("camera_id", std::string());
        m.uses_dark_frames = doc.value("uses_dark_frames", false);
        for (const auto& [key, entry] : doc.at("iso_table").items()) {
            ChannelTable t;
            for (Channel ch : kChannels) t[static_cast<int>(ch)] = read_pair(entry.at(std::string(to_string(ch))));
            m.iso_table[parse_iso_key(key)] = t;
        }
        if (doc.contains("tuning") && !doc.at("tuning").is_null()) {
            Tuning t;
            const auto& tj = doc.at("tuning");
            for (Channel ch : kChannels) {
                const auto& c = tj.at(std::string(to_string(ch)));
                t.per_channel[static_cast<int>(ch)] = {c.at("k").get<double>(), c.at("m").get<double>()};
            }
            if (doc.contains("tuning_anchors")) {
                t.anchor_lo = doc.at("tuning_anchors").at(0).get<int>();
                t.anchor_hi = doc.at("tuning_anchors").at(1).get<int>();
            }
            m.tuning = t;
        }
        m.validate();
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed noise model: ") + e.what());
    }
}

DngProfile dng_profile_from_json(const json& doc) {
    try {
        read_schema_version(doc);
        DngProfile p;
        p.camera_id = doc.value("camera_id", std::string());
        for (const auto& [key, entry] : doc.at("iso_table").items()) p.iso_table[parse_iso_key(key)] = read_pair(entry);
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed DNG profile: ") + e.what());
    }
}

namespace {

json parse_json_file(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace

void save_model(const std::filesystem::path& path, const NoiseModel& model) {
    model.validate();
    write_file_atomic(path, to_json(model).dump(2) + "\n");
}

void save_dng_profile(const std::filesystem::path& path, const DngProfile& profile) {
    profile.validate();
    write_file_atomic(path, to_json(profile).dump(2) + "\n");
}

NoiseModel load_model(const std::filesystem::path& path) {
    try {
        return noise_model_from_json(parse_json_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

DngProfile load_dng_profile(const std::filesystem::path& path) {
    try {
        return dng_profile_from_json(parse_json_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string model_hash(const NoiseModel& model) {
    const std::string canonical = to_json(model).dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace noisecal
