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

#include "noisecal/sensor_sim.hpp"

#include <algorithm>
#include <cmath>

#include "noisecal/atomic_file.hpp"
#include "noisecal/error.hpp"
#include "noisecal/parallel.hpp"
#include "noisecal/rng.hpp"

namespace noisecal {

using nlohmann::json;

void SensorSpec::validate() const {
    if (width == 0 || height == 0 || width % 2 || height % 2) throw DataError("sensor dimensions must be even");
    if (black_level < 0 || black_level >= white_level || white_level > 65535) {
        throw DataError("sensor black/white levels are inconsistent");
    }
    if (iso_ladder.empty()) throw DataError("sensor iso_ladder is empty");
    if (!std::is_sorted(iso_ladder.begin(), iso_ladder.end()) ||
        std::adjacent_find(iso_ladder.begin(), iso_ladder.end()) != iso_ladder.end() || iso_ladder.front() <= 0) {
        throw DataError("sensor iso_ladder must be strictly increasing positive values");
    }
    for (Channel ch : kChannels) {
        const auto& t = truth[static_cast<int>(ch)];
        if (!(t.k > 0.0) || !(t.m > 0.0)) {
            throw DataError("truth." + std::string(to_string(ch)) + " needs k > 0 and m > 0");
        }
        if (t.b_k < 0.0) throw DataError("truth." + std::string(to_string(ch)) + ".b_k must be >= 0");
    }
    for (const auto* m : {&flattening, &suppression}) {
        for (const auto& [iso, f] : *m) {
            if (!(f > 0.0 && f <= 1.0)) {
                throw DataError("flattening/suppression factor at ISO " + std::to_string(iso) + " must lie in (0, 1]");
            }
        }
    }
}

ChannelParams SensorSpec::truth_at(int iso, Channel ch) const {
    const auto& t = truth[static_cast<int>(ch)];
    const double i = static_cast<double>(iso);
    return {t.k * std::pow(i, t.m), t.b_k * std::pow(i, t.b_m)};
}

ChannelTable SensorSpec::truth_table(int iso) const {
    ChannelTable out;
    for (Channel ch : kChannels) out[static_cast<int>(ch)] = truth_at(iso, ch);
    return out;
}

double SensorSpec::suppression_at(int iso) const {
    const auto it = suppression.find(iso);
    return it == suppression.end() ? 1.0 : it->second;
}

double SensorSpec::flattening_at(int iso) const {
    const auto it = flattening.find(iso);
    return it == flattening.end() ? 1.0 : it->second;
}

SensorSpec uniform_sensor(double a, double b, int iso, std::size_t size) {
    SensorSpec s;
    s.camera_id = "uniform-sim";
    s.width = s.height = size;
    s.iso_ladder = {iso};
    for (auto& t : s.truth) t = TruthChannel{a / iso, 1.0, b, 0.0};
    return s;
}

json to_json(const SensorSpec& spec) {
    json j;
    j["camera_id"] = spec.camera_id;
    j["width"] = spec.width;
    j["height"] = spec.height;
    j["cfa"] = std::string(to_string(spec.layout));
    j["black_level"] = spec.black_level;
    j["white_level"] = spec.white_level;
    j["iso_ladder"] = spec.iso_ladder;
    json truth = json::object();
    for (Channel ch : kChannels) {
        const auto& t = spec.truth[static_cast<int>(ch)];
        truth[std::string(to_string(ch))] = {{"k", t.k}, {"m", t.m}, {"b_k", t.b_k}, {"b_m", t.b_m}};
    }
    j["truth"] = truth;
    auto iso_map = [](const std::map<int, double>& m) {
        json o = json::object();
        for (const auto& [iso, v] : m) o[std::to_string(iso)] = v;
        return o;
    };
    j["flattening"] = iso_map(spec.flattening);
    j["suppression"] = iso_map(spec.suppression);
    if (spec.dark_signature) {
        const auto& d = *spec.dark_signature;
        j["dark_signature"] = {
            {"sigma", d.sigma}, {"column_sigma", d.column_sigma}, {"seed", d.seed}, {"iso_exponent", d.iso_exponent}};
    }
    j["uses_dark_frames"] = spec.uses_dark_frames;
    j["dark_exposure_s"] = spec.dark_exposure_s;
    return j;
}

SensorSpec sensor_spec_from_json(const json& j) {
    try {
        SensorSpec s;
        s.camera_id = j.at("camera_id").get<std::string>();
        s.width = j.at("width").get<std::size_t>();
        s.height = j.at("height").get<std::size_t>();
        s.layout = parse_layout(j.at("cfa").get<std::string>());
        s.black_level = j.at("black_level").get<int>();
        s.white_level = j.at("white_level").get<int>();
        s.iso_ladder = j.at("iso_ladder").get<std::vector<int>>();
        for (Channel ch : kChannels) {
            const auto& t = j.at("truth").at(std::string(to_string(ch)));
            s.truth[static_cast<int>(ch)] = {t.at("k").get<double>(), t.value("m", 1.0), t.value("b_k", 0.0),
                                             t.value("b_m", 0.0)};
        }
        auto read_iso_map = [&](const char* key, std::map<int, double>& out) {
            if (!j.contains(key)) return;
            for (const auto& [k, v] : j.at(key).items()) out[std::stoi(k)] = v.get<double>();
        };
        read_iso_map("flattening", s.flattening);
        read_iso_map("suppression", s.suppression);
        if (j.contains("dark_signature") && !j.at("dark_signature").is_null()) {
            const auto& d = j.at("dark_signature");
            s.dark_signature = DarkSignature{d.value("sigma", 0.0), d.value("column_sigma", 0.0),
                                             d.value("seed", std::uint64_t{0}), d.value("iso_exponent", 0.5)};
        }
        s.uses_dark_frames = j.value("uses_dark_frames", false);
        s.dark_exposure_s = j.value("dark_exposure_s", 1.0);
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed sensor spec: ") + e.what());
    }
}

SensorSpec load_sensor_spec(const std::filesystem::path& path) {
    try {
        return sensor_spec_from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

Plane dark_signature(const SensorSpec& spec, int iso) {
    Plane p(spec.width, spec.height);
    if (!spec.dark_signature) return p;
    const auto& d = *spec.dark_signature;
    const double gain = std::pow(static_cast<double>(iso) / spec.base_iso(), d.iso_exponent);
    std::vector<double> column(spec.width);
    for (std::size_t x = 0; x < spec.width; ++x) {
        KeyedStream s(d.seed, stream_tag::kSignature | 1u, x);
        column[x] = d.column_sigma * s.normal();
    }
    for (std::size_t y = 0; y < spec.height; ++y) {
        for (std::size_t x = 0; x < spec.width; ++x) {
            const std::size_t i = y * spec.width + x;
            KeyedStream s(d.seed, stream_tag::kSignature, i);
            p.data[i] = gain * (d.sigma * s.normal() + column[x]);
        }
    }
    return p;
}

BayerImage blank_capture(const SensorSpec& spec, int iso, double exposure_s, double fill) {
    BayerImage img(spec.width, spec.height, spec.layout, fill);
    img.black_level = spec.black_level;
    img.white_level = spec.white_level;
    img.iso = iso;
    img.exposure_s = exposure_s;
    img.camera_id = spec.camera_id;
    return img;
}

namespace {

// Truth P-G noise on `clean`, unclipped, then optional variance damping, the
// fixed signature, and the final clamp.
BayerImage expose(const SensorSpec& spec, const BayerImage& clean, int iso, std::uint64_t seed, double damping,
                  const Plane& signature) {
    SynthOptions raw;
    raw.clip = false;
    BayerImage img = synthesize_pg_image(clean, spec.truth_table(iso), seed, raw);
    const double scale = std::sqrt(damping);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        double v = img.data[i];
        if (damping != 1.0) v = clean.data[i] + scale * (v - clean.data[i]);
        v += signature.data[i];
        img.data[i] = std::clamp(v, 0.0, 1.0);
    }
    img.iso = iso;
    return img;
}

}  // namespace

FlatPair gen_flat_pair(const SensorSpec& spec, int iso, double exposure_s, double level, std::uint64_t seed) {
    spec.validate();
    if (!(level >= 0.0 && level <= 1.0)) throw InvalidArgument("flat-field level must lie in [0, 1]");
    const BayerImage clean = blank_capture(spec, iso, exposure_s, level);
    const Plane sig = dark_signature(spec, iso);
    const double damping = spec.suppression_at(iso);
    FlatPair pair;
    pair.first = expose(spec, clean, iso, derive_seed(seed, 1), damping, sig);
    pair.second = expose(spec, clean, iso, derive_seed(seed, 2), damping, sig);
    return pair;
}

std::vector<DarkFrame> gen_dark_frames(const SensorSpec& spec, int iso, std::size_t count, std::uint64_t seed) {
    spec.validate();
    const Plane sig = dark_signature(spec, iso);
    const double range = static_cast<double>(spec.white_level - spec.black_level);
    std::vector<DarkFrame> frames(count);
    for (std::size_t f = 0; f < count; ++f) {
        DarkFrame& d = frames[f];
        d.width = spec.width;
        d.height = spec.height;
        d.layout = spec.layout;
        d.iso = iso;
        d.exposure_s = spec.dark_exposure_s;
        d.deviation.resize(spec.width * spec.height);
        const std::uint64_t frame_seed = derive_seed(seed, f);
        parallel_for(spec.height, [&](std::size_t y0, std::size_t y1) {
            for (std::size_t y = y0; y < y1; ++y) {
                for (std::size_t x = 0; x < spec.width; ++x) {
                    const std::size_t i = y * spec.width + x;
                    const Channel ch = channel_at(spec.layout, x, y);
                    const double b = spec.truth_at(iso, ch).b;
                    double v = sig.data[i];
                    if (b > 0.0) {
                        KeyedStream s(frame_seed, stream_tag::with_channel(stream_tag::kRead, static_cast<int>(ch)), i);
                        v += std::sqrt(b) * s.normal();
                    }
                    // Quantize to the DN grid and clip to [0, white].
                    double dn = std::nearbyint(spec.black_level + v * range);
                    dn = std::clamp(dn, 0.0, static_cast<double>(spec.white_level));
                    d.deviation[i] = (dn - spec.black_level) / range;
                }
            }
        });
    }
    return frames;
}

DarkFrameSet gen_dark_frame_set(const SensorSpec& spec, std::size_t count, std::uint64_t seed) {
    DarkFrameSet set;
    set.camera_id = spec.camera_id;
    for (int iso : spec.iso_ladder) set.frames[iso] = gen_dark_frames(spec, iso, count, derive_seed(seed, iso));
    return set;
}

std::string_view to_string(SceneKind kind) {
    switch (kind) {
        case SceneKind::Gradient: return "gradient";
        case SceneKind::Checker: return "checker";
        case SceneKind::NoiseTexture: return "noise-texture";
    }
    return "?";
}

SceneKind parse_scene_kind(std::string_view text) {
    for (SceneKind k : {SceneKind::Gradient, SceneKind::Checker, SceneKind::NoiseTexture}) {
        if (to_string(k) == text) return k;
    }
    throw InvalidArgument("unknown scene kind '" + std::string(text) + "'");
}

BayerImage gen_scene(const SensorSpec& spec, SceneKind kind, std::uint64_t seed) {
    spec.validate();
    BayerImage img = blank_capture(spec, spec.base_iso(), 0.01);
    const std::size_t w = spec.width, h = spec.height;
    switch (kind) {
        case SceneKind::Gradient:
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) img.at(x, y) = static_cast<double>(x) / static_cast<double>(w - 1);
            break;
        case SceneKind::Checker: {
            constexpr std::size_t kSquare = 32;
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) img.at(x, y) = ((x / kSquare + y / kSquare) % 2) ? 0.75 : 0.25;
            break;
        }
        case SceneKind::NoiseTexture: {
            // Bilinear upsampling of a coarse random lattice in [0.1, 0.9].
            constexpr std::size_t kCell = 32;
            const std::size_t gw = w / kCell + 2, gh = h / kCell + 2;
            std::vector<double> lattice(gw * gh);
            for (std::size_t i = 0; i < lattice.size(); ++i) {
                KeyedStream s(seed, stream_tag::kScene, i);
                lattice[i] = 0.1 + 0.8 * s.uniform();
            }
            for (std::size_t y = 0; y < h; ++y) {
                const double fy = static_cast<double>(y) / kCell;
                const auto gy = static_cast<std::size_t>(fy);
                const double ty = fy - static_cast<double>(gy);
                for (std::size_t x = 0; x < w; ++x) {
                    const double fx = static_cast<double>(x) / kCell;
                    const auto gx = static_cast<std::size_t>(fx);
                    const double tx = fx - static_cast<double>(gx);
                    const double v00 = lattice[gy * gw + gx], v10 = lattice[gy * gw + gx + 1];
                    const double v01 = lattice[(gy + 1) * gw + gx], v11 = lattice[(gy + 1) * gw + gx + 1];
                    img.at(x, y) = (1 - ty) * ((1 - tx) * v00 + tx * v10) + ty * ((1 - tx) * v01 + tx * v11);
                }
            }
            break;
        }
    }
    return img;
}

BayerImage capture_scene(const SensorSpec& spec, const BayerImage& clean, int iso, std::uint64_t seed) {
    spec.validate();
    if (clean.width != spec.width || clean.height != spec.height || clean.layout != spec.layout) {
        throw DataError("scene geometry does not match the sensor");
    }
    return expose(spec, clean, iso, seed, 1.0, dark_signature(spec, iso));
}

DngProfile dng_like_profile(const SensorSpec& spec) {
    spec.validate();
    DngProfile p;
    p.camera_id = spec.camera_id;
    for (int iso : spec.iso_ladder) {
        ChannelParams avg;
        for (Channel ch : kChannels) {
            const auto t = spec.truth_at(iso, ch);
            avg.a += t.a / 4.0;
            avg.b += t.b / 4.0;
        }
        avg.a *= spec.flattening_at(iso);
        p.iso_table[iso] = avg;
    }
    return p;
}

NoiseModel truth_model(const SensorSpec& spec) {
    spec.validate();
    NoiseModel m;
    m.camera_id = spec.camera_id;
    m.uses_dark_frames = spec.uses_dark_frames;
    for (int iso : spec.iso_ladder) m.iso_table[iso] = spec.truth_table(iso);
    return m;
}

}  // namespace noisecal
