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

#include "noisecal/synthesis.hpp"

#include <algorithm>
#include <cmath>

#include "noisecal/error.hpp"
#include "noisecal/parallel.hpp"

namespace noisecal {

void DarkFrameSet::validate() const {
    for (const auto& [iso, list] : frames) {
        if (list.empty()) throw DataError("dark-frame set has no frames at ISO " + std::to_string(iso));
        for (const auto& f : list) {
            if (f.width != list.front().width || f.height != list.front().height || f.layout != list.front().layout) {
                throw DataError("dark frames at ISO " + std::to_string(iso) + " differ in size or layout");
            }
            if (f.deviation.size() != f.width * f.height) throw DataError("dark frame sample count mismatch");
        }
    }
}

const std::vector<DarkFrame>& DarkFrameSet::at_iso(int iso) const {
    const auto it = frames.find(iso);
    if (it == frames.end() || it->second.empty()) {
        throw DataError("no dark frames at ISO " + std::to_string(iso) + " for '" + camera_id + "'");
    }
    return it->second;
}

std::string_view to_string(Method method) {
    switch (method) {
        case Method::Pg: return "pg";
        case Method::PgDark: return "pg_dark";
        case Method::Awgn: return "awgn";
        case Method::AwgnScaled: return "awgn_scaled";
    }
    return "?";
}

Method parse_method(std::string_view text) {
    for (Method m : {Method::Pg, Method::PgDark, Method::Awgn, Method::AwgnScaled}) {
        if (to_string(m) == text) return m;
    }
    throw InvalidArgument("unknown synthesis method '" + std::string(text) + "'");
}

namespace {

inline double finish(double v, const SynthOptions& opts, std::size_t& clipped) {
    if (!opts.clip) return v;
    if (v < 0.0) {
        ++clipped;
        return 0.0;
    }
    if (v > 1.0) {
        ++clipped;
        return 1.0;
    }
    return v;
}

// Runs per-row work in parallel and sums the per-row clip counts in row order.
template <typename RowFn>
std::size_t for_rows(std::size_t rows, RowFn&& fn) {
    std::vector<std::size_t> counts(rows, 0);
    parallel_for(rows, [&](std::size_t begin, std::size_t end) {
        for (std::size_t y = begin; y < end; ++y) counts[y] = fn(y);
    });
    std::size_t total = 0;
    for (auto c : counts) total += c;
    return total;
}

inline double shot_sample(double clean, double a, std::uint64_t seed, int channel, std::size_t index,
                          const SynthOptions& opts) {
    if (!opts.shot_noise) return clean;
    KeyedStream s(seed, stream_tag::with_channel(stream_tag::kShot, channel), index);
    const auto k = sample_poisson(s, std::max(clean, 0.0) / a, opts.poisson_gaussian_threshold);
    return a * static_cast<double>(k);
}

}  // namespace

Plane synthesize_pg(const Plane& clean, double a, double b, const StreamKey& key, const SynthOptions& opts,
                    std::size_t* clip_events) {
    if (!(a > 0.0)) throw InvalidArgument("synthesize_pg: a must be > 0");
    if (b < 0.0) throw InvalidArgument("synthesize_pg: b must be >= 0");
    Plane out(clean.width, clean.height);
    const double read_sigma = std::sqrt(b);
    const std::size_t clipped = for_rows(clean.height, [&](std::size_t y) {
        std::size_t c = 0;
        for (std::size_t x = 0; x < clean.width; ++x) {
            const std::size_t i = y * clean.width + x;
            double v = shot_sample(clean.data[i], a, key.seed, key.channel, i, opts);
            if (read_sigma > 0.0) {
                KeyedStream r(key.seed, stream_tag::with_channel(stream_tag::kRead, key.channel), i);
                v += read_sigma * r.normal();
            }
            out.data[i] = finish(v, opts, c);
        }
        return c;
    });
    if (clip_events) *clip_events = clipped;
    return out;
}

BayerImage synthesize_pg_image(const BayerImage& clean, const ChannelTable& params, std::uint64_t seed,
                               const SynthOptions& opts, std::size_t* clip_events) {
    clean.validate();
    BayerImage out = blank_like(clean);
    std::size_t total = 0;
    for (Channel ch : kChannels) {
        const ChannelPlane plane = extract_channel(clean, ch);
        std::size_t c = 0;
        const auto& p = params[static_cast<int>(ch)];
        ChannelPlane noisy(ch, plane.width, plane.height);
        static_cast<Plane&>(noisy) = synthesize_pg(plane, p.a, p.b, {seed, static_cast<int>(ch)}, opts, &c);
        insert_channel(out, noisy);
        total += c;
    }
    if (clip_events) *clip_events = total;
    return out;
}

std::size_t select_dark_frame(std::uint64_t seed, std::size_t frame_count) {
    if (frame_count == 0) throw DataError("dark-frame selection from an empty list");
    KeyedStream s(seed, stream_tag::kDarkSelect, 0);
    return static_cast<std::size_t>(s.below(frame_count));
}

DarkInjection synthesize_pg_dark(const BayerImage& clean, const ChannelTable& params, const DarkFrameSet& darks,
                                 int iso, std::uint64_t seed, const SynthOptions& opts) {
    clean.validate();
    const auto& list = darks.at_iso(iso);
    DarkInjection result;
    result.frame_index = select_dark_frame(seed, list.size());
    const DarkFrame& dark = list[result.frame_index];
    if (dark.width != clean.width || dark.height != clean.height) {
        throw DataError("dark frame is " + std::to_string(dark.width) + "x" + std::to_string(dark.height) +
                        " but the clean image is " + std::to_string(clean.width) + "x" +
                        std::to_string(clean.height));
    }
    if (dark.layout != clean.layout) throw DataError("dark frame CFA layout differs from the clean image");
    result.exposure_mismatch = dark.exposure_s != clean.exposure_s;

    for (Channel ch : kChannels) {
        if (!(params[static_cast<int>(ch)].a > 0.0)) throw InvalidArgument("synthesize_pg_dark: a must be > 0");
    }
    result.image = blank_like(clean);
    result.image.iso = iso;
    const std::size_t w = clean.width;
    result.clip_events = for_rows(clean.height, [&](std::size_t y) {
        std::size_t c = 0;
        for (std::size_t x = 0; x < w; ++x) {
            const Channel ch = channel_at(clean.layout, x, y);
            const int ci = static_cast<int>(ch);
            // Channel-plane index, so the shot stream matches synthesize_pg.
            const std::size_t plane_index = (y / 2) * (w / 2) + x / 2;
            const std::size_t i = y * w + x;
            const double shot = shot_sample(clean.data[i], params[ci].a, seed, ci, plane_index, opts);
            result.image.data[i] = finish(shot + dark.deviation[i], opts, c);
        }
        return c;
    });
    return result;
}

Plane synthesize_awgn(const Plane& clean, double sigma, std::uint64_t seed, const SynthOptions& opts,
                      std::size_t* clip_events) {
    if (sigma < 0.0) throw InvalidArgument("synthesize_awgn: sigma must be >= 0");
    Plane out(clean.width, clean.height);
    const std::size_t clipped = for_rows(clean.height, [&](std::size_t y) {
        std::size_t c = 0;
        for (std::size_t x = 0; x < clean.width; ++x) {
            const std::size_t i = y * clean.width + x;
            double v = clean.data[i];
            if (sigma > 0.0) {
                KeyedStream s(seed, stream_tag::kAwgn, i);
                v += sigma * s.normal();
            }
            out.data[i] = finish(v, opts, c);
        }
        return c;
    });
    if (clip_events) *clip_events = clipped;
    return out;
}

double awgn_scaled_sigma(double sigma_base, int iso, int iso_base) {
    if (iso <= 0 || iso_base <= 0) throw InvalidArgument("awgn_scaled: ISO values must be positive");
    return sigma_base * std::sqrt(static_cast<double>(iso) / iso_base);
}

nlohmann::json to_json(const Provenance& p) {
    nlohmann::json j;
    j["method"] = std::string(to_string(p.method));
    j["seed"] = p.seed;
    j["iso"] = p.iso;
    j["clip_events"] = p.clip_events;
    if (!p.model_hash.empty()) {
        j["model_hash"] = p.model_hash;
        j["param_mode"] = std::string(to_string(p.mode));
    }
    if (p.dark_frame_index) {
        j["dark_frame_index"] = *p.dark_frame_index;
        j["dark_exposure_mismatch"] = p.dark_exposure_mismatch;
    }
    if (p.params) {
        nlohmann::json pj = nlohmann::json::object();
        for (Channel ch : kChannels) {
            const auto& cp = (*p.params)[static_cast<int>(ch)];
            pj[std::string(to_string(ch))] = {{"a", cp.a}, {"b", cp.b}};
        }
        j["params"] = pj;
    }
    if (p.sigma) j["sigma"] = *p.sigma;
    return j;
}

SynthesisResult run_synthesis(const SynthesisRequest& req) {
    req.clean.validate();
    if (req.target_iso <= 0) throw InvalidArgument("target ISO must be positive");
    SynthesisResult res;
    Provenance& prov = res.provenance;
    prov.method = req.method;
    prov.seed = req.seed;
    prov.iso = req.target_iso;
    prov.mode = req.mode;

    auto channel_params = [&]() {
        if (!req.model) throw InvalidArgument(std::string(to_string(req.method)) + " synthesis needs a noise model");
        req.model->validate();
        prov.model_hash = model_hash(*req.model);
        ChannelTable t;
        for (Channel ch : kChannels) {
            t[static_cast<int>(ch)] = effective_params(*req.model, req.target_iso, ch, req.mode);
        }
        return t;
    };

    switch (req.method) {
        case Method::Pg: {
            const ChannelTable params = channel_params();
            prov.params = params;
            res.image = synthesize_pg_image(req.clean, params, req.seed, req.options, &prov.clip_events);
            break;
        }
        case Method::PgDark: {
            if (!req.darks) throw InvalidArgument("pg_dark synthesis needs a dark-frame set");
            ChannelTable params = channel_params();
            for (auto& p : params) p.b = 0.0;
            prov.params = params;
            DarkInjection inj = synthesize_pg_dark(req.clean, params, *req.darks, req.target_iso, req.seed, req.options);
            res.image = std::move(inj.image);
            prov.dark_frame_index = inj.frame_index;
            prov.dark_exposure_mismatch = inj.exposure_mismatch;
            prov.clip_events = inj.clip_events;
            break;
        }
        case Method::Awgn:
        case Method::AwgnScaled: {
            double sigma = req.awgn_sigma;
            if (req.method == Method::AwgnScaled) sigma = awgn_scaled_sigma(req.awgn_sigma, req.target_iso, req.awgn_iso_base);
            prov.sigma = sigma;
            res.image = blank_like(req.clean);
            Plane noisy = synthesize_awgn(req.clean.as_plane(), sigma, req.seed, req.options, &prov.clip_events);
            res.image.data = std::move(noisy.data);
            break;
        }
    }
    res.image.iso = req.target_iso;
    return res;
}

}  // namespace noisecal
