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

#include "noisecal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "noisecal/error.hpp"
#include "noisecal/numeric.hpp"
#include "noisecal/parallel.hpp"

namespace noisecal {

namespace {

void require_same_shape(const Plane& x, const Plane& y, const char* what) {
    if (!x.same_shape(y)) {
        throw DataError(std::string(what) + ": shape mismatch " + std::to_string(x.width) + "x" +
                        std::to_string(x.height) + " vs " + std::to_string(y.width) + "x" + std::to_string(y.height));
    }
}

// Sorting first makes the sum independent of input order.
double order_free_mean(std::vector<double> v) {
    if (v.empty()) return 0.0;
    for (double x : v) {
        if (std::isinf(x)) {
            const bool pos = std::any_of(v.begin(), v.end(), [](double d) { return d == INFINITY; });
            const bool neg = std::any_of(v.begin(), v.end(), [](double d) { return d == -INFINITY; });
            if (pos && neg) return std::nan("");
            return pos ? INFINITY : -INFINITY;
        }
    }
    std::sort(v.begin(), v.end());
    return pairwise_sum(v) / static_cast<double>(v.size());
}

}  // namespace

double psnr(const Plane& x, const Plane& y, double peak) {
    require_same_shape(x, y, "psnr");
    std::vector<double> sq(x.data.size());
    for (std::size_t i = 0; i < sq.size(); ++i) {
        const double d = x.data[i] - y.data[i];
        sq[i] = d * d;
    }
    const double mse = mean(sq);
    if (mse == 0.0) return kPsnrIdentical;
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Plane& x, const Plane& y, const SsimOptions& opts) {
    require_same_shape(x, y, "ssim");
    const std::size_t win = opts.window;
    if (x.width < win || x.height < win) {
        throw DataError("ssim: image " + std::to_string(x.width) + "x" + std::to_string(x.height) +
                        " is smaller than the " + std::to_string(win) + "x" + std::to_string(win) + " window");
    }
    // Separable normalized Gaussian.
    std::vector<double> g(win);
    const double c = (static_cast<double>(win) - 1.0) / 2.0;
    for (std::size_t i = 0; i < win; ++i) {
        const double d = static_cast<double>(i) - c;
        g[i] = std::exp(-(d * d) / (2.0 * opts.sigma * opts.sigma));
    }
    const double gs = pairwise_sum(g);
    for (auto& v : g) v /= gs;

    const std::size_t ow = x.width - win + 1, oh = x.height - win + 1;
    // Horizontal pass for the five moment images, then vertical pass per output row.
    auto hpass = [&](auto&& value) {
        Plane out(ow, x.height);
        for (std::size_t yy = 0; yy < x.height; ++yy) {
            for (std::size_t xx = 0; xx < ow; ++xx) {
                double s = 0.0;
                for (std::size_t k = 0; k < win; ++k) s += g[k] * value(xx + k, yy);
                out.at(xx, yy) = s;
            }
        }
        return out;
    };
    const Plane hx = hpass([&](std::size_t i, std::size_t j) { return x.at(i, j); });
    const Plane hy = hpass([&](std::size_t i, std::size_t j) { return y.at(i, j); });
    const Plane hxx = hpass([&](std::size_t i, std::size_t j) { return x.at(i, j) * x.at(i, j); });
    const Plane hyy = hpass([&](std::size_t i, std::size_t j) { return y.at(i, j) * y.at(i, j); });
    const Plane hxy = hpass([&](std::size_t i, std::size_t j) { return x.at(i, j) * y.at(i, j); });

    const double c1 = (opts.k1 * opts.data_range) * (opts.k1 * opts.data_range);
    const double c2 = (opts.k2 * opts.data_range) * (opts.k2 * opts.data_range);
    std::vector<double> local(ow * oh);
    parallel_for(oh, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            for (std::size_t col = 0; col < ow; ++col) {
                double mx = 0, my = 0, exx = 0, eyy = 0, exy = 0;
                for (std::size_t k = 0; k < win; ++k) {
                    mx += g[k] * hx.at(col, r + k);
                    my += g[k] * hy.at(col, r + k);
                    exx += g[k] * hxx.at(col, r + k);
                    eyy += g[k] * hyy.at(col, r + k);
                    exy += g[k] * hxy.at(col, r + k);
                }
                const double vx = exx - mx * mx;
                const double vy = eyy - my * my;
                const double cxy = exy - mx * my;
                const double num = (2.0 * mx * my + c1) * (2.0 * cxy + c2);
                const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
                local[r * ow + col] = num / den;
            }
        }
    });
    return mean(local);
}

std::vector<PatchOrigin> patch_origins(std::size_t width, std::size_t height, std::size_t patch) {
    if (patch == 0) throw InvalidArgument("patch size must be positive");
    std::vector<PatchOrigin> out;
    for (std::size_t y = 0; y + patch <= height; y += patch)
        for (std::size_t x = 0; x + patch <= width; x += patch) out.push_back({x, y});
    return out;
}

namespace {

Plane cut(const Plane& img, const PatchOrigin& o, std::size_t patch) {
    Plane p(patch, patch);
    for (std::size_t y = 0; y < patch; ++y) {
        const double* src = &img.data[(o.y + y) * img.width + o.x];
        std::copy(src, src + patch, &p.data[y * patch]);
    }
    return p;
}

}  // namespace

std::vector<Plane> patchify(const Plane& img, std::size_t patch) {
    std::vector<Plane> out;
    for (const auto& o : patch_origins(img.width, img.height, patch)) out.push_back(cut(img, o, patch));
    return out;
}

double noise_distance(const Plane& x, const Plane& y, const Plane& clean, CfaLayout layout, std::size_t bins,
                      std::size_t min_count) {
    require_same_shape(x, y, "noise_distance");
    require_same_shape(x, clean, "noise_distance");
    if (bins == 0) throw InvalidArgument("noise_distance: bins must be positive");
    const std::size_t cells = 4 * bins;
    std::vector<std::vector<double>> rx(cells), ry(cells);
    for (std::size_t j = 0; j < x.height; ++j) {
        for (std::size_t i = 0; i < x.width; ++i) {
            const double c = clean.at(i, j);
            const auto bin = std::min(bins - 1, static_cast<std::size_t>(std::max(c, 0.0) * static_cast<double>(bins)));
            const std::size_t cell = static_cast<std::size_t>(channel_at(layout, i, j)) * bins + bin;
            rx[cell].push_back(x.at(i, j) - c);
            ry[cell].push_back(y.at(i, j) - c);
        }
    }
    std::vector<double> diffs;
    for (std::size_t cell = 0; cell < cells; ++cell) {
        if (rx[cell].size() < min_count) continue;
        diffs.push_back(std::fabs(sample_variance(rx[cell]) - sample_variance(ry[cell])));
    }
    if (diffs.empty()) throw DataError("noise_distance: no intensity bin holds enough samples");
    return mean(diffs);
}

std::string_view to_string(MetricDirection d) {
    return d == MetricDirection::HigherIsBetter ? "higher_is_better" : "lower_is_better";
}

Metric psnr_metric() {
    return {"psnr", MetricDirection::HigherIsBetter, [](const MetricInput& in) { return psnr(in.test, in.reference); }};
}

Metric ssim_metric() {
    return {"ssim", MetricDirection::HigherIsBetter, [](const MetricInput& in) { return ssim(in.test, in.reference); }};
}

Metric noise_distance_metric() {
    return {"noise_distance", MetricDirection::LowerIsBetter,
            [](const MetricInput& in) { return noise_distance(in.test, in.reference, in.clean, in.layout); }};
}

Metric metric_by_name(std::string_view name) {
    if (name == "psnr") return psnr_metric();
    if (name == "ssim") return ssim_metric();
    if (name == "noise_distance" || name == "noise-distance") return noise_distance_metric();
    throw InvalidArgument("unknown metric '" + std::string(name) + "'");
}

const EvalRow& EvalReport::find(int iso, std::string_view method, std::string_view metric) const {
    for (const auto& r : rows) {
        if (r.iso == iso && r.method == method && r.metric == metric) return r;
    }
    throw InvalidArgument("no report row for ISO " + std::to_string(iso) + ", method '" + std::string(method) +
                          "', metric '" + std::string(metric) + "'");
}

namespace {

nlohmann::json number_or_text(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
    return v;
}

std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["camera_id"] = camera_id;
    j["patch_size"] = patch_size;
    j["patch_count"] = patch_count;
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : rows) {
        rs.push_back({{"iso", r.iso},
                      {"method", r.method},
                      {"metric", r.metric},
                      {"direction", std::string(noisecal::to_string(r.direction))},
                      {"baseline", number_or_text(r.baseline)},
                      {"value", number_or_text(r.value)},
                      {"gap", number_or_text(r.gap)}});
    }
    j["rows"] = rs;
    return j;
}

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out << "iso,method,metric,direction,baseline,value,gap\n";
    for (const auto& r : rows) {
        out << r.iso << ',' << r.method << ',' << r.metric << ',' << noisecal::to_string(r.direction) << ','
            << csv_number(r.baseline) << ',' << csv_number(r.value) << ',' << csv_number(r.gap) << '\n';
    }
    return out.str();
}

EvalReport evaluate(std::span<const EvalScene> scenes, const std::vector<Metric>& metrics, std::size_t patch) {
    if (scenes.empty()) throw InvalidArgument("evaluate: no scenes supplied");
    if (metrics.empty()) throw InvalidArgument("evaluate: no metrics supplied");
    if (patch % 2) throw InvalidArgument("evaluate: patch size must be even to keep CFA phase");
    const auto& methods = scenes.front().synth_by_method;
    if (methods.empty()) throw InvalidArgument("evaluate: no synthesis methods supplied");
    const int iso = scenes.front().real_pair.first.iso;

    struct Prepared {
        Plane clean, r1, r2;
        CfaLayout layout;
        std::map<std::string, Plane> synth;
        std::vector<PatchOrigin> origins;
    };
    std::vector<Prepared> prepared;
    prepared.reserve(scenes.size());
    std::size_t patch_count = 0;
    for (std::size_t si = 0; si < scenes.size(); ++si) {
        const EvalScene& sc = scenes[si];
        const BayerImage& clean = sc.clean;
        const auto& [real1, real2] = sc.real_pair;
        const std::string where = scenes.size() > 1 ? " of scene " + std::to_string(si) : std::string{};
        auto check = [&](const BayerImage& img, const std::string& what) {
            if (!img.same_geometry(clean)) {
                throw DataError("evaluate: " + what + where + " is " + std::to_string(img.width) + "x" +
                                std::to_string(img.height) + " " + std::string(to_string(img.layout)) +
                                " but the clean image is " + std::to_string(clean.width) + "x" +
                                std::to_string(clean.height) + " " + std::string(to_string(clean.layout)));
            }
        };
        check(real1, "real image 1");
        check(real2, "real image 2");
        if (real1.iso != iso || real2.iso != iso) {
            throw DataError("evaluate: real images" + where + " are not all at ISO " + std::to_string(iso));
        }
        if (sc.synth_by_method.size() != methods.size()) {
            throw DataError("evaluate: scene " + std::to_string(si) + " has a different set of methods");
        }
        Prepared p{clean.as_plane(), real1.as_plane(), real2.as_plane(), clean.layout, {}, {}};
        for (const auto& [name, img] : sc.synth_by_method) {
            if (!methods.contains(name)) {
                throw DataError("evaluate: method '" + name + "'" + where + " is missing from the first scene");
            }
            check(img, "synthesis '" + name + "'");
            p.synth.emplace(name, img.as_plane());
        }
        p.origins = patch_origins(clean.width, clean.height, patch);
        if (p.origins.empty()) {
            throw DataError("evaluate: image" + where + " is smaller than one " + std::to_string(patch) + "px patch");
        }
        patch_count += p.origins.size();
        prepared.push_back(std::move(p));
    }

    EvalReport report;
    const BayerImage& first_real = scenes.front().real_pair.first;
    report.camera_id = first_real.camera_id.empty() ? scenes.front().clean.camera_id : first_real.camera_id;
    report.patch_size = patch;
    report.patch_count = patch_count;

    for (const Metric& metric : metrics) {
        std::vector<double> base;
        std::map<std::string, std::vector<double>> per_method;
        base.reserve(patch_count);
        for (const Prepared& p : prepared) {
            for (const PatchOrigin& o : p.origins) {
                const Plane c = cut(p.clean, o, patch);
                const Plane a = cut(p.r1, o, patch);
                const Plane b = cut(p.r2, o, patch);
                base.push_back(metric.fn(MetricInput{b, a, c, p.layout}));
                for (const auto& [name, plane] : p.synth) {
                    const Plane s = cut(plane, o, patch);
                    per_method[name].push_back(metric.fn(MetricInput{s, a, c, p.layout}));
                }
            }
        }
        const double baseline = order_free_mean(base);
        for (const auto& [name, values] : per_method) {
            EvalRow row;
            row.iso = iso;
            row.method = name;
            row.metric = metric.name;
            row.direction = metric.direction;
            row.baseline = baseline;
            row.value = order_free_mean(values);
            if (std::isinf(row.value) && std::isinf(row.baseline) && row.value == row.baseline) {
                row.gap = 0.0;
            } else {
                row.gap = std::fabs(row.value - row.baseline);
            }
            report.rows.push_back(row);
        }
    }
    return report;
}

EvalReport evaluate(const BayerImage& clean, const std::pair<BayerImage, BayerImage>& real_pair,
                    const std::map<std::string, BayerImage>& synth_by_method, const std::vector<Metric>& metrics,
                    std::size_t patch) {
    const EvalScene scene{clean, real_pair, synth_by_method};
    return evaluate(std::span<const EvalScene>(&scene, 1), metrics, patch);
}

void merge_into(EvalReport& into, const EvalReport& other) {
    if (into.rows.empty()) {
        into.camera_id = other.camera_id;
        into.patch_size = other.patch_size;
    }
    into.patch_count = other.patch_count;
    into.rows.insert(into.rows.end(), other.rows.begin(), other.rows.end());
}

}  // namespace noisecal
