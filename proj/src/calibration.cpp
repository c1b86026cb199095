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

#include "noisecal/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "noisecal/atomic_file.hpp"
#include "noisecal/error.hpp"
#include "noisecal/numeric.hpp"

namespace noisecal {

std::size_t RobustFit::outlier_count() const {
    return static_cast<std::size_t>(std::count(inlier.begin(), inlier.end(), false));
}

void CalibrationConfig::validate() const {
    if (!(dark_mean_floor >= 0.0 && dark_mean_floor < bright_mean_ceiling && bright_mean_ceiling <= 1.0)) {
        throw InvalidArgument("calibration thresholds must satisfy 0 <= floor < ceiling <= 1");
    }
    if (tile_px < kMinTilePx) throw InvalidArgument("tile size below minimum");
    if (!(huber_delta > 0.0) || !(outlier_k > 0.0)) {
        throw InvalidArgument("huber delta and outlier cut must be positive");
    }
    if (max_iterations < 1) throw InvalidArgument("max_iterations must be at least 1");
}

bool passes_clip_thresholds(double channel_mean, const CalibrationConfig& cfg) {
    return channel_mean > cfg.dark_mean_floor && channel_mean < cfg.bright_mean_ceiling;
}

PtcPoint pair_variance(std::span<const double> tile_a, std::span<const double> tile_b) {
    if (tile_a.size() != tile_b.size()) {
        throw InvalidArgument("pair_variance: tile sizes differ (" + std::to_string(tile_a.size()) + " vs " +
                              std::to_string(tile_b.size()) + ")");
    }
    if (tile_a.size() < 2) throw InvalidArgument("pair_variance: tiles need at least two samples");
    std::vector<double> diff(tile_a.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = tile_a[i] - tile_b[i];
    PtcPoint p;
    p.mean = (mean(tile_a) + mean(tile_b)) / 2.0;
    p.variance = sample_variance(diff) / 2.0;
    return p;
}

std::array<PtcSeries, 4> collect_ptc(std::span<const FlatPair> pairs, const CalibrationConfig& cfg,
                                     const CropRegion& region) {
    cfg.validate();
    if (pairs.empty()) throw DataError("insufficient unclipped data: no flat-field pairs supplied");
    const BayerImage& ref = pairs.front().first;
    for (const auto& pair : pairs) {
        for (const BayerImage* img : {&pair.first, &pair.second}) {
            img->validate();
            if (!img->same_geometry(ref)) throw DataError("flat-field captures differ in size or CFA layout");
            if (img->iso != ref.iso) throw DataError("flat-field captures mix ISO values");
            if (img->camera_id != ref.camera_id) throw DataError("flat-field captures mix camera ids");
        }
        if (pair.first.exposure_s != pair.second.exposure_s) {
            throw DataError("flat-field pair members have different exposure times");
        }
    }

    std::array<PtcSeries, 4> out;
    std::array<std::set<double>, 4> exposures;
    for (Channel ch : kChannels) {
        auto& s = out[static_cast<int>(ch)];
        s.camera_id = ref.camera_id;
        s.iso = ref.iso;
        s.channel = ch;
    }
    for (const auto& pair : pairs) {
        const BayerImage a = crop(pair.first, region);
        const BayerImage b = crop(pair.second, region);
        for (Channel ch : kChannels) {
            const ChannelPlane pa = extract_channel(a, ch);
            const ChannelPlane pb = extract_channel(b, ch);
            const double pair_mean = (mean(pa.data) + mean(pb.data)) / 2.0;
            if (!passes_clip_thresholds(pair_mean, cfg)) continue;
            const auto ta = tile(pa, cfg.tile_px);
            const auto tb = tile(pb, cfg.tile_px);
            auto& series = out[static_cast<int>(ch)];
            for (std::size_t i = 0; i < ta.size(); ++i) series.points.push_back(pair_variance(ta[i].data, tb[i].data));
            exposures[static_cast<int>(ch)].insert(pair.first.exposure_s);
        }
    }
    for (Channel ch : kChannels) {
        auto& s = out[static_cast<int>(ch)];
        s.exposures.assign(exposures[static_cast<int>(ch)].begin(), exposures[static_cast<int>(ch)].end());
        if (s.points.empty()) {
            throw DataError("insufficient unclipped data: every pair was too dark or too bright on channel " +
                            std::string(to_string(ch)) + " at ISO " + std::to_string(s.iso));
        }
    }
    return out;
}

namespace {

struct Line {
    double slope = 0.0;
    double intercept = 0.0;
};

// Weighted least squares of y on x in centered form. Throws when the
// weighted x spread vanishes.
Line weighted_line(std::span<const PtcPoint> pts, std::span<const double> w) {
    const std::size_t n = pts.size();
    std::vector<double> tmp(n);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i];
    const double sw = pairwise_sum(tmp);
    if (!(sw > 0.0)) throw DataError("robust fit: no points carry weight");
    for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] * pts[i].mean;
    const double xm = pairwise_sum(tmp) / sw;
    for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] * pts[i].variance;
    const double ym = pairwise_sum(tmp) / sw;
    for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] * (pts[i].mean - xm) * (pts[i].mean - xm);
    const double sxx = pairwise_sum(tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] * (pts[i].mean - xm) * (pts[i].variance - ym);
    const double sxy = pairwise_sum(tmp);
    if (!(sxx > 0.0) || sxx <= 1e-300) {
        throw DataError("robust fit is rank deficient: all points share the same mean signal");
    }
    Line l;
    l.slope = sxy / sxx;
    l.intercept = ym - l.slope * xm;
    return l;
}

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return (lower + upper) / 2.0;
}

// Normalized MAD of the residuals, floored relative to the data magnitude so
// an exact line does not produce a zero scale.
double residual_scale(std::span<const double> r, double magnitude) {
    std::vector<double> v(r.begin(), r.end());
    const double med = median_of(v);
    for (auto& x : v) x = std::fabs(x - med);
    const double mad = 1.482602218505602 * median_of(std::move(v));
    return std::max({mad, 1e-9 * magnitude, std::numeric_limits<double>::min()});
}

}  // namespace

RobustFit robust_fit(std::span<const PtcPoint> points, const CalibrationConfig& cfg) {
    cfg.validate();
    const std::size_t n = points.size();
    if (n < cfg.min_points) {
        throw DataError("robust fit needs at least " + std::to_string(cfg.min_points) + " points, got " +
                        std::to_string(n));
    }
    {
        std::vector<double> means;
        means.reserve(n);
        for (const auto& p : points) means.push_back(p.mean);
        std::sort(means.begin(), means.end());
        const auto distinct = std::unique(means.begin(), means.end()) - means.begin();
        if (distinct < 2) throw DataError("robust fit is rank deficient: all points share the same mean signal");
        if (static_cast<std::size_t>(distinct) < 4) {
            throw DataError("robust fit needs at least 4 distinct mean levels, got " + std::to_string(distinct));
        }
    }

    std::vector<double> abs_y(n);
    for (std::size_t i = 0; i < n; ++i) abs_y[i] = std::fabs(points[i].variance);
    const double magnitude = mean(abs_y);

    std::vector<double> w(n, 1.0);
    std::vector<double> r(n);
    Line line = weighted_line(points, w);
    auto residuals = [&](const Line& l) {
        for (std::size_t i = 0; i < n; ++i) r[i] = points[i].variance - (l.slope * points[i].mean + l.intercept);
    };

    int iter = 0;
    for (; iter < cfg.max_iterations; ++iter) {
        residuals(line);
        const double s = residual_scale(r, magnitude);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = std::fabs(r[i]) / s;
            w[i] = u <= cfg.huber_delta ? 1.0 : cfg.huber_delta / u;
        }
        const Line next = weighted_line(points, w);
        const double da = std::fabs(next.slope - line.slope);
        const double db = std::fabs(next.intercept - line.intercept);
        const double scale_b = std::max(std::fabs(next.intercept), std::fabs(next.slope) * std::fabs(magnitude));
        line = next;
        if (da <= cfg.tolerance * std::fabs(next.slope) && db <= cfg.tolerance * scale_b) {
            ++iter;
            break;
        }
    }

    residuals(line);
    const double s = residual_scale(r, magnitude);
    RobustFit fit;
    fit.huber_iterations = iter;
    fit.inlier.resize(n);
    std::vector<PtcPoint> kept;
    kept.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        fit.inlier[i] = std::fabs(r[i]) / s <= cfg.outlier_k;
        if (fit.inlier[i]) kept.push_back(points[i]);
    }
    if (kept.size() < 2) throw DataError("robust fit: fewer than two inliers remain after outlier removal");

    const std::vector<double> ones(kept.size(), 1.0);
    const Line ols = weighted_line(kept, ones);
    fit.a = ols.slope;
    fit.b = ols.intercept;

    std::vector<double> ys(kept.size()), tmp(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) ys[i] = kept[i].variance;
    const double ym = mean(ys);
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const double e = kept[i].variance - (fit.a * kept[i].mean + fit.b);
        tmp[i] = e * e;
    }
    const double ss_res = pairwise_sum(tmp);
    for (std::size_t i = 0; i < kept.size(); ++i) tmp[i] = (ys[i] - ym) * (ys[i] - ym);
    const double ss_tot = pairwise_sum(tmp);
    fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
    return fit;
}

std::array<PtcSeries, 4> calibrate_iso(std::span<const FlatPair> pairs, const CalibrationConfig& cfg,
                                       const CropRegion& region) {
    auto series = collect_ptc(pairs, cfg, region);
    for (auto& s : series) {
        if (s.exposures.size() < cfg.min_exposure_levels) {
            throw DataError("insufficient unclipped data: channel " + std::string(to_string(s.channel)) + " at ISO " +
                            std::to_string(s.iso) + " has " + std::to_string(s.exposures.size()) +
                            " unclipped exposure levels; at least " + std::to_string(cfg.min_exposure_levels) +
                            " are required");
        }
        RobustFit fit = robust_fit(s.points, cfg);
        if (!(fit.a > 0.0) || fit.b < 0.0) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "fit rejected for channel " << to_string(s.channel) << " at ISO " << s.iso << ": a=" << fit.a
                << " b=" << fit.b << " (need a > 0 and b >= 0)";
            throw DataError(msg.str());
        }
        s.fit = std::move(fit);
    }
    return series;
}

void write_ptc_csv(const std::filesystem::path& path, const PtcSeries& series) {
    std::ostringstream out;
    out.precision(17);
    out << "mean,variance,inlier\n";
    for (std::size_t i = 0; i < series.points.size(); ++i) {
        const bool inl = series.fit ? static_cast<bool>(series.fit->inlier[i]) : true;
        out << series.points[i].mean << ',' << series.points[i].variance << ',' << (inl ? 1 : 0) << '\n';
    }
    write_file_atomic(path, out.str());
}

}  // namespace noisecal
