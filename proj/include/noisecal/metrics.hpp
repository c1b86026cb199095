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

#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "noisecal/bayer.hpp"

namespace noisecal {

// PSNR of identical inputs.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

// 10 log10(peak^2 / MSE); kPsnrIdentical when MSE is zero.
double psnr(const Plane& x, const Plane& y, double peak = 1.0);

struct SsimOptions {
    std::size_t window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double data_range = 1.0;
};

// Mean SSIM over all fully contained Gaussian windows.
double ssim(const Plane& x, const Plane& y, const SsimOptions& opts = {});

inline constexpr std::size_t kDefaultPatchPx = 256;

struct PatchOrigin {
    std::size_t x = 0;
    std::size_t y = 0;
};

std::vector<PatchOrigin> patch_origins(std::size_t width, std::size_t height, std::size_t patch = kDefaultPatchPx);
// Non-overlapping square patches, row-major, remainders dropped.
std::vector<Plane> patchify(const Plane& img, std::size_t patch = kDefaultPatchPx);

// Mean absolute difference between the residual-variance curves of x and y,
// where a curve is the variance of (image - clean) per CFA channel and per
// clean-intensity bin. Cells with fewer than `min_count` samples in either
// image are skipped.
double noise_distance(const Plane& x, const Plane& y, const Plane& clean, CfaLayout layout, std::size_t bins = 8,
                      std::size_t min_count = 32);

enum class MetricDirection { HigherIsBetter, LowerIsBetter };
std::string_view to_string(MetricDirection d);

struct MetricInput {
    const Plane& test;
    const Plane& reference;
    const Plane& clean;
    CfaLayout layout;
};

// Pluggable comparison. Any scalar function of a patch pair can be slotted in;
// `direction` tells readers how to interpret the raw values.
struct Metric {
    std::string name;
    MetricDirection direction = MetricDirection::LowerIsBetter;
    std::function<double(const MetricInput&)> fn;
};

Metric psnr_metric();
Metric ssim_metric();
Metric noise_distance_metric();
Metric metric_by_name(std::string_view name);

struct EvalRow {
    int iso = 0;
    std::string method;
    std::string metric;
    MetricDirection direction = MetricDirection::LowerIsBetter;
    double baseline = 0.0;  // metric(real_1, real_2), patch mean
    double value = 0.0;     // metric(synth, real_1), patch mean
    double gap = 0.0;       // |value - baseline|
};

struct EvalReport {
    std::string camera_id;
    std::size_t patch_size = kDefaultPatchPx;
    std::size_t patch_count = 0;
    std::vector<EvalRow> rows;

    const EvalRow& find(int iso, std::string_view method, std::string_view metric) const;
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

// Baseline-gap protocol at one ISO: per patch, metric(synth, real_1) for each
// method and metric(real_1, real_2) as the baseline; patch values are averaged
// and the report keeps the absolute gap.
EvalReport evaluate(const BayerImage& clean, const std::pair<BayerImage, BayerImage>& real_pair,
                    const std::map<std::string, BayerImage>& synth_by_method, const std::vector<Metric>& metrics,
                    std::size_t patch = kDefaultPatchPx);

struct EvalScene {
    BayerImage clean;
    std::pair<BayerImage, BayerImage> real_pair;
    std::map<std::string, BayerImage> synth_by_method;
};

// Same protocol with patches pooled over several scenes captured at one ISO.
EvalReport evaluate(std::span<const EvalScene> scenes, const std::vector<Metric>& metrics,
                    std::size_t patch = kDefaultPatchPx);

// Appends the rows of `other`; patch bookkeeping is taken from `other`.
void merge_into(EvalReport& into, const EvalReport& other);

}  // namespace noisecal
