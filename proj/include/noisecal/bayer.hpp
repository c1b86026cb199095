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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace noisecal {

// 2x2 color filter arrangement, named by reading the cell row-major.
enum class CfaLayout { RGGB, BGGR, GRBG, GBRG };

// G1 is the green in the top row of the cell, G2 the green in the bottom row.
enum class Channel { R = 0, G1 = 1, G2 = 2, B = 3 };

inline constexpr std::array<Channel, 4> kChannels = {Channel::R, Channel::G1, Channel::G2, Channel::B};
inline constexpr std::array<CfaLayout, 4> kLayouts = {CfaLayout::RGGB, CfaLayout::BGGR, CfaLayout::GRBG,
                                                      CfaLayout::GBRG};

std::string_view to_string(CfaLayout layout);
std::string_view to_string(Channel channel);
CfaLayout parse_layout(std::string_view text);
Channel parse_channel(std::string_view text);

struct CellOffset {
    std::size_t dx;
    std::size_t dy;
};

CellOffset channel_offset(CfaLayout layout, Channel channel);
Channel channel_at(CfaLayout layout, std::size_t x, std::size_t y);

struct Plane {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> data;

    Plane() = default;
    Plane(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), data(w * h, fill) {}

    double& at(std::size_t x, std::size_t y) { return data[y * width + x]; }
    double at(std::size_t x, std::size_t y) const { return data[y * width + x]; }
    bool same_shape(const Plane& other) const { return width == other.width && height == other.height; }
};

// Half-resolution plane holding one CFA position.
struct ChannelPlane : Plane {
    Channel channel = Channel::R;

    ChannelPlane() = default;
    ChannelPlane(Channel ch, std::size_t w, std::size_t h, double fill = 0.0) : Plane(w, h, fill), channel(ch) {}
};

// Single-plane CFA mosaic, samples normalized so black maps to 0 and white to 1.
struct BayerImage {
    std::size_t width = 0;
    std::size_t height = 0;
    CfaLayout layout = CfaLayout::RGGB;
    std::vector<double> data;
    int black_level = 0;
    int white_level = 65535;
    int iso = 100;
    double exposure_s = 0.0;
    std::string camera_id;

    BayerImage() = default;
    BayerImage(std::size_t w, std::size_t h, CfaLayout l, double fill = 0.0)
        : width(w), height(h), layout(l), data(w * h, fill) {}

    double& at(std::size_t x, std::size_t y) { return data[y * width + x]; }
    double at(std::size_t x, std::size_t y) const { return data[y * width + x]; }

    // Throws DataError on odd dimensions, a data size mismatch or black >= white.
    void validate() const;
    bool is_normalized() const;
    bool same_geometry(const BayerImage& other) const {
        return width == other.width && height == other.height && layout == other.layout;
    }
    Plane as_plane() const {
        Plane p;
        p.width = width;
        p.height = height;
        p.data = data;
        return p;
    }
};

// Copy of `like` with all metadata kept and samples replaced by `fill`.
BayerImage blank_like(const BayerImage& like, double fill = 0.0);

ChannelPlane extract_channel(const BayerImage& img, Channel ch);
void insert_channel(BayerImage& img, const ChannelPlane& plane);
BayerImage interleave(const std::array<ChannelPlane, 4>& planes, const BayerImage& like);

double normalize_sample(std::int64_t dn, int black, int white);
// clamp((dn - black) / (white - black), 0, 1). Throws InvalidArgument if black >= white.
std::vector<double> normalize(std::span<const std::uint16_t> raw_dn, int black, int white);

// Axis-aligned region in mosaic pixels. Offsets and extents are even so the
// CFA phase of the crop matches the source.
struct CropRegion {
    std::size_t x = 0;
    std::size_t y = 0;
    std::size_t width = 0;
    std::size_t height = 0;

    bool operator==(const CropRegion&) const = default;
};

BayerImage crop(const BayerImage& img, const CropRegion& region);

// Finds the target-sized window inside the central `search_fraction` of the
// image whose per-channel variance, averaged over the four channels, is
// smallest. Candidates step one CFA cell; ties go to the smallest (y, x).
CropRegion select_crop(const BayerImage& img, std::size_t target_width, std::size_t target_height,
                       double search_fraction = 0.5);

// Mean of the four per-channel population variances inside `region`.
double pooled_channel_variance(const BayerImage& img, const CropRegion& region);

struct Tile {
    std::size_t x = 0;  // tile origin on the channel plane
    std::size_t y = 0;
    double mean = 0.0;
    std::vector<double> data;  // tile_px * tile_px samples, row-major
};

inline constexpr std::size_t kDefaultTilePx = 32;
inline constexpr std::size_t kMinTilePx = 8;

// Non-overlapping square tiles in row-major order; partial edge tiles are dropped.
std::vector<Tile> tile(const Plane& plane, std::size_t tile_px = kDefaultTilePx);

}  // namespace noisecal
