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

#include "noisecal/bayer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "noisecal/error.hpp"
#include "noisecal/numeric.hpp"

namespace noisecal {

std::string_view to_string(CfaLayout layout) {
    switch (layout) {
        case CfaLayout::RGGB: return "RGGB";
        case CfaLayout::BGGR: return "BGGR";
        case CfaLayout::GRBG: return "GRBG";
        case CfaLayout::GBRG: return "GBRG";
    }
    return "?";
}

std::string_view to_string(Channel channel) {
    switch (channel) {
        case Channel::R: return "R";
        case Channel::G1: return "G1";
        case Channel::G2: return "G2";
        case Channel::B: return "B";
    }
    return "?";
}

CfaLayout parse_layout(std::string_view text) {
    for (CfaLayout l : kLayouts) {
        if (to_string(l) == text) return l;
    }
    throw DataError("unknown CFA layout '" + std::string(text) + "'");
}

Channel parse_channel(std::string_view text) {
    for (Channel c : kChannels) {
        if (to_string(c) == text) return c;
    }
    throw DataError("unknown channel '" + std::string(text) + "'");
}

CellOffset channel_offset(CfaLayout layout, Channel channel) {
    // {R, G1, G2, B} positions per layout
    static constexpr CellOffset kTable[4][4] = {
        {{0, 0}, {1, 0}, {0, 1}, {1, 1}},  // RGGB
        {{1, 1}, {1, 0}, {0, 1}, {0, 0}},  // BGGR
        {{1, 0}, {0, 0}, {1, 1}, {0, 1}},  // GRBG
        {{0, 1}, {0, 0}, {1, 1}, {1, 0}},  // GBRG
    };
    return kTable[static_cast<int>(layout)][static_cast<int>(channel)];
}

Channel channel_at(CfaLayout layout, std::size_t x, std::size_t y) {
    const std::size_t dx = x & 1, dy = y & 1;
    for (Channel c : kChannels) {
        const auto off = channel_offset(layout, c);
        if (off.dx == dx && off.dy == dy) return c;
    }
    return Channel::R;  // unreachable
}

void BayerImage::validate() const {
    if (width == 0 || height == 0 || width % 2 != 0 || height % 2 != 0) {
        throw DataError("Bayer image dimensions must be positive and even, got " + std::to_string(width) + "x" +
                        std::to_string(height));
    }
    if (data.size() != width * height) {
        throw DataError("Bayer image holds " + std::to_string(data.size()) + " samples, expected " +
                        std::to_string(width * height));
    }
    if (black_level >= white_level) {
        throw DataError("black level " + std::to_string(black_level) + " must be below white level " +
                        std::to_string(white_level));
    }
}

bool BayerImage::is_normalized() const {
    return std::all_of(data.begin(), data.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

BayerImage blank_like(const BayerImage& like, double fill) {
    BayerImage out;
    out.width = like.width;
    out.height = like.height;
    out.layout = like.layout;
    out.data.assign(like.data.size(), fill);
    out.black_level = like.black_level;
    out.white_level = like.white_level;
    out.iso = like.iso;
    out.exposure_s = like.exposure_s;
    out.camera_id = like.camera_id;
    return out;
}

ChannelPlane extract_channel(const BayerImage& img, Channel ch) {
    const auto off = channel_offset(img.layout, ch);
    ChannelPlane plane(ch, img.width / 2, img.height / 2);
    for (std::size_t y = 0; y < plane.height; ++y) {
        const double* row = &img.data[(2 * y + off.dy) * img.width];
        for (std::size_t x = 0; x < plane.width; ++x) plane.at(x, y) = row[2 * x + off.dx];
    }
    return plane;
}

void insert_channel(BayerImage& img, const ChannelPlane& plane) {
    if (plane.width != img.width / 2 || plane.height != img.height / 2) {
        throw InvalidArgument("channel plane does not match the mosaic's half resolution");
    }
    const auto off = channel_offset(img.layout, plane.channel);
    for (std::size_t y = 0; y < plane.height; ++y) {
        double* row = &img.data[(2 * y + off.dy) * img.width];
        for (std::size_t x = 0; x < plane.width; ++x) row[2 * x + off.dx] = plane.at(x, y);
    }
}

BayerImage interleave(const std::array<ChannelPlane, 4>& planes, const BayerImage& like) {
    BayerImage out = blank_like(like);
    for (const auto& p : planes) insert_channel(out, p);
    return out;
}

double normalize_sample(std::int64_t dn, int black, int white) {
    const double v = static_cast<double>(dn - black) / static_cast<double>(white - black);
    return std::clamp(v, 0.0, 1.0);
}

std::vector<double> normalize(std::span<const std::uint16_t> raw_dn, int black, int white) {
    if (black >= white) {
        throw InvalidArgument("normalize: black level " + std::to_string(black) + " must be below white level " +
                              std::to_string(white));
    }
    std::vector<double> out(raw_dn.size());
    for (std::size_t i = 0; i < raw_dn.size(); ++i) out[i] = normalize_sample(raw_dn[i], black, white);
    return out;
}

BayerImage crop(const BayerImage& img, const CropRegion& r) {
    if (r.x % 2 || r.y % 2 || r.width % 2 || r.height % 2) {
        throw InvalidArgument("crop region offsets and extents must be even");
    }
    if (r.width == 0 || r.height == 0 || r.x + r.width > img.width || r.y + r.height > img.height) {
        throw InvalidArgument("crop region exceeds image bounds");
    }
    BayerImage out = blank_like(img);
    out.width = r.width;
    out.height = r.height;
    out.data.resize(r.width * r.height);
    for (std::size_t y = 0; y < r.height; ++y) {
        const double* src = &img.data[(r.y + y) * img.width + r.x];
        std::copy(src, src + r.width, &out.data[y * r.width]);
    }
    return out;
}

namespace {

// Summed-area tables of (v - ref) and (v - ref)^2 over one channel plane.
// Subtracting a reference sample keeps flat regions exactly zero.
struct IntegralImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> sum;
    std::vector<double> sum_sq;

    explicit IntegralImage(const Plane& p) : width(p.width), height(p.height) {
        const double ref = p.data.empty() ? 0.0 : p.data[0];
        sum.assign((width + 1) * (height + 1), 0.0);
        sum_sq.assign(sum.size(), 0.0);
        for (std::size_t y = 0; y < height; ++y) {
            double row = 0.0, row_sq = 0.0;
            for (std::size_t x = 0; x < width; ++x) {
                const double d = p.at(x, y) - ref;
                row += d;
                row_sq += d * d;
                sum[(y + 1) * (width + 1) + x + 1] = sum[y * (width + 1) + x + 1] + row;
                sum_sq[(y + 1) * (width + 1) + x + 1] = sum_sq[y * (width + 1) + x + 1] + row_sq;
            }
        }
    }

    double box(const std::vector<double>& t, std::size_t x, std::size_t y, std::size_t w, std::size_t h) const {
        const std::size_t s = width + 1;
        return t[(y + h) * s + x + w] - t[y * s + x + w] - t[(y + h) * s + x] + t[y * s + x];
    }

    double variance(std::size_t x, std::size_t y, std::size_t w, std::size_t h) const {
        const double n = static_cast<double>(w * h);
        const double m = box(sum, x, y, w, h) / n;
        const double v = box(sum_sq, x, y, w, h) / n - m * m;
        return std::max(v, 0.0);
    }
};

}  // namespace

double pooled_channel_variance(const BayerImage& img, const CropRegion& region) {
    const BayerImage c = crop(img, region);
    double total = 0.0;
    for (Channel ch : kChannels) {
        const ChannelPlane p = extract_channel(c, ch);
        const double m = mean(p.data);
        std::vector<double> sq(p.data.size());
        for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = (p.data[i] - m) * (p.data[i] - m);
        total += mean(sq);
    }
    return total / 4.0;
}

CropRegion select_crop(const BayerImage& img, std::size_t target_width, std::size_t target_height,
                       double search_fraction) {
    img.validate();
    if (!(search_fraction > 0.0 && search_fraction <= 1.0)) {
        throw InvalidArgument("search fraction must lie in (0, 1]");
    }
    if (target_width == 0 || target_height == 0 || target_width % 2 || target_height % 2) {
        throw InvalidArgument("crop target must be positive and even");
    }
    auto even_floor = [](double v) { return static_cast<std::size_t>(v / 2.0) * 2; };
    const std::size_t search_w = even_floor(static_cast<double>(img.width) * search_fraction);
    const std::size_t search_h = even_floor(static_cast<double>(img.height) * search_fraction);
    if (target_width > search_w || target_height > search_h) {
        throw InvalidArgument("crop target " + std::to_string(target_width) + "x" + std::to_string(target_height) +
                              " is larger than the search window " + std::to_string(search_w) + "x" +
                              std::to_string(search_h));
    }
    const std::size_t x0 = even_floor(static_cast<double>(img.width - search_w) / 2.0);
    const std::size_t y0 = even_floor(static_cast<double>(img.height - search_h) / 2.0);

    std::vector<IntegralImage> tables;
    tables.reserve(4);
    for (Channel ch : kChannels) tables.emplace_back(extract_channel(img, ch));

    const std::size_t cw = target_width / 2, chh = target_height / 2;
    CropRegion best{x0, y0, target_width, target_height};
    double best_var = std::numeric_limits<double>::infinity();
    for (std::size_t y = y0; y + target_height <= y0 + search_h; y += 2) {
        for (std::size_t x = x0; x + target_width <= x0 + search_w; x += 2) {
            double v = 0.0;
            for (const auto& t : tables) v += t.variance(x / 2, y / 2, cw, chh);
            if (v < best_var) {
                best_var = v;
                best = CropRegion{x, y, target_width, target_height};
            }
        }
    }
    return best;
}

std::vector<Tile> tile(const Plane& plane, std::size_t tile_px) {
    if (tile_px < kMinTilePx) {
        throw InvalidArgument("tile size " + std::to_string(tile_px) + " is below the minimum of " +
                              std::to_string(kMinTilePx));
    }
    if (tile_px > plane.width || tile_px > plane.height) {
        throw InvalidArgument("tile size " + std::to_string(tile_px) + " exceeds the " + std::to_string(plane.width) +
                              "x" + std::to_string(plane.height) + " plane");
    }
    const std::size_t nx = plane.width / tile_px, ny = plane.height / tile_px;
    std::vector<Tile> tiles;
    tiles.reserve(nx * ny);
    for (std::size_t ty = 0; ty < ny; ++ty) {
        for (std::size_t tx = 0; tx < nx; ++tx) {
            Tile t;
            t.x = tx * tile_px;
            t.y = ty * tile_px;
            t.data.resize(tile_px * tile_px);
            for (std::size_t y = 0; y < tile_px; ++y) {
                const double* src = &plane.data[(t.y + y) * plane.width + t.x];
                std::copy(src, src + tile_px, &t.data[y * tile_px]);
            }
            t.mean = mean(t.data);
            tiles.push_back(std::move(t));
        }
    }
    return tiles;
}

}  // namespace noisecal
