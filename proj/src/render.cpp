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

#include "noisecal/render.hpp"

#include <algorithm>
#include <cmath>

#include "noisecal/atomic_file.hpp"
#include "noisecal/error.hpp"

namespace noisecal {

namespace {

int color_index(Channel ch) {
    switch (ch) {
        case Channel::R: return 0;
        case Channel::G1:
        case Channel::G2: return 1;
        case Channel::B: return 2;
    }
    return 1;
}

inline std::size_t replicate(std::ptrdiff_t i, std::size_t n) {
    if (i < 0) return 0;
    if (static_cast<std::size_t>(i) >= n) return n - 1;
    return static_cast<std::size_t>(i);
}

}  // namespace

RgbImage demosaic_bilinear(const BayerImage& img) {
    img.validate();
    RgbImage out;
    out.width = img.width;
    out.height = img.height;
    for (auto& p : out.planes) p = Plane(img.width, img.height);
    for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t x = 0; x < img.width; ++x) {
            const int own = color_index(channel_at(img.layout, x, y));
            std::array<double, 3> sum{};
            std::array<int, 3> count{};
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const std::size_t sx = replicate(static_cast<std::ptrdiff_t>(x) + dx, img.width);
                    const std::size_t sy = replicate(static_cast<std::ptrdiff_t>(y) + dy, img.height);
                    const int c = color_index(channel_at(img.layout, sx, sy));
                    sum[c] += img.at(sx, sy);
                    ++count[c];
                }
            }
            for (int c = 0; c < 3; ++c) {
                double v = 0.0;
                if (c == own) {
                    v = img.at(x, y);
                } else if (count[c] > 0) {
                    v = sum[c] / count[c];
                }
                out.planes[c].at(x, y) = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return out;
}

std::uint16_t to_u16(double v) {
    return static_cast<std::uint16_t>(std::nearbyint(std::clamp(v, 0.0, 1.0) * 65535.0));
}

namespace {

class LeWriter {
   public:
    std::vector<std::uint8_t> bytes;

    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u16(std::uint16_t v) {
        u8(static_cast<std::uint8_t>(v & 0xff));
        u8(static_cast<std::uint8_t>(v >> 8));
    }
    void u32(std::uint32_t v) {
        u16(static_cast<std::uint16_t>(v & 0xffff));
        u16(static_cast<std::uint16_t>(v >> 16));
    }
    void put_u16(std::size_t at, std::uint16_t v) {
        bytes[at] = static_cast<std::uint8_t>(v & 0xff);
        bytes[at + 1] = static_cast<std::uint8_t>(v >> 8);
    }
    void put_u32(std::size_t at, std::uint32_t v) {
        put_u16(at, static_cast<std::uint16_t>(v & 0xffff));
        put_u16(at + 2, static_cast<std::uint16_t>(v >> 16));
    }
};

enum : std::uint16_t { kShort = 3, kLong = 4, kRational = 5, kAscii = 2 };

struct Entry {
    std::uint16_t tag;
    std::uint16_t type;
    std::uint32_t count;
    std::uint32_t value;              // inline value, or offset when `external` is non-empty
    std::vector<std::uint8_t> external;
};

std::vector<std::uint8_t> encode_tiff(std::size_t width, std::size_t height, int spp,
                                      const std::vector<std::uint16_t>& samples, const std::string& description) {
    const std::uint32_t strip_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    std::vector<Entry> entries;
    auto shorts = [](std::initializer_list<std::uint16_t> v) {
        std::vector<std::uint8_t> b;
        for (auto s : v) {
            b.push_back(static_cast<std::uint8_t>(s & 0xff));
            b.push_back(static_cast<std::uint8_t>(s >> 8));
        }
        return b;
    };
    const std::vector<std::uint8_t> rational_72 = {72, 0, 0, 0, 1, 0, 0, 0};

    entries.push_back({256, kLong, 1, static_cast<std::uint32_t>(width), {}});
    entries.push_back({257, kLong, 1, static_cast<std::uint32_t>(height), {}});
    if (spp == 3) {
        entries.push_back({258, kShort, 3, 0, shorts({16, 16, 16})});
    } else {
        entries.push_back({258, kShort, 1, 16, {}});
    }
    entries.push_back({259, kShort, 1, 1, {}});
    entries.push_back({262, kShort, 1, static_cast<std::uint32_t>(spp == 3 ? 2 : 1), {}});
    if (!description.empty()) {
        std::vector<std::uint8_t> text(description.begin(), description.end());
        text.push_back(0);
        const auto n = static_cast<std::uint32_t>(text.size());
        if (n <= 4) {
            std::uint32_t packed = 0;
            for (std::uint32_t i = 0; i < n; ++i) packed |= static_cast<std::uint32_t>(text[i]) << (8 * i);
            entries.push_back({270, kAscii, n, packed, {}});
        } else {
            entries.push_back({270, kAscii, n, 0, text});
        }
    }
    entries.push_back({273, kLong, 1, 0, {}});  // strip offset patched below
    entries.push_back({277, kShort, 1, static_cast<std::uint32_t>(spp), {}});
    entries.push_back({278, kLong, 1, static_cast<std::uint32_t>(height), {}});
    entries.push_back({279, kLong, 1, strip_bytes, {}});
    entries.push_back({282, kRational, 1, 0, rational_72});
    entries.push_back({283, kRational, 1, 0, rational_72});
    entries.push_back({284, kShort, 1, 1, {}});
    entries.push_back({296, kShort, 1, 1, {}});

    const std::size_t ifd_offset = 8;
    const std::size_t ifd_size = 2 + entries.size() * 12 + 4;
    std::size_t cursor = ifd_offset + ifd_size;
    for (auto& e : entries) {
        if (e.external.empty()) continue;
        e.value = static_cast<std::uint32_t>(cursor);
        cursor += e.external.size();
        if (cursor % 2) ++cursor;  // keep the next value word-aligned
    }
    const std::size_t strip_offset = cursor;
    for (auto& e : entries) {
        if (e.tag == 273) e.value = static_cast<std::uint32_t>(strip_offset);
    }

    LeWriter w;
    w.u8('I');
    w.u8('I');
    w.u16(42);
    w.u32(static_cast<std::uint32_t>(ifd_offset));
    w.u16(static_cast<std::uint16_t>(entries.size()));
    for (const auto& e : entries) {
        w.u16(e.tag);
        w.u16(e.type);
        w.u32(e.count);
        if (e.external.empty() && e.type == kShort && e.count == 1) {
            // SHORT values sit in the low-order bytes of the value field.
            w.u16(static_cast<std::uint16_t>(e.value));
            w.u16(0);
        } else {
            w.u32(e.value);
        }
    }
    w.u32(0);
    for (const auto& e : entries) {
        if (e.external.empty()) continue;
        w.bytes.insert(w.bytes.end(), e.external.begin(), e.external.end());
        if (w.bytes.size() % 2) w.u8(0);
    }
    for (auto s : samples) w.u16(s);
    return w.bytes;
}

std::vector<std::uint16_t> interleaved(const RgbImage& rgb) {
    std::vector<std::uint16_t> s(rgb.width * rgb.height * 3);
    for (std::size_t i = 0; i < rgb.width * rgb.height; ++i)
        for (int c = 0; c < 3; ++c) s[3 * i + c] = to_u16(rgb.planes[c].data[i]);
    return s;
}

std::vector<std::uint16_t> gray_samples(const Plane& p) {
    std::vector<std::uint16_t> s(p.data.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = to_u16(p.data[i]);
    return s;
}

std::vector<std::uint8_t> encode_pnm(const char* magic, std::size_t w, std::size_t h,
                                     const std::vector<std::uint16_t>& samples) {
    const std::string header = std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n65535\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + samples.size() * 2);
    for (auto s : samples) {
        out.push_back(static_cast<std::uint8_t>(s >> 8));
        out.push_back(static_cast<std::uint8_t>(s & 0xff));
    }
    return out;
}

}  // namespace

std::vector<std::uint8_t> encode_tiff16(const RgbImage& rgb, const std::string& description) {
    return encode_tiff(rgb.width, rgb.height, 3, interleaved(rgb), description);
}

std::vector<std::uint8_t> encode_tiff16(const Plane& gray, const std::string& description) {
    return encode_tiff(gray.width, gray.height, 1, gray_samples(gray), description);
}

std::vector<std::uint8_t> encode_pnm16(const RgbImage& rgb) { return encode_pnm("P6", rgb.width, rgb.height, interleaved(rgb)); }

std::vector<std::uint8_t> encode_pnm16(const Plane& gray) {
    return encode_pnm("P5", gray.width, gray.height, gray_samples(gray));
}

std::string render_extension(RenderFormat fmt, bool rgb) {
    if (fmt == RenderFormat::Tiff) return ".tiff";
    return rgb ? ".ppm" : ".pgm";
}

std::string render_description() {
    return std::string("noisecal render; demosaic=") + kDemosaicAlgorithm + "; white_balance=identity; tone=linear";
}

void write_render16(const std::filesystem::path& path, const RgbImage& rgb, RenderFormat fmt) {
    const auto bytes = fmt == RenderFormat::Tiff ? encode_tiff16(rgb, render_description()) : encode_pnm16(rgb);
    write_file_atomic(path, bytes);
}

void write_gray16(const std::filesystem::path& path, const Plane& gray, RenderFormat fmt) {
    const auto bytes = fmt == RenderFormat::Tiff ? encode_tiff16(gray) : encode_pnm16(gray);
    write_file_atomic(path, bytes);
}

}  // namespace noisecal
