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
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "noisecal/bayer.hpp"

namespace noisecal {

struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::array<Plane, 3> planes;  // R, G, B
};

inline constexpr const char* kDemosaicAlgorithm = "bilinear";

// Each missing color is the mean of the same-color samples in the 3x3
// neighborhood. Out-of-frame neighbors replicate the edge pixel; the color of a
// replicated sample is the color of the pixel it was copied from.
RgbImage demosaic_bilinear(const BayerImage& img);

// round(clamp(v, 0, 1) * 65535), ties to even.
std::uint16_t to_u16(double v);

// Minimal baseline TIFF: little-endian, uncompressed, one strip, 16 bits per
// sample, chunky RGB or BlackIsZero gray. Tags in order: ImageWidth,
// ImageLength, BitsPerSample, Compression=1, PhotometricInterpretation,
// [ImageDescription], StripOffsets, SamplesPerPixel, RowsPerStrip,
// StripByteCounts, XResolution=72/1, YResolution=72/1, PlanarConfiguration=1,
// ResolutionUnit=1. Out-of-line values follow the IFD, then the pixel strip.
std::vector<std::uint8_t> encode_tiff16(const RgbImage& rgb, const std::string& description = {});
std::vector<std::uint8_t> encode_tiff16(const Plane& gray, const std::string& description = {});

// Binary PPM/PGM with maxval 65535 (big-endian samples).
std::vector<std::uint8_t> encode_pnm16(const RgbImage& rgb);
std::vector<std::uint8_t> encode_pnm16(const Plane& gray);

enum class RenderFormat { Tiff, Pnm };

std::string render_extension(RenderFormat fmt, bool rgb);
std::string render_description();

void write_render16(const std::filesystem::path& path, const RgbImage& rgb, RenderFormat fmt = RenderFormat::Tiff);
void write_gray16(const std::filesystem::path& path, const Plane& gray, RenderFormat fmt = RenderFormat::Tiff);

}  // namespace noisecal
