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

namespace noisecal {

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3", SC'11). Output is a pure function of
// (counter, key), which is what makes per-pixel streams reproducible under
// any thread schedule.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter counter, Key key);
};

// SplitMix64 finalizer; used to fold extra dimensions (frame number, ISO,
// scene index) into a seed.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

// Stream tags. Each purpose gets its own counter space so that, for example,
// read noise at a pixel does not depend on how many uniforms the shot-noise
// sampler consumed there.
namespace stream_tag {
inline constexpr std::uint32_t kShot = 0x100;
inline constexpr std::uint32_t kRead = 0x200;
inline constexpr std::uint32_t kAwgn = 0x300;
inline constexpr std::uint32_t kDarkSelect = 0x400;
inline constexpr std::uint32_t kScene = 0x500;
inline constexpr std::uint32_t kSignature = 0x600;
inline constexpr std::uint32_t kSuppression = 0x700;

inline constexpr std::uint32_t with_channel(std::uint32_t tag, int channel) {
    return tag | static_cast<std::uint32_t>(channel & 0xff);
}
}  // namespace stream_tag

// Sequence of random words keyed by (seed, tag, index). The counter is laid
// out as {index_lo, index_hi, tag, block}; the key is the two halves of seed.
class KeyedStream {
   public:
    KeyedStream(std::uint64_t seed, std::uint32_t tag, std::uint64_t index);

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    // 53-bit uniform on [0, 1).
    double uniform();
    // 53-bit uniform on (0, 1), never exactly 0 or 1.
    double uniform_open();
    // Standard normal via Box-Muller (one variate per call).
    double normal();
    // Unbiased integer on [0, n) by rejection; n must be positive.
    std::uint64_t below(std::uint64_t n);

   private:
    Philox4x32::Counter counter_;
    Philox4x32::Key key_;
    Philox4x32::Counter block_{};
    int used_ = 4;
};

inline constexpr double kDefaultPoissonGaussianThreshold = 1000.0;

// Poisson variate. Exact for lambda below `gaussian_threshold` (inversion
// under 10, PTRS transformed rejection above); rounded N(lambda, lambda)
// at and beyond the threshold.
std::uint64_t sample_poisson(KeyedStream& stream, double lambda,
                             double gaussian_threshold = kDefaultPoissonGaussianThreshold);

double log_factorial(std::uint64_t k);

}  // namespace noisecal
