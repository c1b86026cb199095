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

#include "noisecal/rng.hpp"

#include <cmath>
#include <numbers>

#include "noisecal/error.hpp"

namespace noisecal {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline Philox4x32::Counter philox_round(const Philox4x32::Counter& c, const Philox4x32::Key& k) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

constexpr double k2Pow53Inv = 1.0 / 9007199254740992.0;

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter counter, Key key) {
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += kPhiloxW0;
            key[1] += kPhiloxW1;
        }
        counter = philox_round(counter, key);
    }
    return counter;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) { return mix64(seed ^ mix64(tag)); }

KeyedStream::KeyedStream(std::uint64_t seed, std::uint32_t tag, std::uint64_t index)
    : counter_{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), tag, 0},
      key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

std::uint32_t KeyedStream::next_u32() {
    if (used_ == 4) {
        block_ = Philox4x32::generate(counter_, key_);
        ++counter_[3];
        used_ = 0;
    }
    return block_[used_++];
}

std::uint64_t KeyedStream::next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
}

double KeyedStream::uniform() { return static_cast<double>(next_u64() >> 11) * k2Pow53Inv; }

double KeyedStream::uniform_open() { return (static_cast<double>(next_u64() >> 11) + 0.5) * k2Pow53Inv; }

double KeyedStream::normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t KeyedStream::below(std::uint64_t n) {
    if (n == 0) throw InvalidArgument("below(0) has no valid result");
    if (n == 1) return 0;
    // Reject the top partial block so every residue is equally likely.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

double log_factorial(std::uint64_t k) {
    static const auto table = [] {
        std::array<double, 128> t{};
        double acc = 0.0;
        t[0] = 0.0;
        for (std::size_t i = 1; i < t.size(); ++i) {
            acc += std::log(static_cast<double>(i));
            t[i] = acc;
        }
        return t;
    }();
    if (k < table.size()) return table[k];
    // Stirling series; truncation error below 1e-17 for k >= 128.
    const double n = static_cast<double>(k);
    const double inv = 1.0 / n;
    const double inv2 = inv * inv;
    return n * std::log(n) - n + 0.5 * std::log(2.0 * std::numbers::pi * n) +
           inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0));
}

namespace {

std::uint64_t poisson_inversion(KeyedStream& s, double lambda) {
    const double u = s.uniform();
    double p = std::exp(-lambda);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf && k < 1000) {
        ++k;
        p *= lambda / static_cast<double>(k);
        cdf += p;
    }
    return k;
}

// Hormann (1993), "The transformed rejection method for generating Poisson
// random variables". Exact for lambda >= 10.
std::uint64_t poisson_ptrs(KeyedStream& s, double lambda) {
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = s.uniform() - 0.5;
        const double v = s.uniform_open();
        const double us = 0.5 - std::fabs(u);
        const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        const auto ki = static_cast<std::uint64_t>(k);
        if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
            -lambda + k * loglam - log_factorial(ki)) {
            return ki;
        }
    }
}

}  // namespace

std::uint64_t sample_poisson(KeyedStream& stream, double lambda, double gaussian_threshold) {
    if (!(lambda > 0.0)) return 0;
    if (lambda >= gaussian_threshold) {
        const double x = std::nearbyint(lambda + std::sqrt(lambda) * stream.normal());
        return x <= 0.0 ? 0 : static_cast<std::uint64_t>(x);
    }
    if (lambda < 10.0) return poisson_inversion(stream, lambda);
    return poisson_ptrs(stream, lambda);
}

}  // namespace noisecal
