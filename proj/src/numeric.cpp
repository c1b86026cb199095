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

#include "noisecal/numeric.hpp"

#include <vector>

namespace noisecal {

double pairwise_sum(std::span<const double> values) {
    constexpr std::size_t kBlock = 32;
    if (values.size() <= kBlock) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return pairwise_sum(values) / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    const double m = mean(values);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = values[i] - m;
        sq[i] = d * d;
    }
    const double total = pairwise_sum(sq);
    return total / static_cast<double>(n - 1);
}

}  // namespace noisecal
