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
#include <span>

namespace noisecal {

// Fixed-order pairwise summation. The split points depend only on the length,
// so a given input always produces the same bits regardless of threading.
double pairwise_sum(std::span<const double> values);

double mean(std::span<const double> values);

// Unbiased (n - 1) sample variance, two-pass.
double sample_variance(std::span<const double> values);

}  // namespace noisecal
