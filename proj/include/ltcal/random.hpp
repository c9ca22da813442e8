/*
 * Copyright 2026 The ltcal Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ltcal {

// All randomness goes through std::mt19937_64, whose output sequence is fixed
// by the standard. Independent streams are derived from a base seed plus a
// purpose tag and an index (e.g. class id) through std::seed_seq.
using Rng = std::mt19937_64;

enum class StreamTag : std::uint32_t {
    class_mean = 1,
    class_noise = 2,
    balanced_twin = 3,
    encoder_init = 4,
    head_init = 5,
    sampler = 6,
};

inline Rng make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

}  // namespace ltcal
