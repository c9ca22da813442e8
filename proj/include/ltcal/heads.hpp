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
#include <span>
#include <string_view>

#include "ltcal/dataset.hpp"
#include "ltcal/matrix.hpp"

namespace ltcal {

// One rectified hidden layer: x = max(0, W raw + b). When disabled the encoder
// is the identity on raw features.
struct EncoderParams {
    bool enabled = true;
    Matrix hidden_weights;  // h x d_in
    Vector hidden_bias;     // h

    std::size_t input_dim() const noexcept { return hidden_weights.cols(); }
    // Dimension of encoded features; `raw_dim` is returned for a disabled encoder.
    std::size_t output_dim(std::size_t raw_dim) const noexcept { return enabled ? hidden_weights.rows() : raw_dim; }

    static EncoderParams identity() { return EncoderParams{false, {}, {}}; }
    void validate() const;

    friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

enum class HeadKind { linear, cosine };

std::string_view to_string(HeadKind k) noexcept;
HeadKind parse_head_kind(std::string_view s);

// Classifier head. Row j of `weights` is the class-j vector w_j.
//   linear: z_j = w_j . x
//   cosine: z_j = scale * (w_j . x) / (|w_j| |x|)
struct HeadParams {
    Matrix weights;  // K x d
    HeadKind kind = HeadKind::linear;
    double scale = 16.0;

    std::size_t num_classes() const noexcept { return weights.rows(); }
    std::size_t dim() const noexcept { return weights.cols(); }
    void validate() const;

    friend bool operator==(const HeadParams&, const HeadParams&) = default;
};

// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
EncoderParams init_encoder(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed);
HeadParams init_head(std::size_t num_classes, std::size_t dim, HeadKind kind, double scale, std::uint64_t seed);

Vector encode(const EncoderParams& encoder, std::span<const double> raw);
Vector encode(const EncoderParams& encoder, std::span<const float> raw);
// Encodes every sample of `dataset` (N x output_dim).
Matrix encode_all(const EncoderParams& encoder, const LongTailDataset& dataset);

Vector score(const HeadParams& head, std::span<const double> x);
void score_into(const HeadParams& head, std::span<const double> x, std::span<double> logits);
// Logits of every row of `features` (N x K).
Matrix score_all(const HeadParams& head, const Matrix& features);

// Row j becomes w_j / |w_j|^tau. tau = 0 returns an exact copy.
HeadParams tau_normalize(const HeadParams& head, double tau);

// Nearest class mean: row j is the mean encoded feature of class j, scored
// with cosine similarity at the given scale.
HeadParams ncm_fit(const LongTailDataset& dataset, const EncoderParams& encoder, double scale = 16.0);

// Index of the largest entry; the first one wins ties.
std::size_t argmax(std::span<const double> values) noexcept;

}  // namespace ltcal
