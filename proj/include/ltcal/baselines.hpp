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

#include <span>

#include "ltcal/calibration.hpp"
#include "ltcal/dataset.hpp"
#include "ltcal/heads.hpp"
#include "ltcal/trainer.hpp"

namespace ltcal {

struct LogitAdjustConfig {
    double lambda = 1.0;
};

struct TdeConfig {
    double lambda = 1.0;
    Vector mean_feature;  // e
};

// zhat_j = z_j - lambda * log(r_j)
Vector logit_adjust(std::span<const double> logits, const ClassFrequencies& freq, const LogitAdjustConfig& cfg);

// zhat_j = z_j - lambda * d(x, e) * (w_j . e), d = 1 - cos(x, e)
Vector tde_adjust(std::span<const double> logits, std::span<const double> x, const HeadParams& head,
                  const TdeConfig& cfg);

// Plain mean of encoded training features.
Vector mean_encoded_feature(const LongTailDataset& dataset, const EncoderParams& encoder);

// Classifier re-training: a fresh head trained on frozen features with
// class-balanced sampling.
HeadParams crt_train(const LongTailDataset& dataset, const EncoderParams& encoder, HeadKind kind, double scale,
                     const SgdConfig& cfg);

// Learnable weight scaling: zhat_j = f_j * z_j on a frozen head.
Vector lws_apply(std::span<const double> logits, std::span<const double> scales);

double lws_loss(const FrozenBatch& batch, std::span<const double> scales);
Vector lws_gradients(const FrozenBatch& batch, std::span<const double> scales, double* loss_out = nullptr);

// Scales start at 1 and are projected onto [1e-6, inf) after each step.
// Batches are drawn class-balanced regardless of cfg.sampler.
Vector lws_train(const LongTailDataset& dataset, const EncoderParams& encoder, const HeadParams& head,
                 const SgdConfig& cfg);

inline constexpr double kLwsMinScale = 1e-6;

}  // namespace ltcal
