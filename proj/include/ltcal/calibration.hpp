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

// Stage-2 adaptive calibration of a frozen classifier head.
//
// For encoded feature x with frozen logits z, the calibrated logits are
//
//   zhat_j = (1 + sigma(x) * alpha_j) * z_j + sigma(x) * beta_j,
//   sigma(x) = logistic(v . x + b),
//
// and the learnables (alpha, beta, v, b) minimize the class-reweighted
// negative log-likelihood
//
//   L = -(1/B) sum_i w_{y_i} log softmax(zhat(x_i))_{y_i},
//   w_c = (1/r_c)^rho / sum_k (1/r_k)^rho.

#include <cstdint>
#include <span>
#include <vector>

#include "ltcal/dataset.hpp"
#include "ltcal/heads.hpp"
#include "ltcal/matrix.hpp"

namespace ltcal {

struct CalibrationFlags {
    bool magnitude = true;   // learnable alpha
    bool margin = true;      // learnable beta
    bool confidence = true;  // input-dependent gate; sigma == 1 when off

    friend bool operator==(const CalibrationFlags&, const CalibrationFlags&) = default;
};

struct CalibrationParams {
    Vector alpha;         // K
    Vector beta;          // K
    Vector conf_weights;  // d (encoded feature dim)
    double conf_bias = 0.0;
    CalibrationFlags flags;

    std::size_t num_classes() const noexcept { return alpha.size(); }
    std::size_t dim() const noexcept { return conf_weights.size(); }

    // alpha = 1, beta = 0, v = 0, b = 0 (gate starts at 0.5).
    static CalibrationParams initial(std::size_t num_classes, std::size_t dim, CalibrationFlags flags = {});
    void validate() const;

    friend bool operator==(const CalibrationParams&, const CalibrationParams&) = default;
};

struct ReweightVector {
    Vector w;
    double rho = 0.0;
};

double logistic(double t) noexcept;

double confidence(const CalibrationParams& params, std::span<const double> x);

void calibrate_into(std::span<const double> logits, double sigma, const CalibrationParams& params,
                    std::span<double> out);
Vector calibrate(std::span<const double> logits, double sigma, const CalibrationParams& params);

double log_sum_exp(std::span<const double> logits) noexcept;
Vector predict_distribution(std::span<const double> logits);

ReweightVector grw_weights(const ClassFrequencies& freq, double rho);

// Encoded features and frozen-head logits for a set of samples. Stage-2
// training never touches the encoder or head, so these are computed once.
struct FrozenBatch {
    Matrix features;  // B x d
    Matrix logits;    // B x K
    std::vector<std::uint32_t> labels;

    std::size_t size() const noexcept { return labels.size(); }
};

FrozenBatch freeze(const LongTailDataset& dataset, const EncoderParams& encoder, const HeadParams& head);
FrozenBatch freeze(const LongTailDataset& dataset, std::span<const std::size_t> indices,
                   const EncoderParams& encoder, const HeadParams& head);
FrozenBatch gather(const FrozenBatch& all, std::span<const std::size_t> indices);

struct CalibrationGradients {
    Vector alpha;
    Vector beta;
    Vector conf_weights;
    double conf_bias = 0.0;
};

double disalign_loss(const FrozenBatch& batch, const CalibrationParams& params, const ReweightVector& weights);
double disalign_loss(const LongTailDataset& dataset, std::span<const std::size_t> batch,
                     const EncoderParams& encoder, const HeadParams& head, const CalibrationParams& params,
                     const ReweightVector& weights);

// Exact gradients of disalign_loss; disabled parameter groups get zeros.
// Returns the loss through `loss_out` when non-null.
CalibrationGradients disalign_gradients(const FrozenBatch& batch, const CalibrationParams& params,
                                        const ReweightVector& weights, double* loss_out = nullptr);
CalibrationGradients disalign_gradients(const LongTailDataset& dataset, std::span<const std::size_t> batch,
                                        const EncoderParams& encoder, const HeadParams& head,
                                        const CalibrationParams& params, const ReweightVector& weights);

// Calibrated logits for one encoded feature vector.
Vector calibrated_logits(const HeadParams& head, const CalibrationParams& params, std::span<const double> x);

// Reweight coefficients for a list of rho values, rows ordered by class rank
// (rank 0 = most frequent class).
struct WeightCurve {
    std::vector<std::size_t> class_index;  // class at each rank
    Vector frequency;                      // r at each rank
    Vector rhos;
    Matrix weights;  // rank x rho
};

WeightCurve export_weight_curve(const ClassFrequencies& freq, std::span<const double> rhos);

}  // namespace ltcal
