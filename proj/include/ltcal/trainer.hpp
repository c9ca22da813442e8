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
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "ltcal/calibration.hpp"
#include "ltcal/dataset.hpp"
#include "ltcal/heads.hpp"

namespace ltcal {

enum class Schedule { cosine_to_zero, constant };

std::string_view to_string(Schedule s) noexcept;
Schedule parse_schedule(std::string_view s);

struct SgdConfig {
    double lr0 = 0.1;
    double momentum = 0.9;
    std::size_t batch_size = 64;
    std::size_t epochs = 100;
    Schedule schedule = Schedule::cosine_to_zero;
    SamplerKind sampler = SamplerKind::instance_balanced;
    std::uint64_t seed = 0;
    double weight_decay = 0.0;  // stage 1 only
    // Stage 2 only: divide lr0 by the expected per-sample class weight
    // sum_c r_c w_c, so the step size matches an unweighted loss.
    bool lr_per_mean_weight = false;

    void validate() const;
};

struct TrainTrace {
    std::vector<double> loss;  // mean sample loss per epoch
    std::vector<double> lr;    // learning rate at the first step of each epoch
};

// lr0 * (1 + cos(pi * step / total_steps)) / 2, or lr0 for the constant schedule.
double lr_at(const SgdConfig& cfg, std::size_t step, std::size_t total_steps);

// Heavy-ball SGD: v = momentum * v + g; p -= lr * v.
class MomentumSgd {
public:
    explicit MomentumSgd(std::size_t num_params) : velocity_(num_params, 0.0) {}
    void step(std::span<double> params, std::span<const double> grad, double lr, double momentum);

private:
    Vector velocity_;
};

// Runs the epoch/batch loop shared by all trainers. One epoch is
// dataset.size() draws from `cfg.sampler`. `step` receives the batch indices
// and the current learning rate, applies its update and returns the mean
// batch loss. Throws TrainingDiverged on a non-finite loss.
TrainTrace run_sgd(const LongTailDataset& dataset, const SgdConfig& cfg,
                   const std::function<double(std::span<const std::size_t>, double)>& step);

// Gradients of the mean softmax cross-entropy w.r.t. head (and encoder).
struct JointGradients {
    Matrix encoder_weights;
    Vector encoder_bias;
    Matrix head_weights;
};

double joint_loss(const LongTailDataset& dataset, std::span<const std::size_t> batch,
                  const EncoderParams& encoder, const HeadParams& head);
JointGradients joint_gradients(const LongTailDataset& dataset, std::span<const std::size_t> batch,
                               const EncoderParams& encoder, const HeadParams& head, double* loss_out = nullptr);

// Cross-entropy gradient of the head alone on pre-encoded features.
Matrix head_gradients(const Matrix& features, std::span<const std::uint32_t> labels,
                      std::span<const std::size_t> batch, const HeadParams& head, double* loss_out = nullptr);

struct JointResult {
    EncoderParams encoder;
    HeadParams head;
    TrainTrace trace;
};

// Stage 1: encoder + head trained jointly with unweighted cross-entropy.
JointResult train_joint(const LongTailDataset& dataset, const EncoderParams& encoder_init,
                        const HeadParams& head_init, const SgdConfig& cfg);

struct HeadResult {
    HeadParams head;
    TrainTrace trace;
};

// Trains `head_init` on frozen encoded features with cross-entropy, drawing
// batches with cfg.sampler.
HeadResult train_head(const LongTailDataset& dataset, const EncoderParams& encoder, const HeadParams& head_init,
                      const SgdConfig& cfg);

struct CalibrationResult {
    CalibrationParams params;
    TrainTrace trace;
};

// Expected class weight of a training sample drawn uniformly: sum_c r_c w_c.
double mean_sample_weight(const ClassFrequencies& freq, const ReweightVector& weights);

// Stage 2: learns only the enabled calibration parameters against the
// reweighted loss with weights grw_weights(r, rho).
CalibrationResult train_disalign(const LongTailDataset& dataset, const EncoderParams& encoder,
                                 const HeadParams& head, double rho, CalibrationFlags flags, const SgdConfig& cfg);

// Fresh head of `kind` trained on a balanced dataset with instance-balanced
// sampling: the empirical classifier bound for this representation.
HeadParams train_bound(const LongTailDataset& balanced, const EncoderParams& encoder, HeadKind kind, double scale,
                       const SgdConfig& cfg);

}  // namespace ltcal
