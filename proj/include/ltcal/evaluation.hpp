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

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ltcal/baselines.hpp"
#include "ltcal/calibration.hpp"
#include "ltcal/dataset.hpp"
#include "ltcal/heads.hpp"
#include "ltcal/trainer.hpp"

namespace ltcal {

// Classes with more than `many_min` training samples are many-shot, fewer
// than `few_max` few-shot, everything else (boundaries included) medium-shot.
struct GroupThresholds {
    std::uint64_t many_min = 100;
    std::uint64_t few_max = 20;

    void validate() const;
    friend bool operator==(const GroupThresholds&, const GroupThresholds&) = default;
};

enum class ShotGroup : std::uint8_t { many = 0, medium = 1, few = 2 };

std::string_view to_string(ShotGroup g) noexcept;

std::vector<ShotGroup> assign_groups(std::span<const std::uint64_t> train_counts, const GroupThresholds& thresholds);

// Anything that maps a raw feature vector to a class index.
struct Predictor {
    std::string description;
    std::function<std::size_t(std::span<const float>)> classify;
};

Predictor head_predictor(EncoderParams encoder, HeadParams head, std::string description = "joint head");
Predictor calibrated_predictor(EncoderParams encoder, HeadParams head, CalibrationParams params,
                               std::string description = "disalign");
Predictor logit_adjust_predictor(EncoderParams encoder, HeadParams head, ClassFrequencies freq,
                                 LogitAdjustConfig cfg);
Predictor tde_predictor(EncoderParams encoder, HeadParams head, TdeConfig cfg);
Predictor lws_predictor(EncoderParams encoder, HeadParams head, Vector scales);

struct EvalReport {
    double balanced_accuracy = 0.0;
    // Indexed by ShotGroup; empty when the group has no classes.
    std::array<std::optional<double>, 3> group_accuracy;
    Vector per_class_accuracy;
    std::vector<std::uint64_t> per_class_correct;
    std::vector<std::uint64_t> per_class_total;
    std::vector<std::uint64_t> train_counts;
    std::vector<ShotGroup> groups;
    GroupThresholds thresholds;
    std::string predictor;

    std::optional<double> group(ShotGroup g) const { return group_accuracy[static_cast<std::size_t>(g)]; }
};

// Class-balanced top-1 accuracy of `predictor` on `test_set`; every class must
// appear in the test set.
EvalReport evaluate(const LongTailDataset& test_set, const Predictor& predictor,
                    std::span<const std::uint64_t> train_counts, const GroupThresholds& thresholds = {});

struct SweepRow {
    double rho = 0.0;
    EvalReport report;
};

std::vector<SweepRow> rho_sweep(const LongTailDataset& dataset, const EncoderParams& encoder, const HeadParams& head,
                                std::span<const double> rhos, CalibrationFlags flags, const SgdConfig& sgd,
                                const LongTailDataset& test_set, const GroupThresholds& thresholds = {});

struct BoundStudyConfig {
    GenSpec gen;
    std::vector<SamplerKind> samplers{SamplerKind::instance_balanced, SamplerKind::class_balanced,
                                      SamplerKind::square_root};
    SgdConfig stage1;
    SgdConfig bound;
    bool use_encoder = true;
    std::size_t hidden_dim = 64;
    HeadKind head_kind = HeadKind::linear;
    double head_scale = 16.0;
    std::size_t bound_per_class = 200;  // size of the ideal balanced training set
    std::size_t test_per_class = 25;
    GroupThresholds thresholds;
};

struct BoundStudyRow {
    SamplerKind sampler;
    EvalReport baseline;
    EvalReport bound;
};

std::vector<BoundStudyRow> bound_study(const BoundStudyConfig& cfg);

// Seeds for the held-out balanced test set and the ideal balanced training
// set, derived from the generator seed so they never share a stream.
std::uint64_t test_twin_seed(std::uint64_t seed) noexcept;
std::uint64_t bound_twin_seed(std::uint64_t seed) noexcept;

}  // namespace ltcal
