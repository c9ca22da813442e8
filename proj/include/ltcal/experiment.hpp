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

// End-to-end pipeline steps shared by the CLI and the benchmark tests.

#include <string_view>

#include "ltcal/config.hpp"
#include "ltcal/evaluation.hpp"
#include "ltcal/io.hpp"

namespace ltcal {

struct ExperimentData {
    LongTailDataset train;
    LongTailDataset test;  // balanced twin, test.per_class samples per class
};

ExperimentData make_data(const ExperimentConfig& cfg);

// Fresh encoder (or identity) + head for the given raw feature dimension.
ModelCheckpoint initial_model(const ExperimentConfig& cfg, std::size_t raw_dim, std::size_t num_classes);

struct Stage1Output {
    ModelCheckpoint model;
    TrainTrace trace;
};

Stage1Output run_stage1(const LongTailDataset& train, const ExperimentConfig& cfg);

struct Stage2Output {
    CalibrationCheckpoint calibration;
    TrainTrace trace;
};

Stage2Output run_stage2(const LongTailDataset& train, const ModelCheckpoint& model, const ExperimentConfig& cfg);

enum class BaselineMethod { crt, lws, tau_norm, ncm, logit_adjust, tde };

std::string_view to_string(BaselineMethod m) noexcept;
BaselineMethod parse_baseline_method(std::string_view s);

// Fits (if needed) and wraps one baseline on top of a stage-1 model.
Predictor baseline_predictor(BaselineMethod method, const LongTailDataset& train, const ModelCheckpoint& model,
                             const ExperimentConfig& cfg);

Predictor model_predictor(const ModelCheckpoint& model);
Predictor disalign_predictor(const ModelCheckpoint& model, const CalibrationCheckpoint& calib);

}  // namespace ltcal
