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

// File formats.
//
// LTDS binary dataset (all integers little-endian):
//   offset 0   4 bytes   magic "LTDS"
//          4   u32       format version (kLtdsVersion)
//          8   u64       N, number of samples
//         16   u32       d, feature dimension
//         20   u32       K, number of classes
//         24   N x u32   labels
//              N*d x f32 features, row-major, IEEE-754 binary32
//
// CSV dataset: one row per sample, `label,f_0,...,f_{d-1}`, no header.
//
// Checkpoints are JSON objects tagged with "format" and "version"; weight
// matrices are flat row-major arrays next to their dimensions. Numbers are
// written so that parsing them yields the identical binary value.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ltcal/calibration.hpp"
#include "ltcal/dataset.hpp"
#include "ltcal/evaluation.hpp"
#include "ltcal/heads.hpp"
#include "ltcal/trainer.hpp"

namespace ltcal {

inline constexpr std::uint32_t kLtdsVersion = 1;
inline constexpr std::size_t kLtdsHeaderSize = 24;

std::vector<std::uint8_t> encode_ltds(const LongTailDataset& dataset);
LongTailDataset decode_ltds(std::span<const std::uint8_t> bytes);

std::string encode_csv(const LongTailDataset& dataset);
// K defaults to max label + 1.
LongTailDataset decode_csv(std::string_view text, std::optional<std::size_t> num_classes = std::nullopt);

// Format chosen by extension: ".csv" is CSV, anything else LTDS.
void write_dataset(const std::filesystem::path& path, const LongTailDataset& dataset);
LongTailDataset read_dataset(const std::filesystem::path& path, std::optional<std::size_t> num_classes = std::nullopt);

struct ModelCheckpoint {
    EncoderParams encoder;
    HeadParams head;
};

struct CalibrationCheckpoint {
    CalibrationParams params;
    double rho = 0.0;
};

std::string model_to_json(const ModelCheckpoint& model);
ModelCheckpoint model_from_json(std::string_view text);

std::string calibration_to_json(const CalibrationCheckpoint& calib);
CalibrationCheckpoint calibration_from_json(std::string_view text);

std::string report_to_json(const EvalReport& report);
// Per-class table: class,group,train_count,correct,total,accuracy
std::string report_to_csv(const EvalReport& report);

// epoch,loss,lr
std::string trace_to_csv(const TrainTrace& trace);
// rho,balanced_accuracy,many,medium,few (absent groups left empty)
std::string sweep_to_csv(std::span<const SweepRow> rows);
// sampler,baseline_balanced_accuracy,bound_balanced_accuracy,baseline_many,...
std::string bound_study_to_csv(std::span<const BoundStudyRow> rows);
// rank,class,frequency,w_rho=<rho>...
std::string weight_curve_to_csv(const WeightCurve& curve);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace ltcal
