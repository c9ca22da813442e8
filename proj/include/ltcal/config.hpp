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

// Experiment configuration: line-oriented `key = value` text with dotted
// section names, `#` comments and blank lines. Later lines override earlier
// ones; unknown keys are rejected with ConfigError.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ltcal/calibration.hpp"
#include "ltcal/dataset.hpp"
#include "ltcal/evaluation.hpp"
#include "ltcal/heads.hpp"
#include "ltcal/trainer.hpp"

namespace ltcal {

struct ExperimentConfig {
    // Master seed. Every per-stage seed that is not set explicitly resolves
    // to it; the stages draw from disjoint random streams regardless.
    std::uint64_t seed = 0;

    GenSpec gen;
    std::optional<std::uint64_t> gen_seed;
    std::size_t test_per_class = 25;

    bool use_encoder = true;
    std::size_t hidden_dim = 64;
    HeadKind head_kind = HeadKind::linear;
    double head_scale = 16.0;

    SgdConfig stage1;
    std::optional<std::uint64_t> stage1_seed;

    SgdConfig stage2;
    std::optional<std::uint64_t> stage2_seed;
    std::optional<double> rho;  // default depends on the head kind
    CalibrationFlags flags;
    bool grw = true;  // off means rho = 0

    SgdConfig baseline;  // cRT and LWS
    std::optional<std::uint64_t> baseline_seed;
    double tau = 1.0;
    double la_lambda = 1.0;
    double tde_lambda = 1.0;

    SgdConfig bound;
    std::optional<std::uint64_t> bound_seed;
    std::size_t bound_per_class = 200;
    std::vector<SamplerKind> bound_samplers{SamplerKind::instance_balanced, SamplerKind::class_balanced,
                                            SamplerKind::square_root};

    std::vector<double> sweep_rhos{0.0, 0.5, 1.0, 1.5, 2.0};
    std::vector<double> curve_rhos{0.0, 0.5, 1.0, 1.5, 2.0};
    GroupThresholds thresholds;

    std::filesystem::path output_dir = "out";
    std::optional<std::filesystem::path> train_path;
    std::optional<std::filesystem::path> test_path;
    std::optional<std::filesystem::path> model_path;
    std::optional<std::filesystem::path> calibration_path;

    ExperimentConfig();

    // Applies one key; throws ConfigError naming the key on unknown keys or
    // unparsable values.
    void set(std::string_view key, std::string_view value);

    // Parses config text. Errors carry the key and the line number.
    void apply_text(std::string_view text);

    // Cross-field checks; throws ConfigError.
    void validate() const;

    // Resolved views with derived seeds and defaults filled in.
    GenSpec gen_spec() const;
    SgdConfig stage1_sgd() const;
    SgdConfig stage2_sgd() const;
    SgdConfig baseline_sgd() const;
    SgdConfig bound_sgd() const;
    double effective_rho() const;
    BoundStudyConfig bound_study_config() const;

    // The resolved configuration as config text, one `key = value` per key.
    std::string dump() const;
};

struct ConfigKeyInfo {
    std::string_view key;
    std::string_view description;
};

// Every accepted key, in documentation order.
const std::vector<ConfigKeyInfo>& config_keys();

ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace ltcal
