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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ltcal/matrix.hpp"
#include "ltcal/random.hpp"

namespace ltcal {

enum class CountProfile { exponential, pareto };

// Parameters of a synthetic long-tail dataset.
//
// Class c (0 = most frequent) receives
//   exponential: round(max_count * (min_count / max_count)^(c / (K - 1)))
//   pareto:      max(min_count, round(max_count * (c + 1)^(-1 / pareto_power)))
// samples. Each class is an isotropic Gaussian cluster: its centre has i.i.d.
// N(0, mean_scale^2 / d) coordinates (expected norm mean_scale) and samples
// scatter around it with i.i.d. N(0, noise_scale^2) coordinates.
struct GenSpec {
    std::size_t num_classes = 30;
    std::size_t feature_dim = 64;
    CountProfile profile = CountProfile::exponential;
    std::uint64_t max_count = 200;
    std::uint64_t min_count = 2;
    double pareto_power = 6.0;
    double mean_scale = 3.0;
    double noise_scale = 0.7;
    std::uint64_t seed = 0;

    double imbalance_ratio() const { return static_cast<double>(max_count) / static_cast<double>(min_count); }
    void validate() const;
};

// Generative model kept alongside synthetic datasets so that fresh draws
// (balanced twins) come from the same clusters.
struct ClusterModel {
    Matrix means;  // K x d
    double noise_scale = 0.0;
};

struct LongTailDataset {
    FeatureMatrix features;  // N x d
    std::vector<std::uint32_t> labels;
    std::size_t num_classes = 0;
    std::vector<std::uint64_t> class_counts;
    std::uint64_t seed = 0;
    std::optional<ClusterModel> clusters;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const noexcept { return features.cols(); }
    std::span<const float> sample(std::size_t i) const noexcept { return features.row(i); }

    // Builds a dataset from raw rows, recomputing class_counts. Throws on
    // out-of-range labels, non-finite features or shape mismatch.
    static LongTailDataset from_rows(FeatureMatrix features, std::vector<std::uint32_t> labels,
                                     std::size_t num_classes, std::uint64_t seed = 0);

    // Checks every invariant; throws InvalidArgument on the first violation.
    void validate() const;

    bool is_balanced() const noexcept;
    // Sample indices grouped by class.
    std::vector<std::vector<std::size_t>> indices_by_class() const;
};

struct ClassFrequencies {
    std::vector<double> r;
};

enum class SamplerKind { instance_balanced, class_balanced, square_root };

std::string_view to_string(CountProfile p) noexcept;
std::string_view to_string(SamplerKind k) noexcept;
CountProfile parse_count_profile(std::string_view s);
SamplerKind parse_sampler_kind(std::string_view s);

// Per-class sample counts implied by a spec, sorted non-increasing.
std::vector<std::uint64_t> class_count_profile(const GenSpec& spec);

LongTailDataset generate_longtail(const GenSpec& spec);

// Fresh draws from `dataset`'s clusters with exactly `per_class` samples per
// class. Requires a dataset that carries its cluster model.
LongTailDataset balanced_twin(const LongTailDataset& dataset, std::size_t per_class, std::uint64_t seed);

ClassFrequencies class_frequencies(const LongTailDataset& dataset);

// Draws training indices according to one of the stage-1 sampling strategies.
// Draws are with replacement.
class Sampler {
public:
    Sampler(SamplerKind kind, const LongTailDataset& dataset);

    SamplerKind kind() const noexcept { return kind_; }
    std::size_t next_index(Rng& rng);

    // Probability that a draw lands in each class.
    const std::vector<double>& class_marginal() const noexcept { return marginal_; }

private:
    SamplerKind kind_;
    std::size_t num_samples_;
    std::vector<std::vector<std::size_t>> by_class_;
    std::vector<double> marginal_;
    std::discrete_distribution<std::size_t> class_dist_;
};

}  // namespace ltcal
