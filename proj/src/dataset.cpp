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


#include "ltcal/dataset.hpp"

#include <cmath>
#include <string>

#include "ltcal/error.hpp"

namespace ltcal {

namespace {

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void GenSpec::validate() const {
    if (num_classes < 2) throw InvalidArgument("num_classes must be >= 2");
    if (feature_dim < 1) throw InvalidArgument("feature_dim must be >= 1");
    if (min_count < 1) throw InvalidArgument("min_count must be >= 1");
    if (max_count < min_count) throw InvalidArgument("max_count must be >= min_count");
    if (!finite(mean_scale) || mean_scale < 0.0) throw InvalidArgument("mean_scale must be finite and >= 0");
    if (!finite(noise_scale) || noise_scale <= 0.0) throw InvalidArgument("noise_scale must be finite and > 0");
    if (!finite(pareto_power) || pareto_power <= 0.0) throw InvalidArgument("pareto_power must be finite and > 0");
}

LongTailDataset LongTailDataset::from_rows(FeatureMatrix features, std::vector<std::uint32_t> labels,
                                           std::size_t num_classes, std::uint64_t seed) {
    LongTailDataset ds;
    ds.features = std::move(features);
    ds.labels = std::move(labels);
    ds.num_classes = num_classes;
    ds.seed = seed;
    ds.class_counts.assign(num_classes, 0);
    if (ds.features.rows() != ds.labels.size())
        throw InvalidArgument("feature rows (" + std::to_string(ds.features.rows()) + ") != label count (" +
                              std::to_string(ds.labels.size()) + ")");
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        if (ds.labels[i] >= num_classes)
            throw InvalidArgument("label " + std::to_string(ds.labels[i]) + " at sample " + std::to_string(i) +
                                  " is out of range for " + std::to_string(num_classes) + " classes");
        ++ds.class_counts[ds.labels[i]];
    }
    ds.validate();
    return ds;
}

void LongTailDataset::validate() const {
    if (num_classes < 1) throw InvalidArgument("dataset has no classes");
    if (features.rows() != labels.size()) throw InvalidArgument("feature rows and labels disagree");
    if (class_counts.size() != num_classes) throw InvalidArgument("class_counts has wrong length");
    std::vector<std::uint64_t> seen(num_classes, 0);
    for (auto y : labels) {
        if (y >= num_classes) throw InvalidArgument("label out of range");
        ++seen[y];
    }
    if (seen != class_counts) throw InvalidArgument("class_counts do not match labels");
    for (std::size_t i = 0; i < features.size(); ++i)
        if (!std::isfinite(features.flat()[i]))
            throw InvalidArgument("non-finite feature at sample " + std::to_string(i / std::max<std::size_t>(1, dim())));
}

bool LongTailDataset::is_balanced() const noexcept {
    for (auto c : class_counts)
        if (c != class_counts.front()) return false;
    return true;
}

std::vector<std::vector<std::size_t>> LongTailDataset::indices_by_class() const {
    std::vector<std::vector<std::size_t>> out(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) out[c].reserve(class_counts[c]);
    for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(i);
    return out;
}

std::string_view to_string(CountProfile p) noexcept {
    return p == CountProfile::exponential ? "exponential" : "pareto";
}

std::string_view to_string(SamplerKind k) noexcept {
    switch (k) {
        case SamplerKind::instance_balanced: return "instance_balanced";
        case SamplerKind::class_balanced: return "class_balanced";
        case SamplerKind::square_root: return "square_root";
    }
    return "unknown";
}

CountProfile parse_count_profile(std::string_view s) {
    if (s == "exponential") return CountProfile::exponential;
    if (s == "pareto") return CountProfile::pareto;
    throw InvalidArgument("unknown count profile '" + std::string(s) + "'");
}

SamplerKind parse_sampler_kind(std::string_view s) {
    if (s == "instance_balanced" || s == "ib") return SamplerKind::instance_balanced;
    if (s == "class_balanced" || s == "cb") return SamplerKind::class_balanced;
    if (s == "square_root" || s == "sr") return SamplerKind::square_root;
    throw InvalidArgument("unknown sampler '" + std::string(s) + "'");
}

std::vector<std::uint64_t> class_count_profile(const GenSpec& spec) {
    spec.validate();
    const auto K = spec.num_classes;
    const double n_max = static_cast<double>(spec.max_count);
    const double n_min = static_cast<double>(spec.min_count);
    std::vector<std::uint64_t> counts(K);
    for (std::size_t c = 0; c < K; ++c) {
        double n = 0.0;
        if (spec.profile == CountProfile::exponential) {
            n = std::round(n_max * std::pow(n_min / n_max, static_cast<double>(c) / static_cast<double>(K - 1)));
        } else {
            n = std::max(n_min, std::round(n_max * std::pow(static_cast<double>(c + 1), -1.0 / spec.pareto_power)));
        }
        counts[c] = static_cast<std::uint64_t>(std::clamp(n, n_min, n_max));
    }
    return counts;
}

LongTailDataset generate_longtail(const GenSpec& spec) {
    const auto counts = class_count_profile(spec);
    const std::size_t K = spec.num_classes;
    const std::size_t d = spec.feature_dim;

    ClusterModel model{Matrix(K, d), spec.noise_scale};
    const double coord_scale = spec.mean_scale / std::sqrt(static_cast<double>(d));
    for (std::size_t c = 0; c < K; ++c) {
        Rng rng = make_stream(spec.seed, StreamTag::class_mean, c);
        std::normal_distribution<double> normal(0.0, coord_scale);
        for (double& v : model.means.row(c)) v = normal(rng);
    }

    std::size_t total = 0;
    for (auto n : counts) total += n;
    FeatureMatrix features(total, d);
    std::vector<std::uint32_t> labels;
    labels.reserve(total);

    std::size_t row = 0;
    for (std::size_t c = 0; c < K; ++c) {
        Rng rng = make_stream(spec.seed, StreamTag::class_noise, c);
        std::normal_distribution<double> noise(0.0, spec.noise_scale);
        const auto mean = model.means.row(c);
        for (std::uint64_t k = 0; k < counts[c]; ++k, ++row) {
            auto out = features.row(row);
            for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<float>(mean[j] + noise(rng));
            labels.push_back(static_cast<std::uint32_t>(c));
        }
    }

    LongTailDataset ds;
    ds.features = std::move(features);
    ds.labels = std::move(labels);
    ds.num_classes = K;
    ds.class_counts = counts;
    ds.seed = spec.seed;
    ds.clusters = std::move(model);
    return ds;
}

LongTailDataset balanced_twin(const LongTailDataset& dataset, std::size_t per_class, std::uint64_t seed) {
    if (per_class < 1) throw InvalidArgument("per_class must be >= 1");
    if (!dataset.clusters)
        throw InvalidArgument("balanced_twin needs a dataset with its cluster model (synthetic, not loaded from disk)");
    const auto& model = *dataset.clusters;
    const std::size_t K = dataset.num_classes;
    const std::size_t d = model.means.cols();

    FeatureMatrix features(K * per_class, d);
    std::vector<std::uint32_t> labels;
    labels.reserve(K * per_class);
    std::size_t row = 0;
    for (std::size_t c = 0; c < K; ++c) {
        // Tagged stream: never coincides with the training draws, even for equal seeds.
        Rng rng = make_stream(seed, StreamTag::balanced_twin, c);
        std::normal_distribution<double> noise(0.0, model.noise_scale);
        const auto mean = model.means.row(c);
        for (std::size_t k = 0; k < per_class; ++k, ++row) {
            auto out = features.row(row);
            for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<float>(mean[j] + noise(rng));
            labels.push_back(static_cast<std::uint32_t>(c));
        }
    }

    LongTailDataset ds;
    ds.features = std::move(features);
    ds.labels = std::move(labels);
    ds.num_classes = K;
    ds.class_counts.assign(K, per_class);
    ds.seed = seed;
    ds.clusters = model;
    return ds;
}

ClassFrequencies class_frequencies(const LongTailDataset& dataset) {
    const double n = static_cast<double>(dataset.size());
    ClassFrequencies f;
    f.r.reserve(dataset.num_classes);
    for (std::size_t c = 0; c < dataset.num_classes; ++c) {
        if (dataset.class_counts[c] == 0)
            throw InvalidArgument("class " + std::to_string(c) + " has no training samples; frequency undefined");
        f.r.push_back(static_cast<double>(dataset.class_counts[c]) / n);
    }
    return f;
}

Sampler::Sampler(SamplerKind kind, const LongTailDataset& dataset)
    : kind_(kind), num_samples_(dataset.size()), by_class_(dataset.indices_by_class()) {
    if (num_samples_ == 0) throw InvalidArgument("cannot sample from an empty dataset");
    const std::size_t K = dataset.num_classes;
    std::vector<double> weights(K, 0.0);
    for (std::size_t c = 0; c < K; ++c) {
        const double n = static_cast<double>(dataset.class_counts[c]);
        if (n == 0.0) continue;
        switch (kind) {
            case SamplerKind::instance_balanced: weights[c] = n; break;
            case SamplerKind::class_balanced: weights[c] = 1.0; break;
            case SamplerKind::square_root: weights[c] = std::sqrt(n); break;
        }
    }
    double total = 0.0;
    for (double w : weights) total += w;
    marginal_.resize(K);
    for (std::size_t c = 0; c < K; ++c) marginal_[c] = weights[c] / total;
    class_dist_ = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
}

std::size_t Sampler::next_index(Rng& rng) {
    if (kind_ == SamplerKind::instance_balanced) {
        std::uniform_int_distribution<std::size_t> pick(0, num_samples_ - 1);
        return pick(rng);
    }
    const auto& members = by_class_[class_dist_(rng)];
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    return members[pick(rng)];
}

}  // namespace ltcal
