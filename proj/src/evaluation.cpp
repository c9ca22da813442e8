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


#include "ltcal/evaluation.hpp"

#include <string>

#include "ltcal/error.hpp"
#include "ltcal/format.hpp"

namespace ltcal {

void GroupThresholds::validate() const {
    if (few_max < 1 || many_min <= few_max) throw InvalidArgument("group thresholds need many_min > few_max >= 1");
}

std::string_view to_string(ShotGroup g) noexcept {
    switch (g) {
        case ShotGroup::many: return "many";
        case ShotGroup::medium: return "medium";
        case ShotGroup::few: return "few";
    }
    return "unknown";
}

std::vector<ShotGroup> assign_groups(std::span<const std::uint64_t> train_counts, const GroupThresholds& thresholds) {
    thresholds.validate();
    std::vector<ShotGroup> out;
    out.reserve(train_counts.size());
    for (auto n : train_counts) {
        if (n > thresholds.many_min)
            out.push_back(ShotGroup::many);
        else if (n < thresholds.few_max)
            out.push_back(ShotGroup::few);
        else
            out.push_back(ShotGroup::medium);
    }
    return out;
}

Predictor head_predictor(EncoderParams encoder, HeadParams head, std::string description) {
    return {std::move(description), [encoder = std::move(encoder), head = std::move(head)](std::span<const float> raw) {
                return argmax(score(head, encode(encoder, raw)));
            }};
}

Predictor calibrated_predictor(EncoderParams encoder, HeadParams head, CalibrationParams params,
                               std::string description) {
    return {std::move(description),
            [encoder = std::move(encoder), head = std::move(head), params = std::move(params)](std::span<const float> raw) {
                return argmax(calibrated_logits(head, params, encode(encoder, raw)));
            }};
}

Predictor logit_adjust_predictor(EncoderParams encoder, HeadParams head, ClassFrequencies freq,
                                 LogitAdjustConfig cfg) {
    std::string desc = "logit-adjust lambda=" + format_double(cfg.lambda);
    return {std::move(desc), [encoder = std::move(encoder), head = std::move(head), freq = std::move(freq),
                              cfg](std::span<const float> raw) {
                return argmax(logit_adjust(score(head, encode(encoder, raw)), freq, cfg));
            }};
}

Predictor tde_predictor(EncoderParams encoder, HeadParams head, TdeConfig cfg) {
    std::string desc = "tde lambda=" + format_double(cfg.lambda);
    return {std::move(desc),
            [encoder = std::move(encoder), head = std::move(head), cfg = std::move(cfg)](std::span<const float> raw) {
                const Vector x = encode(encoder, raw);
                return argmax(tde_adjust(score(head, x), x, head, cfg));
            }};
}

Predictor lws_predictor(EncoderParams encoder, HeadParams head, Vector scales) {
    return {"lws", [encoder = std::move(encoder), head = std::move(head), scales = std::move(scales)](
                       std::span<const float> raw) {
                return argmax(lws_apply(score(head, encode(encoder, raw)), scales));
            }};
}

EvalReport evaluate(const LongTailDataset& test_set, const Predictor& predictor,
                    std::span<const std::uint64_t> train_counts, const GroupThresholds& thresholds) {
    const std::size_t K = test_set.num_classes;
    if (train_counts.size() != K)
        throw InvalidArgument("train counts cover " + std::to_string(train_counts.size()) + " classes, test set " +
                              std::to_string(K));
    EvalReport rep;
    rep.thresholds = thresholds;
    rep.predictor = predictor.description;
    rep.train_counts.assign(train_counts.begin(), train_counts.end());
    rep.groups = assign_groups(train_counts, thresholds);
    rep.per_class_total = test_set.class_counts;
    rep.per_class_correct.assign(K, 0);
    for (std::size_t c = 0; c < K; ++c)
        if (rep.per_class_total[c] == 0) throw InvalidArgument("class " + std::to_string(c) + " is absent from the test set");

    for (std::size_t i = 0; i < test_set.size(); ++i)
        if (predictor.classify(test_set.sample(i)) == test_set.labels[i]) ++rep.per_class_correct[test_set.labels[i]];

    rep.per_class_accuracy.resize(K);
    std::array<double, 3> group_sum{};
    std::array<std::size_t, 3> group_n{};
    double total = 0.0;
    for (std::size_t c = 0; c < K; ++c) {
        const double acc =
            static_cast<double>(rep.per_class_correct[c]) / static_cast<double>(rep.per_class_total[c]);
        rep.per_class_accuracy[c] = acc;
        total += acc;
        const auto g = static_cast<std::size_t>(rep.groups[c]);
        group_sum[g] += acc;
        ++group_n[g];
    }
    rep.balanced_accuracy = total / static_cast<double>(K);
    for (std::size_t g = 0; g < 3; ++g)
        if (group_n[g] > 0) rep.group_accuracy[g] = group_sum[g] / static_cast<double>(group_n[g]);
    return rep;
}

std::vector<SweepRow> rho_sweep(const LongTailDataset& dataset, const EncoderParams& encoder, const HeadParams& head,
                                std::span<const double> rhos, CalibrationFlags flags, const SgdConfig& sgd,
                                const LongTailDataset& test_set, const GroupThresholds& thresholds) {
    if (rhos.empty()) throw InvalidArgument("rho list is empty");
    std::vector<SweepRow> rows;
    rows.reserve(rhos.size());
    for (double rho : rhos) {
        const auto calib = train_disalign(dataset, encoder, head, rho, flags, sgd);
        const auto pred = calibrated_predictor(encoder, head, calib.params, "disalign rho=" + format_double(rho));
        rows.push_back({rho, evaluate(test_set, pred, dataset.class_counts, thresholds)});
    }
    return rows;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t test_twin_seed(std::uint64_t seed) noexcept { return splitmix64(seed ^ 0x7e57'0000'0000'0001ull); }
std::uint64_t bound_twin_seed(std::uint64_t seed) noexcept { return splitmix64(seed ^ 0xb0d0'0000'0000'0002ull); }

std::vector<BoundStudyRow> bound_study(const BoundStudyConfig& cfg) {
    if (cfg.samplers.empty()) throw InvalidArgument("bound study needs at least one sampler");
    const LongTailDataset train = generate_longtail(cfg.gen);
    const LongTailDataset test = balanced_twin(train, cfg.test_per_class, test_twin_seed(cfg.gen.seed));
    const LongTailDataset ideal = balanced_twin(train, cfg.bound_per_class, bound_twin_seed(cfg.gen.seed));

    std::vector<BoundStudyRow> rows;
    for (SamplerKind kind : cfg.samplers) {
        SgdConfig stage1 = cfg.stage1;
        stage1.sampler = kind;
        const auto enc0 =
            cfg.use_encoder ? init_encoder(train.dim(), cfg.hidden_dim, stage1.seed) : EncoderParams::identity();
        const auto head0 =
            init_head(train.num_classes, enc0.output_dim(train.dim()), cfg.head_kind, cfg.head_scale, stage1.seed);
        const auto joint = train_joint(train, enc0, head0, stage1);
        const auto baseline = evaluate(test, head_predictor(joint.encoder, joint.head, "joint " + std::string(to_string(kind))),
                                       train.class_counts, cfg.thresholds);
        const auto bound_head = train_bound(ideal, joint.encoder, cfg.head_kind, cfg.head_scale, cfg.bound);
        const auto bound = evaluate(test, head_predictor(joint.encoder, bound_head, "cls-bound " + std::string(to_string(kind))),
                                    train.class_counts, cfg.thresholds);
        rows.push_back({kind, baseline, bound});
    }
    return rows;
}

}  // namespace ltcal
