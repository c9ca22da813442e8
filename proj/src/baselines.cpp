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


#include "ltcal/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ltcal/error.hpp"
#include "ltcal/kernels.hpp"

namespace ltcal {

Vector logit_adjust(std::span<const double> logits, const ClassFrequencies& freq, const LogitAdjustConfig& cfg) {
    if (freq.r.size() != logits.size()) throw InvalidArgument("frequency vector has wrong length");
    Vector out(logits.size());
    for (std::size_t j = 0; j < logits.size(); ++j) {
        if (!(freq.r[j] > 0.0)) throw InvalidArgument("class " + std::to_string(j) + " has zero frequency");
        out[j] = logits[j] - cfg.lambda * std::log(freq.r[j]);
    }
    return out;
}

Vector tde_adjust(std::span<const double> logits, std::span<const double> x, const HeadParams& head,
                  const TdeConfig& cfg) {
    const auto& e = cfg.mean_feature;
    if (x.size() != e.size() || head.dim() != e.size()) throw InvalidArgument("TDE feature dimension mismatch");
    if (logits.size() != head.num_classes()) throw InvalidArgument("TDE logits have wrong length");
    const double x_norm = std::sqrt(kernels::squared_norm(x));
    const double e_norm = std::sqrt(kernels::squared_norm(e));
    const double cos = x_norm == 0.0 || e_norm == 0.0 ? 0.0 : kernels::dot(x, e) / (x_norm * e_norm);
    const double distance = 1.0 - cos;
    Vector out(logits.size());
    for (std::size_t j = 0; j < logits.size(); ++j)
        out[j] = logits[j] - cfg.lambda * distance * kernels::dot(head.weights.row(j), e);
    return out;
}

Vector mean_encoded_feature(const LongTailDataset& dataset, const EncoderParams& encoder) {
    if (dataset.size() == 0) throw InvalidArgument("empty dataset");
    Vector mean(encoder.output_dim(dataset.dim()), 0.0);
    for (std::size_t i = 0; i < dataset.size(); ++i) kernels::axpy(1.0, encode(encoder, dataset.sample(i)), mean);
    for (double& v : mean) v /= static_cast<double>(dataset.size());
    return mean;
}

HeadParams crt_train(const LongTailDataset& dataset, const EncoderParams& encoder, HeadKind kind, double scale,
                     const SgdConfig& cfg) {
    SgdConfig c = cfg;
    c.sampler = SamplerKind::class_balanced;
    const HeadParams init = init_head(dataset.num_classes, encoder.output_dim(dataset.dim()), kind, scale, cfg.seed);
    return train_head(dataset, encoder, init, c).head;
}

Vector lws_apply(std::span<const double> logits, std::span<const double> scales) {
    if (logits.size() != scales.size()) throw InvalidArgument("LWS scale vector has wrong length");
    Vector out(logits.size());
    for (std::size_t j = 0; j < logits.size(); ++j) out[j] = scales[j] * logits[j];
    return out;
}

Vector lws_gradients(const FrozenBatch& batch, std::span<const double> scales, double* loss_out) {
    if (batch.size() == 0) throw InvalidArgument("empty batch");
    const std::size_t K = scales.size();
    if (batch.logits.cols() != K) throw InvalidArgument("LWS scale vector has wrong length");
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    Vector grad(K, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto z = batch.logits.row(i);
        const Vector zhat = lws_apply(z, scales);
        const double lse = log_sum_exp(zhat);
        const auto y = batch.labels[i];
        total += lse - zhat[y];
        for (std::size_t j = 0; j < K; ++j)
            grad[j] += inv_b * (std::exp(zhat[j] - lse) - (j == y ? 1.0 : 0.0)) * z[j];
    }
    if (loss_out) *loss_out = total * inv_b;
    return grad;
}

double lws_loss(const FrozenBatch& batch, std::span<const double> scales) {
    double loss = 0.0;
    lws_gradients(batch, scales, &loss);
    return loss;
}

Vector lws_train(const LongTailDataset& dataset, const EncoderParams& encoder, const HeadParams& head,
                 const SgdConfig& cfg) {
    const FrozenBatch all = freeze(dataset, encoder, head);
    if (head.num_classes() != dataset.num_classes) throw InvalidArgument("head/dataset class count mismatch");
    SgdConfig c = cfg;
    c.sampler = SamplerKind::class_balanced;
    Vector scales(head.num_classes(), 1.0);
    MomentumSgd opt(scales.size());
    run_sgd(dataset, c, [&](std::span<const std::size_t> batch, double lr) {
        double loss = 0.0;
        const Vector g = lws_gradients(gather(all, batch), scales, &loss);
        opt.step(scales, g, lr, c.momentum);
        for (double& f : scales) f = std::max(f, kLwsMinScale);
        return loss;
    });
    return scales;
}

}  // namespace ltcal
