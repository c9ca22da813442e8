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


#include "ltcal/heads.hpp"

#include <cmath>
#include <string>

#include "ltcal/error.hpp"
#include "ltcal/kernels.hpp"
#include "ltcal/random.hpp"

namespace ltcal {

namespace {

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

void fill_uniform(std::span<double> out, double bound, Rng& rng) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& v : out) v = u(rng);
}

}  // namespace

void EncoderParams::validate() const {
    if (!enabled) return;
    if (hidden_weights.rows() < 1 || hidden_weights.cols() < 1) throw InvalidArgument("encoder has empty hidden layer");
    if (hidden_bias.size() != hidden_weights.rows())
        throw InvalidArgument("encoder bias length " + std::to_string(hidden_bias.size()) + " != hidden size " +
                              std::to_string(hidden_weights.rows()));
    if (!all_finite(hidden_weights.flat()) || !all_finite(hidden_bias))
        throw InvalidArgument("encoder has non-finite parameters");
}

std::string_view to_string(HeadKind k) noexcept { return k == HeadKind::linear ? "linear" : "cosine"; }

HeadKind parse_head_kind(std::string_view s) {
    if (s == "linear") return HeadKind::linear;
    if (s == "cosine") return HeadKind::cosine;
    throw InvalidArgument("unknown head kind '" + std::string(s) + "'");
}

void HeadParams::validate() const {
    if (weights.rows() < 1 || weights.cols() < 1) throw InvalidArgument("head has no weights");
    if (!all_finite(weights.flat())) throw InvalidArgument("head has non-finite weights");
    if (kind == HeadKind::cosine) {
        if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("cosine head scale must be > 0");
        for (std::size_t j = 0; j < weights.rows(); ++j)
            if (kernels::squared_norm(weights.row(j)) == 0.0)
                throw InvalidArgument("cosine head row " + std::to_string(j) + " has zero norm");
    }
}

EncoderParams init_encoder(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed) {
    if (input_dim < 1 || hidden_dim < 1) throw InvalidArgument("encoder dimensions must be >= 1");
    EncoderParams enc{true, Matrix(hidden_dim, input_dim), Vector(hidden_dim)};
    Rng rng = make_stream(seed, StreamTag::encoder_init);
    const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
    fill_uniform(enc.hidden_weights.flat(), bound, rng);
    fill_uniform(enc.hidden_bias, bound, rng);
    return enc;
}

HeadParams init_head(std::size_t num_classes, std::size_t dim, HeadKind kind, double scale, std::uint64_t seed) {
    if (num_classes < 1 || dim < 1) throw InvalidArgument("head dimensions must be >= 1");
    HeadParams head{Matrix(num_classes, dim), kind, scale};
    Rng rng = make_stream(seed, StreamTag::head_init);
    fill_uniform(head.weights.flat(), 1.0 / std::sqrt(static_cast<double>(dim)), rng);
    return head;
}

Vector encode(const EncoderParams& encoder, std::span<const double> raw) {
    if (!encoder.enabled) return Vector(raw.begin(), raw.end());
    if (raw.size() != encoder.input_dim())
        throw InvalidArgument("encoder expects " + std::to_string(encoder.input_dim()) + " inputs, got " +
                              std::to_string(raw.size()));
    const std::size_t h = encoder.hidden_weights.rows();
    Vector out(h);
    for (std::size_t k = 0; k < h; ++k) {
        const double pre = kernels::dot(encoder.hidden_weights.row(k), raw) + encoder.hidden_bias[k];
        out[k] = pre > 0.0 ? pre : 0.0;
    }
    return out;
}

Vector encode(const EncoderParams& encoder, std::span<const float> raw) {
    const Vector widened(raw.begin(), raw.end());
    return encode(encoder, std::span<const double>(widened));
}

Matrix encode_all(const EncoderParams& encoder, const LongTailDataset& dataset) {
    const std::size_t out_dim = encoder.output_dim(dataset.dim());
    Matrix out(dataset.size(), out_dim);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Vector x = encode(encoder, dataset.sample(i));
        std::copy(x.begin(), x.end(), out.row(i).begin());
    }
    return out;
}

void score_into(const HeadParams& head, std::span<const double> x, std::span<double> logits) {
    const std::size_t K = head.num_classes();
    if (x.size() != head.dim())
        throw InvalidArgument("head expects " + std::to_string(head.dim()) + " features, got " +
                              std::to_string(x.size()));
    if (logits.size() != K) throw InvalidArgument("logit buffer has wrong length");
    if (head.kind == HeadKind::linear) {
        for (std::size_t j = 0; j < K; ++j) logits[j] = kernels::dot(head.weights.row(j), x);
        return;
    }
    // A zero vector has no direction; its cosine with anything is taken as 0.
    // Dead ReLU encoders do produce all-zero features.
    const double x_norm = std::sqrt(kernels::squared_norm(x));
    for (std::size_t j = 0; j < K; ++j) {
        const auto w = head.weights.row(j);
        const double w_norm = std::sqrt(kernels::squared_norm(w));
        if (x_norm == 0.0 || w_norm == 0.0) {
            logits[j] = 0.0;
            continue;
        }
        logits[j] = head.scale * kernels::dot(w, x) / (w_norm * x_norm);
    }
}

Vector score(const HeadParams& head, std::span<const double> x) {
    Vector z(head.num_classes());
    score_into(head, x, z);
    return z;
}

Matrix score_all(const HeadParams& head, const Matrix& features) {
    Matrix out(features.rows(), head.num_classes());
    for (std::size_t i = 0; i < features.rows(); ++i) score_into(head, features.row(i), out.row(i));
    return out;
}

HeadParams tau_normalize(const HeadParams& head, double tau) {
    HeadParams out = head;
    if (tau == 0.0) return out;
    for (std::size_t j = 0; j < out.num_classes(); ++j) {
        auto row = out.weights.row(j);
        const double norm = std::sqrt(kernels::squared_norm(row));
        if (norm == 0.0) throw InvalidArgument("tau-normalization of zero-norm row " + std::to_string(j));
        const double divisor = std::pow(norm, tau);
        for (double& v : row) v /= divisor;
    }
    return out;
}

HeadParams ncm_fit(const LongTailDataset& dataset, const EncoderParams& encoder, double scale) {
    const std::size_t K = dataset.num_classes;
    const std::size_t d = encoder.output_dim(dataset.dim());
    HeadParams head{Matrix(K, d), HeadKind::cosine, scale};
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Vector x = encode(encoder, dataset.sample(i));
        kernels::axpy(1.0, x, head.weights.row(dataset.labels[i]));
    }
    for (std::size_t c = 0; c < K; ++c) {
        if (dataset.class_counts[c] == 0) throw InvalidArgument("class " + std::to_string(c) + " has no samples");
        const double inv = 1.0 / static_cast<double>(dataset.class_counts[c]);
        for (double& v : head.weights.row(c)) v *= inv;
    }
    return head;
}

std::size_t argmax(std::span<const double> values) noexcept {
    std::size_t best = 0;
    for (std::size_t j = 1; j < values.size(); ++j)
        if (values[j] > values[best]) best = j;
    return best;
}

}  // namespace ltcal
