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


#include "ltcal/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ltcal/error.hpp"
#include "ltcal/kernels.hpp"

namespace ltcal {

CalibrationParams CalibrationParams::initial(std::size_t num_classes, std::size_t dim, CalibrationFlags flags) {
    return CalibrationParams{Vector(num_classes, 1.0), Vector(num_classes, 0.0), Vector(dim, 0.0), 0.0, flags};
}

void CalibrationParams::validate() const {
    if (beta.size() != alpha.size()) throw InvalidArgument("calibration alpha/beta lengths differ");
    auto finite = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (!finite(alpha) || !finite(beta) || !finite(conf_weights) || !std::isfinite(conf_bias))
        throw InvalidArgument("calibration parameters must be finite");
}

double logistic(double t) noexcept {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double confidence(const CalibrationParams& params, std::span<const double> x) {
    if (!params.flags.confidence) return 1.0;
    if (x.size() != params.dim())
        throw InvalidArgument("confidence gate expects " + std::to_string(params.dim()) + " features, got " +
                              std::to_string(x.size()));
    return logistic(kernels::dot(params.conf_weights, x) + params.conf_bias);
}

void calibrate_into(std::span<const double> logits, double sigma, const CalibrationParams& params,
                    std::span<double> out) {
    const std::size_t K = logits.size();
    if (params.num_classes() != K || out.size() != K) throw InvalidArgument("calibration has wrong class count");
    const bool mt = params.flags.magnitude;
    const bool mg = params.flags.margin;
    for (std::size_t j = 0; j < K; ++j) {
        const double a = mt ? params.alpha[j] : 0.0;
        const double b = mg ? params.beta[j] : 0.0;
        out[j] = (1.0 + sigma * a) * logits[j] + sigma * b;
    }
}

Vector calibrate(std::span<const double> logits, double sigma, const CalibrationParams& params) {
    Vector out(logits.size());
    calibrate_into(logits, sigma, params, out);
    return out;
}

double log_sum_exp(std::span<const double> logits) noexcept {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - m);
    return m + std::log(sum);
}

Vector predict_distribution(std::span<const double> logits) {
    if (logits.empty()) return {};
    const double m = *std::max_element(logits.begin(), logits.end());
    Vector p(logits.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) sum += (p[j] = std::exp(logits[j] - m));
    for (double& v : p) v /= sum;
    return p;
}

ReweightVector grw_weights(const ClassFrequencies& freq, double rho) {
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw InvalidArgument("rho must be finite and >= 0");
    const std::size_t K = freq.r.size();
    if (K == 0) throw InvalidArgument("no class frequencies");
    // (1/r_c)^rho evaluated as exp(-rho log r_c - max) to stay finite for tiny r.
    Vector log_w(K);
    for (std::size_t c = 0; c < K; ++c) {
        if (!(freq.r[c] > 0.0)) throw InvalidArgument("class " + std::to_string(c) + " has zero frequency");
        log_w[c] = rho == 0.0 ? 0.0 : -rho * std::log(freq.r[c]);
    }
    const double m = *std::max_element(log_w.begin(), log_w.end());
    ReweightVector out{Vector(K), rho};
    double total = 0.0;
    for (std::size_t c = 0; c < K; ++c) total += (out.w[c] = std::exp(log_w[c] - m));
    for (double& w : out.w) w /= total;
    return out;
}

FrozenBatch freeze(const LongTailDataset& dataset, const EncoderParams& encoder, const HeadParams& head) {
    std::vector<std::size_t> all(dataset.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return freeze(dataset, all, encoder, head);
}

FrozenBatch freeze(const LongTailDataset& dataset, std::span<const std::size_t> indices,
                   const EncoderParams& encoder, const HeadParams& head) {
    const std::size_t d = encoder.output_dim(dataset.dim());
    if (d != head.dim())
        throw InvalidArgument("encoder output (" + std::to_string(d) + ") does not match head input (" +
                              std::to_string(head.dim()) + ")");
    FrozenBatch out{Matrix(indices.size(), d), Matrix(indices.size(), head.num_classes()), {}};
    out.labels.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const Vector x = encode(encoder, dataset.sample(indices[i]));
        std::copy(x.begin(), x.end(), out.features.row(i).begin());
        score_into(head, x, out.logits.row(i));
        out.labels.push_back(dataset.labels[indices[i]]);
    }
    return out;
}

FrozenBatch gather(const FrozenBatch& all, std::span<const std::size_t> indices) {
    FrozenBatch out{Matrix(indices.size(), all.features.cols()), Matrix(indices.size(), all.logits.cols()), {}};
    out.labels.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = indices[i];
        std::copy_n(all.features.row(src).begin(), all.features.cols(), out.features.row(i).begin());
        std::copy_n(all.logits.row(src).begin(), all.logits.cols(), out.logits.row(i).begin());
        out.labels.push_back(all.labels[src]);
    }
    return out;
}

namespace {

void check_batch(const FrozenBatch& batch, const CalibrationParams& params, const ReweightVector& weights) {
    if (batch.size() == 0) throw InvalidArgument("empty batch");
    if (batch.logits.cols() != params.num_classes() || weights.w.size() != params.num_classes())
        throw InvalidArgument("class count mismatch between logits, calibration and weights");
    if (params.flags.confidence && batch.features.cols() != params.dim())
        throw InvalidArgument("feature dimension mismatch between batch and confidence gate");
}

Vector gate_values(const FrozenBatch& batch, const CalibrationParams& params) {
    Vector sigma(batch.size(), 1.0);
    if (params.flags.confidence)
        for (std::size_t i = 0; i < batch.size(); ++i)
            sigma[i] = logistic(kernels::dot(params.conf_weights, batch.features.row(i)) + params.conf_bias);
    return sigma;
}

}  // namespace

double disalign_loss(const FrozenBatch& batch, const CalibrationParams& params, const ReweightVector& weights) {
    check_batch(batch, params, weights);
    const std::size_t K = params.num_classes();
    const Vector sigma = gate_values(batch, params);
    Matrix zhat(batch.size(), K);
    for (std::size_t i = 0; i < batch.size(); ++i) calibrate_into(batch.logits.row(i), sigma[i], params, zhat.row(i));

    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto row = zhat.row(i);
        const auto y = batch.labels[i];
        total += weights.w[y] * (log_sum_exp(row) - row[y]);
    }
    return total / static_cast<double>(batch.size());
}

double disalign_loss(const LongTailDataset& dataset, std::span<const std::size_t> batch,
                     const EncoderParams& encoder, const HeadParams& head, const CalibrationParams& params,
                     const ReweightVector& weights) {
    return disalign_loss(freeze(dataset, batch, encoder, head), params, weights);
}

CalibrationGradients disalign_gradients(const FrozenBatch& batch, const CalibrationParams& params,
                                        const ReweightVector& weights, double* loss_out) {
    check_batch(batch, params, weights);
    const std::size_t K = params.num_classes();
    const std::size_t d = params.dim();
    const bool mt = params.flags.magnitude;
    const bool mg = params.flags.margin;
    const bool gate = params.flags.confidence;
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    CalibrationGradients g{Vector(K, 0.0), Vector(K, 0.0), Vector(d, 0.0), 0.0};
    Vector zhat(K);
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto z = batch.logits.row(i);
        const auto x = batch.features.row(i);
        const auto y = batch.labels[i];
        const double sigma = gate ? logistic(kernels::dot(params.conf_weights, x) + params.conf_bias) : 1.0;
        calibrate_into(z, sigma, params, zhat);

        const double m = *std::max_element(zhat.begin(), zhat.end());
        double sum = 0.0;
        for (double v : zhat) sum += std::exp(v - m);
        const double lse = m + std::log(sum);
        total += weights.w[y] * (lse - zhat[y]);

        const double scale = weights.w[y] * inv_b;
        double d_sigma = 0.0;
        for (std::size_t j = 0; j < K; ++j) {
            const double p = std::exp(zhat[j] - lse);
            const double dz = scale * (p - (j == y ? 1.0 : 0.0));
            const double a = mt ? params.alpha[j] : 0.0;
            const double b = mg ? params.beta[j] : 0.0;
            if (mt) g.alpha[j] += dz * sigma * z[j];
            if (mg) g.beta[j] += dz * sigma;
            d_sigma += dz * (a * z[j] + b);
        }
        if (gate) {
            const double d_pre = d_sigma * sigma * (1.0 - sigma);
            kernels::axpy(d_pre, x, g.conf_weights);
            g.conf_bias += d_pre;
        }
    }
    if (loss_out) *loss_out = total * inv_b;
    return g;
}

CalibrationGradients disalign_gradients(const LongTailDataset& dataset, std::span<const std::size_t> batch,
                                        const EncoderParams& encoder, const HeadParams& head,
                                        const CalibrationParams& params, const ReweightVector& weights) {
    return disalign_gradients(freeze(dataset, batch, encoder, head), params, weights);
}

Vector calibrated_logits(const HeadParams& head, const CalibrationParams& params, std::span<const double> x) {
    const Vector z = score(head, x);
    return calibrate(z, confidence(params, x), params);
}

WeightCurve export_weight_curve(const ClassFrequencies& freq, std::span<const double> rhos) {
    if (rhos.empty()) throw InvalidArgument("rho list is empty");
    const std::size_t K = freq.r.size();
    WeightCurve curve;
    curve.class_index.resize(K);
    std::iota(curve.class_index.begin(), curve.class_index.end(), std::size_t{0});
    std::stable_sort(curve.class_index.begin(), curve.class_index.end(),
                     [&](std::size_t a, std::size_t b) { return freq.r[a] > freq.r[b]; });
    curve.rhos.assign(rhos.begin(), rhos.end());
    curve.frequency.resize(K);
    curve.weights = Matrix(K, rhos.size());
    for (std::size_t k = 0; k < rhos.size(); ++k) {
        const auto w = grw_weights(freq, rhos[k]);
        for (std::size_t rank = 0; rank < K; ++rank) curve.weights(rank, k) = w.w[curve.class_index[rank]];
    }
    for (std::size_t rank = 0; rank < K; ++rank) curve.frequency[rank] = freq.r[curve.class_index[rank]];
    return curve;
}

}  // namespace ltcal
