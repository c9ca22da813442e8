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


#include "ltcal/trainer.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ltcal/error.hpp"
#include "ltcal/kernels.hpp"
#include "ltcal/random.hpp"

namespace ltcal {

std::string_view to_string(Schedule s) noexcept { return s == Schedule::constant ? "constant" : "cosine_to_zero"; }

Schedule parse_schedule(std::string_view s) {
    if (s == "cosine_to_zero" || s == "cosine") return Schedule::cosine_to_zero;
    if (s == "constant") return Schedule::constant;
    throw InvalidArgument("unknown schedule '" + std::string(s) + "'");
}

void SgdConfig::validate() const {
    if (!(lr0 >= 0.0) || !std::isfinite(lr0)) throw InvalidArgument("lr0 must be finite and >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw InvalidArgument("weight_decay must be >= 0");
}

double lr_at(const SgdConfig& cfg, std::size_t step, std::size_t total_steps) {
    if (cfg.schedule == Schedule::constant || total_steps == 0) return cfg.lr0;
    const double t = static_cast<double>(step) / static_cast<double>(total_steps);
    return cfg.lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

void MomentumSgd::step(std::span<double> params, std::span<const double> grad, double lr, double momentum) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        velocity_[i] = momentum * velocity_[i] + grad[i];
        params[i] -= lr * velocity_[i];
    }
}

TrainTrace run_sgd(const LongTailDataset& dataset, const SgdConfig& cfg,
                   const std::function<double(std::span<const std::size_t>, double)>& step) {
    cfg.validate();
    TrainTrace trace;
    if (cfg.epochs == 0) return trace;
    Sampler sampler(cfg.sampler, dataset);
    Rng rng = make_stream(cfg.seed, StreamTag::sampler);

    const std::size_t n = dataset.size();
    const std::size_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t total_steps = steps_per_epoch * cfg.epochs;
    std::vector<std::size_t> batch;
    batch.reserve(cfg.batch_size);

    std::size_t global_step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        trace.lr.push_back(lr_at(cfg, global_step, total_steps));
        for (std::size_t s = 0; s < steps_per_epoch; ++s, ++global_step) {
            const std::size_t len = std::min(cfg.batch_size, n - s * cfg.batch_size);
            batch.clear();
            for (std::size_t k = 0; k < len; ++k) batch.push_back(sampler.next_index(rng));
            const double loss = step(batch, lr_at(cfg, global_step, total_steps));
            if (!std::isfinite(loss))
                throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                       std::to_string(global_step));
            epoch_loss += loss * static_cast<double>(len);
        }
        trace.loss.push_back(epoch_loss / static_cast<double>(n));
    }
    return trace;
}

namespace {

// Row norms of a cosine head; empty for linear heads.
Vector head_row_norms(const HeadParams& head) {
    if (head.kind != HeadKind::cosine) return {};
    Vector norms(head.num_classes());
    for (std::size_t j = 0; j < norms.size(); ++j) {
        norms[j] = std::sqrt(kernels::squared_norm(head.weights.row(j)));
        if (norms[j] == 0.0) throw InvalidArgument("cosine head row " + std::to_string(j) + " has zero norm");
    }
    return norms;
}

struct HeadScratch {
    Vector logits;
    Vector dz;
    Vector unit_a;
};

// Cross-entropy of one sample through the head. Accumulates d(loss)/d(weights)
// scaled by `weight` into `grad`, and d(loss)/d(a) into `grad_a` when non-empty.
// Returns the unscaled sample loss.
double head_backward(const HeadParams& head, const Vector& row_norms, std::span<const double> a, std::uint32_t y,
                     double weight, Matrix& grad, std::span<double> grad_a, HeadScratch& s) {
    const std::size_t K = head.num_classes();
    s.logits.resize(K);
    s.dz.resize(K);
    score_into(head, a, s.logits);

    const double m = *std::max_element(s.logits.begin(), s.logits.end());
    double sum = 0.0;
    for (double z : s.logits) sum += std::exp(z - m);
    const double lse = m + std::log(sum);
    for (std::size_t j = 0; j < K; ++j) s.dz[j] = weight * (std::exp(s.logits[j] - lse) - (j == y ? 1.0 : 0.0));

    if (head.kind == HeadKind::linear) {
        for (std::size_t j = 0; j < K; ++j) {
            kernels::axpy(s.dz[j], a, grad.row(j));
            if (!grad_a.empty()) kernels::axpy(s.dz[j], head.weights.row(j), grad_a);
        }
        return lse - s.logits[y];
    }

    // z_j = scale * cos_j with cos_j = (w_j . a) / (|w_j| |a|).
    const double a_norm = std::sqrt(kernels::squared_norm(a));
    if (a_norm == 0.0) return lse - s.logits[y];  // constant logits: no gradient
    s.unit_a.assign(a.begin(), a.end());
    for (double& v : s.unit_a) v /= a_norm;
    for (std::size_t j = 0; j < K; ++j) {
        if (s.dz[j] == 0.0) continue;
        const auto w = head.weights.row(j);
        const double cos_j = s.logits[j] / head.scale;
        // d z_j / d w_j = scale / |w_j| * (a/|a| - cos_j * w_j/|w_j|)
        const double gw = s.dz[j] * head.scale / row_norms[j];
        kernels::axpy(gw, s.unit_a, grad.row(j));
        kernels::axpy(-gw * cos_j / row_norms[j], w, grad.row(j));
        if (!grad_a.empty()) {
            // d z_j / d a = scale / |a| * (w_j/|w_j| - cos_j * a/|a|)
            const double ga = s.dz[j] * head.scale / a_norm;
            kernels::axpy(ga / row_norms[j], w, grad_a);
            kernels::axpy(-ga * cos_j, s.unit_a, grad_a);
        }
    }
    return lse - s.logits[y];
}

void check_dims(const LongTailDataset& dataset, const EncoderParams& encoder, const HeadParams& head) {
    if (encoder.enabled && encoder.input_dim() != dataset.dim())
        throw InvalidArgument("encoder input dim " + std::to_string(encoder.input_dim()) + " != dataset dim " +
                              std::to_string(dataset.dim()));
    if (encoder.output_dim(dataset.dim()) != head.dim())
        throw InvalidArgument("encoder output dim does not match head dim " + std::to_string(head.dim()));
    if (head.num_classes() != dataset.num_classes)
        throw InvalidArgument("head has " + std::to_string(head.num_classes()) + " classes, dataset has " +
                              std::to_string(dataset.num_classes));
}

}  // namespace

JointGradients joint_gradients(const LongTailDataset& dataset, std::span<const std::size_t> batch,
                               const EncoderParams& encoder, const HeadParams& head, double* loss_out) {
    check_dims(dataset, encoder, head);
    if (batch.empty()) throw InvalidArgument("empty batch");
    const std::size_t d_in = dataset.dim();
    const std::size_t h = encoder.output_dim(d_in);
    JointGradients g;
    g.head_weights = Matrix(head.num_classes(), head.dim());
    if (encoder.enabled) {
        g.encoder_weights = Matrix(h, d_in);
        g.encoder_bias = Vector(h, 0.0);
    }
    const Vector norms = head_row_norms(head);
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    HeadScratch scratch;
    Vector x(d_in), pre(h), a(h), grad_a(h);
    double total = 0.0;
    for (std::size_t idx : batch) {
        const auto raw = dataset.sample(idx);
        std::copy(raw.begin(), raw.end(), x.begin());
        if (encoder.enabled) {
            for (std::size_t k = 0; k < h; ++k) {
                pre[k] = kernels::dot(encoder.hidden_weights.row(k), x) + encoder.hidden_bias[k];
                a[k] = pre[k] > 0.0 ? pre[k] : 0.0;
            }
        } else {
            a = x;
        }
        std::fill(grad_a.begin(), grad_a.end(), 0.0);
        total += head_backward(head, norms, a, dataset.labels[idx], inv_b, g.head_weights,
                               encoder.enabled ? std::span<double>(grad_a) : std::span<double>{}, scratch);
        if (!encoder.enabled) continue;
        for (std::size_t k = 0; k < h; ++k) {
            if (pre[k] <= 0.0 || grad_a[k] == 0.0) continue;
            kernels::axpy(grad_a[k], x, g.encoder_weights.row(k));
            g.encoder_bias[k] += grad_a[k];
        }
    }
    if (loss_out) *loss_out = total * inv_b;
    return g;
}

double joint_loss(const LongTailDataset& dataset, std::span<const std::size_t> batch, const EncoderParams& encoder,
                  const HeadParams& head) {
    check_dims(dataset, encoder, head);
    if (batch.empty()) throw InvalidArgument("empty batch");
    double total = 0.0;
    Vector z(head.num_classes());
    for (std::size_t idx : batch) {
        const Vector a = encode(encoder, dataset.sample(idx));
        score_into(head, a, z);
        const double m = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - m);
        total += m + std::log(sum) - z[dataset.labels[idx]];
    }
    return total / static_cast<double>(batch.size());
}

Matrix head_gradients(const Matrix& features, std::span<const std::uint32_t> labels,
                      std::span<const std::size_t> batch, const HeadParams& head, double* loss_out) {
    if (batch.empty()) throw InvalidArgument("empty batch");
    if (features.cols() != head.dim()) throw InvalidArgument("feature dim does not match head dim");
    Matrix grad(head.num_classes(), head.dim());
    const Vector norms = head_row_norms(head);
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    HeadScratch scratch;
    double total = 0.0;
    for (std::size_t idx : batch)
        total += head_backward(head, norms, features.row(idx), labels[idx], inv_b, grad, {}, scratch);
    if (loss_out) *loss_out = total * inv_b;
    return grad;
}

namespace {

void add_weight_decay(std::span<double> grad, std::span<const double> params, double wd) {
    if (wd == 0.0) return;
    kernels::axpy(wd, params, grad);
}

}  // namespace

JointResult train_joint(const LongTailDataset& dataset, const EncoderParams& encoder_init,
                        const HeadParams& head_init, const SgdConfig& cfg) {
    check_dims(dataset, encoder_init, head_init);
    JointResult out{encoder_init, head_init, {}};
    MomentumSgd enc_w(out.encoder.hidden_weights.size());
    MomentumSgd enc_b(out.encoder.hidden_bias.size());
    MomentumSgd head_w(out.head.weights.size());

    out.trace = run_sgd(dataset, cfg, [&](std::span<const std::size_t> batch, double lr) {
        double loss = 0.0;
        JointGradients g = joint_gradients(dataset, batch, out.encoder, out.head, &loss);
        add_weight_decay(g.head_weights.flat(), out.head.weights.flat(), cfg.weight_decay);
        head_w.step(out.head.weights.flat(), g.head_weights.flat(), lr, cfg.momentum);
        if (out.encoder.enabled) {
            add_weight_decay(g.encoder_weights.flat(), out.encoder.hidden_weights.flat(), cfg.weight_decay);
            enc_w.step(out.encoder.hidden_weights.flat(), g.encoder_weights.flat(), lr, cfg.momentum);
            enc_b.step(out.encoder.hidden_bias, g.encoder_bias, lr, cfg.momentum);
        }
        return loss;
    });
    return out;
}

HeadResult train_head(const LongTailDataset& dataset, const EncoderParams& encoder, const HeadParams& head_init,
                      const SgdConfig& cfg) {
    check_dims(dataset, encoder, head_init);
    const Matrix features = encode_all(encoder, dataset);
    HeadResult out{head_init, {}};
    MomentumSgd opt(out.head.weights.size());
    out.trace = run_sgd(dataset, cfg, [&](std::span<const std::size_t> batch, double lr) {
        double loss = 0.0;
        Matrix g = head_gradients(features, dataset.labels, batch, out.head, &loss);
        add_weight_decay(g.flat(), out.head.weights.flat(), cfg.weight_decay);
        opt.step(out.head.weights.flat(), g.flat(), lr, cfg.momentum);
        return loss;
    });
    return out;
}

double mean_sample_weight(const ClassFrequencies& freq, const ReweightVector& weights) {
    if (freq.r.size() != weights.w.size()) throw InvalidArgument("frequency/weight length mismatch");
    double m = 0.0;
    for (std::size_t c = 0; c < freq.r.size(); ++c) m += freq.r[c] * weights.w[c];
    return m;
}

CalibrationResult train_disalign(const LongTailDataset& dataset, const EncoderParams& encoder,
                                 const HeadParams& head, double rho, CalibrationFlags flags, const SgdConfig& cfg) {
    check_dims(dataset, encoder, head);
    const FrozenBatch all = freeze(dataset, encoder, head);
    const ReweightVector weights = grw_weights(class_frequencies(dataset), rho);

    SgdConfig c = cfg;
    if (cfg.lr_per_mean_weight) c.lr0 = cfg.lr0 / mean_sample_weight(class_frequencies(dataset), weights);

    CalibrationResult out{CalibrationParams::initial(head.num_classes(), head.dim(), flags), {}};
    auto& p = out.params;
    MomentumSgd opt_alpha(p.alpha.size());
    MomentumSgd opt_beta(p.beta.size());
    MomentumSgd opt_v(p.conf_weights.size());
    MomentumSgd opt_b(1);

    out.trace = run_sgd(dataset, c, [&](std::span<const std::size_t> batch, double lr) {
        double loss = 0.0;
        const FrozenBatch fb = gather(all, batch);
        const CalibrationGradients g = disalign_gradients(fb, p, weights, &loss);
        if (flags.magnitude) opt_alpha.step(p.alpha, g.alpha, lr, cfg.momentum);
        if (flags.margin) opt_beta.step(p.beta, g.beta, lr, cfg.momentum);
        if (flags.confidence) {
            opt_v.step(p.conf_weights, g.conf_weights, lr, cfg.momentum);
            opt_b.step(std::span<double>(&p.conf_bias, 1), std::span<const double>(&g.conf_bias, 1), lr,
                       cfg.momentum);
        }
        return loss;
    });
    return out;
}

HeadParams train_bound(const LongTailDataset& balanced, const EncoderParams& encoder, HeadKind kind, double scale,
                       const SgdConfig& cfg) {
    if (!balanced.is_balanced()) throw InvalidArgument("train_bound requires equal class counts");
    SgdConfig c = cfg;
    c.sampler = SamplerKind::instance_balanced;
    const HeadParams init =
        init_head(balanced.num_classes, encoder.output_dim(balanced.dim()), kind, scale, cfg.seed);
    return train_head(balanced, encoder, init, c).head;
}

}  // namespace ltcal
