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


#include "ltcal/experiment.hpp"

#include <string>

#include "ltcal/error.hpp"
#include "ltcal/format.hpp"

namespace ltcal {

ExperimentData make_data(const ExperimentConfig& cfg) {
    const GenSpec spec = cfg.gen_spec();
    LongTailDataset train = generate_longtail(spec);
    LongTailDataset test = balanced_twin(train, cfg.test_per_class, test_twin_seed(spec.seed));
    return {std::move(train), std::move(test)};
}

ModelCheckpoint initial_model(const ExperimentConfig& cfg, std::size_t raw_dim, std::size_t num_classes) {
    const std::uint64_t seed = cfg.stage1_sgd().seed;
    EncoderParams enc = cfg.use_encoder ? init_encoder(raw_dim, cfg.hidden_dim, seed) : EncoderParams::identity();
    HeadParams head = init_head(num_classes, enc.output_dim(raw_dim), cfg.head_kind, cfg.head_scale, seed);
    return {std::move(enc), std::move(head)};
}

Stage1Output run_stage1(const LongTailDataset& train, const ExperimentConfig& cfg) {
    const ModelCheckpoint init = initial_model(cfg, train.dim(), train.num_classes);
    auto joint = train_joint(train, init.encoder, init.head, cfg.stage1_sgd());
    return {{std::move(joint.encoder), std::move(joint.head)}, std::move(joint.trace)};
}

Stage2Output run_stage2(const LongTailDataset& train, const ModelCheckpoint& model, const ExperimentConfig& cfg) {
    const double rho = cfg.effective_rho();
    auto res = train_disalign(train, model.encoder, model.head, rho, cfg.flags, cfg.stage2_sgd());
    return {{std::move(res.params), rho}, std::move(res.trace)};
}

std::string_view to_string(BaselineMethod m) noexcept {
    switch (m) {
        case BaselineMethod::crt: return "crt";
        case BaselineMethod::lws: return "lws";
        case BaselineMethod::tau_norm: return "tau-norm";
        case BaselineMethod::ncm: return "ncm";
        case BaselineMethod::logit_adjust: return "logit-adjust";
        case BaselineMethod::tde: return "tde";
    }
    return "unknown";
}

BaselineMethod parse_baseline_method(std::string_view s) {
    for (auto m : {BaselineMethod::crt, BaselineMethod::lws, BaselineMethod::tau_norm, BaselineMethod::ncm,
                   BaselineMethod::logit_adjust, BaselineMethod::tde})
        if (s == to_string(m)) return m;
    throw InvalidArgument("unknown baseline method '" + std::string(s) +
                          "' (expected crt|lws|tau-norm|ncm|logit-adjust|tde)");
}

Predictor baseline_predictor(BaselineMethod method, const LongTailDataset& train, const ModelCheckpoint& model,
                             const ExperimentConfig& cfg) {
    const auto& enc = model.encoder;
    const auto& head = model.head;
    switch (method) {
        case BaselineMethod::crt:
            return head_predictor(enc, crt_train(train, enc, head.kind, head.scale, cfg.baseline_sgd()), "crt");
        case BaselineMethod::lws:
            return lws_predictor(enc, head, lws_train(train, enc, head, cfg.baseline_sgd()));
        case BaselineMethod::tau_norm:
            return head_predictor(enc, tau_normalize(head, cfg.tau), "tau-norm tau=" + format_double(cfg.tau));
        case BaselineMethod::ncm:
            return head_predictor(enc, ncm_fit(train, enc, cfg.head_scale), "ncm");
        case BaselineMethod::logit_adjust:
            return logit_adjust_predictor(enc, head, class_frequencies(train), {cfg.la_lambda});
        case BaselineMethod::tde:
            return tde_predictor(enc, head, {cfg.tde_lambda, mean_encoded_feature(train, enc)});
    }
    throw InvalidArgument("unknown baseline method");
}

Predictor model_predictor(const ModelCheckpoint& model) {
    return head_predictor(model.encoder, model.head, "joint " + std::string(to_string(model.head.kind)) + " head");
}

Predictor disalign_predictor(const ModelCheckpoint& model, const CalibrationCheckpoint& calib) {
    const auto& f = calib.params.flags;
    std::string desc = "disalign rho=" + format_double(calib.rho) + " mt=" + (f.magnitude ? "on" : "off") +
                       " mg=" + (f.margin ? "on" : "off") + " conf=" + (f.confidence ? "on" : "off");
    return calibrated_predictor(model.encoder, model.head, calib.params, std::move(desc));
}

}  // namespace ltcal
