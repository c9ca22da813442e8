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


// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Runs as a single ctest entry.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "../test_support.hpp"
#include "ltcal/baselines.hpp"
#include "ltcal/experiment.hpp"
#include "ltcal/format.hpp"
#include "ltcal/trainer.hpp"

namespace {

using namespace ltcal;
using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    std::printf("[%s] %d %s: %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

// ---------------------------------------------------------------------------

void stage2_gradients() {
    std::mt19937_64 rng(101);
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        auto s = testing::random_stage2_instance(rng);
        const auto g = disalign_gradients(s.batch, s.params, s.weights);
        const auto f = [&] { return testing::naive_disalign_loss(s.batch, s.params, s.weights.w); };
        if (s.params.flags.magnitude)
            worst = std::max(worst, testing::max_relative_error(g.alpha, testing::finite_difference(f, s.params.alpha)));
        if (s.params.flags.margin)
            worst = std::max(worst, testing::max_relative_error(g.beta, testing::finite_difference(f, s.params.beta)));
        if (s.params.flags.confidence) {
            worst = std::max(worst, testing::max_relative_error(
                                        g.conf_weights, testing::finite_difference(f, s.params.conf_weights)));
            const std::vector<double> gb{g.conf_bias};
            worst = std::max(worst, testing::max_relative_error(
                                        gb, testing::finite_difference(f, std::span<double>(&s.params.conf_bias, 1))));
        }
    }
    const double secs = seconds_since(t0);
    report(1, worst <= 1e-5 && secs < 10.0, "calibration gradients vs finite differences",
           "100 instances, max rel err " + sci(worst) + ", " + fmt(secs, 2) + " s");
}

void joint_gradients_check() {
    double worst = 0.0;
    int checked = 0;
    for (HeadKind kind : {HeadKind::linear, HeadKind::cosine}) {
        int got = 0;
        for (std::uint64_t seed = 1; got < 5 && seed < 500; ++seed) {
            std::mt19937_64 rng(seed);
            const auto ds = testing::random_dataset(rng, 6, 4, 3);
            auto enc = init_encoder(4, 5, seed);
            auto head = init_head(3, 5, kind, 16.0, seed);
            std::vector<std::size_t> batch(ds.size());
            std::iota(batch.begin(), batch.end(), 0);
            // Finite differences across a ReLU kink are meaningless.
            if (testing::min_abs_preactivation(ds, batch, enc) < 1e-3) continue;
            const auto g = joint_gradients(ds, batch, enc, head);
            const auto f = [&] { return testing::naive_joint_loss(ds, batch, enc, head); };
            worst = std::max(worst, testing::max_relative_error(
                                        g.encoder_weights.flat(), testing::finite_difference(f, enc.hidden_weights.flat())));
            worst = std::max(worst, testing::max_relative_error(g.encoder_bias,
                                                                testing::finite_difference(f, enc.hidden_bias)));
            worst = std::max(worst, testing::max_relative_error(g.head_weights.flat(),
                                                                testing::finite_difference(f, head.weights.flat())));
            ++got;
        }
        checked += got;
    }
    report(2, checked >= 10 && worst <= 1e-5, "joint encoder+head gradients vs finite differences",
           std::to_string(checked) + " instances (K=3, d=4, h=5), max rel err " + sci(worst));
}

bool same(std::span<const double> a, std::span<const double> b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

void reductions() {
    std::mt19937_64 rng(303);
    std::map<std::string, int> bad;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t K = 2 + rng() % 12, d = 1 + rng() % 8;
        const auto z = testing::normal_vector(rng, K, 3.0);
        const auto x = testing::normal_vector(rng, d);
        std::uniform_real_distribution<double> u(0.01, 1.0);
        ClassFrequencies freq{Vector(K)};
        double total = 0.0;
        for (auto& r : freq.r) total += (r = u(rng));
        for (auto& r : freq.r) r /= total;

        const auto w = grw_weights(freq, 0.0);
        if (!std::all_of(w.w.begin(), w.w.end(), [&](double v) { return v == 1.0 / static_cast<double>(K); }))
            ++bad["rho=0 uniform"];

        const HeadParams head{testing::normal_matrix(rng, K, d), HeadKind::linear, 16.0};
        if (!(tau_normalize(head, 0.0) == head)) ++bad["tau=0"];
        if (!same(logit_adjust(z, freq, {0.0}), z)) ++bad["la lambda=0"];
        const TdeConfig tde{0.0, testing::normal_vector(rng, d)};
        if (!same(tde_adjust(z, x, head, tde), z)) ++bad["tde lambda=0"];
        auto p = CalibrationParams::initial(K, d, {true, true, true});
        p.alpha.assign(K, 0.0);
        p.beta.assign(K, 0.0);
        p.conf_weights = testing::normal_vector(rng, d);
        if (!same(calibrate(z, confidence(p, x), p), z)) ++bad["alpha=beta=0"];
        if (!same(lws_apply(z, Vector(K, 1.0)), z)) ++bad["lws=1"];
    }
    std::string detail = "1000 inputs x 6 reductions";
    for (const auto& [name, n] : bad) detail += "; " + name + " mismatched " + std::to_string(n);
    report(3, bad.empty(), "degenerate settings reduce exactly", detail);
}

void grw_values() {
    const auto w = grw_weights({{0.5, 0.25, 0.25}}, 1.0);
    double hand = 0.0;
    const double want[] = {0.2, 0.4, 0.4};
    for (int i = 0; i < 3; ++i) hand = std::max(hand, std::abs(w.w[i] - want[i]));
    std::mt19937_64 rng(404);
    double sum_err = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t K = 2 + rng() % 200;
        std::uniform_real_distribution<double> u(1e-4, 1.0), rho(0.0, 3.0);
        ClassFrequencies f{Vector(K)};
        double total = 0.0;
        for (auto& r : f.r) total += (r = u(rng));
        for (auto& r : f.r) r /= total;
        const auto v = grw_weights(f, rho(rng)).w;
        sum_err = std::max(sum_err, std::abs(std::accumulate(v.begin(), v.end(), 0.0) - 1.0));
    }
    report(4, hand <= 1e-12 && sum_err <= 1e-12, "class re-weighting values",
           "r=[.5,.25,.25], rho=1 err " + sci(hand) + "; max |sum-1| over 100 draws " + sci(sum_err));
}

void loss_oracle() {
    std::mt19937_64 rng(505);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto s = testing::random_stage2_instance(rng);
        worst = std::max(worst, std::abs(disalign_loss(s.batch, s.params, s.weights) -
                                         testing::naive_disalign_loss(s.batch, s.params, s.weights.w)));
    }
    report(5, worst <= 1e-10, "calibration loss vs independent oracle", "100 instances, max abs err " + sci(worst));
}

// ---------------------------------------------------------------------------
// Long-tail benchmark: K = 30, d = 32, counts 200 -> 2, 25 test samples per
// class, seeds 1..5.

struct SeedResult {
    double baseline_many = 0, baseline_few = 0;
    std::map<std::string, double> acc;  // balanced accuracy per method
    std::vector<double> sweep;          // balanced accuracy per sweep rho
};

ExperimentConfig bench_config(std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.seed = seed;
    cfg.gen.feature_dim = 32;
    cfg.validate();
    return cfg;
}

SeedResult run_seed(std::uint64_t seed) {
    const auto cfg = bench_config(seed);
    const auto data = make_data(cfg);
    const auto model = run_stage1(data.train, cfg).model;
    const auto counts = data.train.class_counts;
    const auto eval = [&](const Predictor& p) { return evaluate(data.test, p, counts, cfg.thresholds); };

    SeedResult r;
    const auto base = eval(model_predictor(model));
    r.acc["baseline"] = base.balanced_accuracy;
    r.baseline_many = base.group(ShotGroup::many).value_or(NAN);
    r.baseline_few = base.group(ShotGroup::few).value_or(NAN);

    const auto stage2 = [&](CalibrationFlags flags) {
        ExperimentConfig c = cfg;
        c.flags = flags;
        return eval(disalign_predictor(model, run_stage2(data.train, model, c).calibration)).balanced_accuracy;
    };
    r.acc["disalign"] = stage2({true, true, true});
    r.acc["mt-only"] = stage2({true, false, true});
    r.acc["mg-only"] = stage2({false, true, true});

    for (auto m : {BaselineMethod::crt, BaselineMethod::lws, BaselineMethod::tau_norm, BaselineMethod::ncm,
                   BaselineMethod::logit_adjust, BaselineMethod::tde})
        r.acc[std::string(to_string(m))] = eval(baseline_predictor(m, data.train, model, cfg)).balanced_accuracy;

    const auto ideal = balanced_twin(data.train, cfg.bound_per_class, bound_twin_seed(cfg.gen_spec().seed));
    const auto bound_head = train_bound(ideal, model.encoder, model.head.kind, model.head.scale, cfg.bound_sgd());
    r.acc["bound"] = eval(head_predictor(model.encoder, bound_head)).balanced_accuracy;

    for (const auto& row : rho_sweep(data.train, model.encoder, model.head, cfg.sweep_rhos, cfg.flags,
                                     cfg.stage2_sgd(), data.test, cfg.thresholds))
        r.sweep.push_back(row.report.balanced_accuracy);
    return r;
}

void benchmark() {
    const auto t0 = Clock::now();
    std::vector<SeedResult> runs;
    for (std::uint64_t s = 1; s <= 5; ++s) runs.push_back(run_seed(s));
    const double secs = seconds_since(t0);

    std::map<std::string, double> mean;
    for (const auto& r : runs)
        for (const auto& [k, v] : r.acc) mean[k] += v / static_cast<double>(runs.size());

    std::string table;
    for (const auto& [k, v] : mean) table += (table.empty() ? "" : ", ") + k + "=" + fmt(v);
    std::printf("       benchmark means (5 seeds, %.1f s): %s\n", secs, table.c_str());

    bool few_below_many = true;
    std::string gaps;
    for (const auto& r : runs) {
        few_below_many = few_below_many && r.baseline_few < r.baseline_many;
        gaps += (gaps.empty() ? "" : " ") + fmt(r.baseline_few, 2) + "<" + fmt(r.baseline_many, 2);
    }
    report(6, few_below_many && secs < 60.0, "(a) baseline few-shot below many-shot on every seed",
           gaps + "; benchmark " + fmt(secs, 1) + " s");
    report(6, mean["disalign"] > mean["baseline"], "(b) calibrated head beats the joint baseline",
           fmt(mean["disalign"]) + " vs " + fmt(mean["baseline"]));
    std::string worst_method;
    double worst_gap = -1e9;
    for (const char* m : {"disalign", "crt", "lws", "tau-norm", "logit-adjust", "ncm", "tde"})
        if (mean[m] - mean["bound"] > worst_gap) worst_gap = mean[m] - mean["bound"], worst_method = m;
    report(6, worst_gap <= 0.01, "(c) balanced-data bound within 1 pt of every method",
           "bound " + fmt(mean["bound"]) + ", closest " + worst_method + " " + fmt(mean[worst_method]));

    const auto cfg = bench_config(1);
    std::vector<double> sweep(cfg.sweep_rhos.size(), 0.0);
    for (const auto& r : runs)
        for (std::size_t i = 0; i < sweep.size(); ++i) sweep[i] += r.sweep[i] / static_cast<double>(runs.size());
    const std::size_t best = static_cast<std::size_t>(std::max_element(sweep.begin(), sweep.end()) - sweep.begin());
    const double rho_star = cfg.sweep_rhos[best];
    std::size_t zero = 0;
    while (zero < cfg.sweep_rhos.size() && cfg.sweep_rhos[zero] != 0.0) ++zero;
    std::string curve;
    for (std::size_t i = 0; i < sweep.size(); ++i)
        curve += (curve.empty() ? "" : " ") + format_double(cfg.sweep_rhos[i]) + ":" + fmt(sweep[i]);
    const bool rho_ok = zero < sweep.size() && rho_star > 0.0 && sweep[best] > sweep[zero];
    report(7, rho_ok, "best re-weighting exponent is positive",
           curve + "; rho*=" + format_double(rho_star) + (rho_star > 1.0 ? " (> 1)" : " (not > 1)"));

    report(8, mean["disalign"] >= mean["mt-only"] - 0.005 && mean["disalign"] >= mean["mg-only"] - 0.005,
           "full calibration vs single-component ablations",
           "full " + fmt(mean["disalign"]) + ", magnitude-only " + fmt(mean["mt-only"]) + ", margin-only " +
               fmt(mean["mg-only"]));
}

// ---------------------------------------------------------------------------

std::string pipeline_report(std::uint64_t seed) {
    auto cfg = bench_config(seed);
    cfg.set("stage1.epochs", "20");
    const auto data = make_data(cfg);
    const auto model = run_stage1(data.train, cfg).model;
    const auto calib = run_stage2(data.train, model, cfg).calibration;
    return report_to_json(
        evaluate(data.test, disalign_predictor(model, calib), data.train.class_counts, cfg.thresholds));
}

void reproducibility() {
    const auto data = make_data(bench_config(1));
    const auto back = decode_ltds(encode_ltds(data.train));
    bool exact = back.labels == data.train.labels && back.num_classes == data.train.num_classes &&
                 back.features.flat().size() == data.train.features.flat().size();
    for (std::size_t i = 0; exact && i < back.features.flat().size(); ++i)
        exact = std::bit_cast<std::uint32_t>(back.features.flat()[i]) ==
                std::bit_cast<std::uint32_t>(data.train.features.flat()[i]);
    const auto a = pipeline_report(7), b = pipeline_report(7);
    report(9, exact && a == b, "bit-exact dataset round trip and byte-identical reports",
           std::string("ltds ") + (exact ? "exact" : "differs") + ", report json " +
               (a == b ? "identical (" + std::to_string(a.size()) + " bytes)" : "differs"));
}

}  // namespace

int main() {
    stage2_gradients();
    joint_gradients_check();
    reductions();
    grw_values();
    loss_oracle();
    benchmark();
    reproducibility();
    std::printf("%s: %d failing criteria\n", failures ? "FAILED" : "PASSED", failures);
    return failures ? 1 : 0;
}
