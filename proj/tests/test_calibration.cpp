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


#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "ltcal/calibration.hpp"
#include "ltcal/error.hpp"
#include "test_support.hpp"

namespace ltcal {
namespace {

using testing::finite_difference;
using testing::max_relative_error;
using testing::naive_disalign_loss;
using testing::random_stage2_instance;

TEST(Confidence, HandValues) {
    auto p = CalibrationParams::initial(2, 3);
    const std::vector<double> x{1.0, -2.0, 0.5};
    EXPECT_EQ(confidence(p, x), 0.5);
    p.conf_bias = std::log(3.0);
    EXPECT_NEAR(confidence(p, x), 0.75, 1e-15);
    p.flags.confidence = false;
    EXPECT_EQ(confidence(p, x), 1.0);
}

TEST(Logistic, SaturatesWithoutOverflow) {
    EXPECT_EQ(logistic(-1000.0), 0.0);
    EXPECT_EQ(logistic(1000.0), 1.0);
    EXPECT_NEAR(logistic(-30.0), std::exp(-30.0), 1e-25);
}

TEST(Calibrate, HandValues) {
    auto p = CalibrationParams::initial(2, 1);
    p.alpha = {1.0, 1.0};
    p.beta = {0.2, -0.2};
    const auto z = calibrate(std::vector<double>{1.0, -1.0}, 0.5, p);
    EXPECT_NEAR(z[0], 1.6, 1e-15);
    EXPECT_NEAR(z[1], -1.6, 1e-15);
    EXPECT_EQ(calibrate(std::vector<double>{1.0, -1.0}, 0.0, p), (Vector{1.0, -1.0}));
}

TEST(Calibrate, ZeroParametersAreExactIdentity) {
    std::mt19937_64 rng(1);
    auto p = CalibrationParams::initial(5, 1);
    p.alpha.assign(5, 0.0);
    for (int t = 0; t < 100; ++t) {
        const auto z = testing::normal_vector(rng, 5, 3.0);
        EXPECT_EQ(calibrate(z, std::uniform_real_distribution<double>(0, 1)(rng), p), z);
    }
}

TEST(Calibrate, DisabledFlagsZeroTheirTerms) {
    auto p = CalibrationParams::initial(2, 1, {false, false, true});
    p.alpha = {5.0, -3.0};
    p.beta = {7.0, 1.0};
    EXPECT_EQ(calibrate(std::vector<double>{1.5, -0.5}, 0.9, p), (Vector{1.5, -0.5}));
}

TEST(Calibrate, UniformMagnitudePreservesArgmax) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 500; ++t) {
        auto p = CalibrationParams::initial(6, 1);
        p.alpha.assign(6, std::uniform_real_distribution<double>(-0.9, 3.0)(rng));
        const auto z = testing::normal_vector(rng, 6);
        EXPECT_EQ(argmax(calibrate(z, std::uniform_real_distribution<double>(0, 1)(rng), p)), argmax(z));
    }
}

TEST(PredictDistribution, HandValuesAndInvariants) {
    EXPECT_EQ(predict_distribution(std::vector<double>{0.0, 0.0}), (Vector{0.5, 0.5}));
    const auto p = predict_distribution(std::vector<double>{std::log(2.0), 0.0});
    EXPECT_NEAR(p[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(p[1], 1.0 / 3.0, 1e-15);
    std::mt19937_64 rng(3);
    for (int t = 0; t < 100; ++t) {
        auto z = testing::normal_vector(rng, 8, 20.0);
        const auto q = predict_distribution(z);
        EXPECT_NEAR(std::accumulate(q.begin(), q.end(), 0.0), 1.0, 1e-12);
        for (double& v : z) v += 123.0;
        const auto q2 = predict_distribution(z);
        for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(q2[j], q[j], 1e-12);
    }
}

TEST(Grw, HandValues) {
    const auto w = grw_weights({{0.5, 0.25, 0.25}}, 1.0);
    EXPECT_NEAR(w.w[0], 0.2, 1e-12);
    EXPECT_NEAR(w.w[1], 0.4, 1e-12);
    EXPECT_NEAR(w.w[2], 0.4, 1e-12);
    EXPECT_EQ(w.rho, 1.0);
}

TEST(Grw, RhoZeroIsExactlyUniform) {
    const auto w = grw_weights({{0.7, 0.2, 0.06, 0.04}}, 0.0);
    for (double v : w.w) EXPECT_EQ(v, 0.25);
}

TEST(Grw, UniformFrequencyGivesUniformWeights) {
    for (double rho : {0.3, 1.0, 2.5}) {
        const auto w = grw_weights({{0.2, 0.2, 0.2, 0.2, 0.2}}, rho);
        for (double v : w.w) EXPECT_NEAR(v, 0.2, 1e-15);
    }
}

TEST(Grw, NormalizedPositiveMonotone) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 100; ++t) {
        const std::size_t K = std::uniform_int_distribution<std::size_t>(2, 50)(rng);
        ClassFrequencies f{testing::normal_vector(rng, K)};
        double s = 0.0;
        for (double& r : f.r) s += (r = std::abs(r) + 1e-3);
        for (double& r : f.r) r /= s;
        const double rho = std::uniform_real_distribution<double>(0.01, 3.0)(rng);
        const auto w = grw_weights(f, rho);
        EXPECT_NEAR(std::accumulate(w.w.begin(), w.w.end(), 0.0), 1.0, 1e-12);
        for (std::size_t a = 0; a < K; ++a) {
            EXPECT_GT(w.w[a], 0.0);
            for (std::size_t b = 0; b < K; ++b)
                if (f.r[a] < f.r[b]) {
                    EXPECT_GT(w.w[a], w.w[b]);
                }
        }
    }
}

TEST(Grw, RejectsBadInput) {
    EXPECT_THROW(grw_weights({{0.5, 0.0, 0.5}}, 1.0), InvalidArgument);
    EXPECT_THROW(grw_weights({{0.5, 0.5}}, -0.1), InvalidArgument);
}

FrozenBatch one_sample(Vector logits, std::uint32_t y, std::size_t d = 1) {
    FrozenBatch b;
    b.features = Matrix(1, d);
    const std::size_t k = logits.size();
    b.logits = Matrix(1, k, std::move(logits));
    b.labels = {y};
    return b;
}

TEST(DisalignLoss, HandValue) {
    const auto b = one_sample({0.0, 0.0}, 0);
    auto p = CalibrationParams::initial(2, 1);
    p.alpha.assign(2, 0.0);
    EXPECT_NEAR(disalign_loss(b, p, {{0.5, 0.5}, 0.0}), 0.5 * std::log(2.0), 1e-15);
}

TEST(DisalignLoss, RhoZeroIsScaledCrossEntropy) {
    std::mt19937_64 rng(5);
    FrozenBatch b;
    b.features = testing::normal_matrix(rng, 6, 3);
    b.logits = testing::normal_matrix(rng, 6, 4);
    b.labels = {0, 1, 2, 3, 1, 0};
    auto p = CalibrationParams::initial(4, 3, {false, false, false});
    double ce = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
        const auto q = predict_distribution(b.logits.row(i));
        ce -= std::log(q[b.labels[i]]);
    }
    ce /= 6.0;
    EXPECT_NEAR(disalign_loss(b, p, grw_weights({{0.1, 0.2, 0.3, 0.4}}, 0.0)), ce / 4.0, 1e-14);
}

TEST(DisalignLoss, VanishesForConfidentCorrectPrediction) {
    auto p = CalibrationParams::initial(3, 1, {false, false, false});
    const ReweightVector w{{1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.0};
    EXPECT_LT(disalign_loss(one_sample({800.0, 0.0, 0.0}, 0), p, w), 1e-300);
    EXPECT_EQ(disalign_loss(one_sample({800.0, 0.0, 0.0}, 0), p, w), 0.0);
    const auto g = disalign_gradients(one_sample({800.0, 0.0, 0.0}, 0), CalibrationParams::initial(3, 1), w);
    for (double v : g.alpha) EXPECT_EQ(v, 0.0);
    for (double v : g.beta) EXPECT_EQ(v, 0.0);
}

TEST(DisalignLoss, MatchesNaiveOracle) {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 200; ++t) {
        const auto s = random_stage2_instance(rng);
        EXPECT_NEAR(disalign_loss(s.batch, s.params, s.weights), naive_disalign_loss(s.batch, s.params, s.weights.w),
                    1e-10);
    }
}

TEST(DisalignGradients, MatchFiniteDifferences) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 150; ++t) {
        auto s = random_stage2_instance(rng);
        double loss = 0.0;
        const auto g = disalign_gradients(s.batch, s.params, s.weights, &loss);
        EXPECT_NEAR(loss, disalign_loss(s.batch, s.params, s.weights), 1e-13);
        const auto f = [&] { return naive_disalign_loss(s.batch, s.params, s.weights.w); };
        if (s.params.flags.magnitude) {
            EXPECT_LE(max_relative_error(g.alpha, finite_difference(f, s.params.alpha)), 1e-5);
        }
        if (s.params.flags.margin) {
            EXPECT_LE(max_relative_error(g.beta, finite_difference(f, s.params.beta)), 1e-5);
        }
        if (s.params.flags.confidence) {
            EXPECT_LE(max_relative_error(g.conf_weights, finite_difference(f, s.params.conf_weights)), 1e-5);
            const Vector gb{g.conf_bias};
            EXPECT_LE(max_relative_error(gb, finite_difference(f, std::span<double>(&s.params.conf_bias, 1))), 1e-5);
        }
    }
}

TEST(DisalignGradients, DisabledGroupsGetZero) {
    std::mt19937_64 rng(8);
    auto s = random_stage2_instance(rng);
    s.params.flags = {false, false, false};
    const auto g = disalign_gradients(s.batch, s.params, s.weights);
    for (double v : g.alpha) EXPECT_EQ(v, 0.0);
    for (double v : g.beta) EXPECT_EQ(v, 0.0);
    for (double v : g.conf_weights) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(g.conf_bias, 0.0);
}

TEST(WeightCurve, ColumnsAreReweightVectors) {
    const ClassFrequencies f{{0.25, 0.5, 0.25}};
    const std::vector<double> rhos{0.0, 1.0, 2.0};
    const auto c = export_weight_curve(f, rhos);
    EXPECT_EQ(c.class_index.front(), 1u);
    EXPECT_EQ(c.frequency.front(), 0.5);
    for (std::size_t k = 0; k < 3; ++k) {
        double s = 0.0;
        for (std::size_t r = 0; r < 3; ++r) s += c.weights(r, k);
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
    for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(c.weights(r, 0), 1.0 / 3.0);
    EXPECT_NEAR(c.weights(0, 1), 0.2, 1e-12);
    EXPECT_NEAR(c.weights(1, 1), 0.4, 1e-12);
    EXPECT_THROW(export_weight_curve(f, {}), InvalidArgument);
}

}  // namespace
}  // namespace ltcal
