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

#include <set>

#include "ltcal/config.hpp"
#include "ltcal/error.hpp"

namespace ltcal {
namespace {

template <class Fn>
ConfigError capture(Fn&& fn) {
    try {
        fn();
    } catch (const ConfigError& e) {
        return e;
    }
    ADD_FAILURE() << "no ConfigError thrown";
    return ConfigError("", "");
}

TEST(Config, DefaultsMatchDocumentedValues) {
    const ExperimentConfig c;
    EXPECT_EQ(c.gen.num_classes, 30u);
    EXPECT_EQ(c.test_per_class, 25u);
    EXPECT_EQ(c.hidden_dim, 64u);
    EXPECT_EQ(c.head_scale, 16.0);
    EXPECT_EQ(c.stage1.epochs, 100u);
    EXPECT_EQ(c.stage2.epochs, 10u);
    EXPECT_EQ(c.stage2.sampler, SamplerKind::instance_balanced);
    EXPECT_EQ(c.stage2.weight_decay, 0.0);
    EXPECT_EQ(c.effective_rho(), 1.2);
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParsesTextWithCommentsAndOverrides) {
    ExperimentConfig c;
    c.apply_text(
        "# experiment\n"
        "seed = 7\n"
        "gen.profile = pareto   # trailing comment\n"
        "\n"
        "model.head = cosine\n"
        "stage2.mt = off\n"
        "stage2.margin = true\n"
        "bound.samplers = cb, sr\n"
        "sweep.rhos = 0, 1.5\n"
        "stage1.seed = 3\n");
    EXPECT_EQ(c.gen_spec().seed, 7u);
    EXPECT_EQ(c.stage1_sgd().seed, 3u);
    EXPECT_EQ(c.stage2_sgd().seed, 7u);
    EXPECT_EQ(c.gen.profile, CountProfile::pareto);
    EXPECT_EQ(c.effective_rho(), 1.5);  // cosine default
    EXPECT_FALSE(c.flags.magnitude);
    EXPECT_TRUE(c.flags.margin);
    EXPECT_EQ(c.bound_samplers, (std::vector<SamplerKind>{SamplerKind::class_balanced, SamplerKind::square_root}));
    EXPECT_EQ(c.sweep_rhos, (std::vector<double>{0.0, 1.5}));
    c.set("stage2.grw", "off");
    EXPECT_EQ(c.effective_rho(), 0.0);
}

TEST(Config, UnknownKeysAndBadValuesNameTheKey) {
    ExperimentConfig c;
    EXPECT_EQ(capture([&] { c.set("stage2.bogus", "1"); }).key(), "stage2.bogus");
    EXPECT_EQ(capture([&] { c.set("stage1.epochs", "ten"); }).key(), "stage1.epochs");
    EXPECT_EQ(capture([&] { c.set("model.head", "conv"); }).key(), "model.head");
    EXPECT_EQ(capture([&] { c.set("stage2.confidence", "maybe"); }).key(), "stage2.confidence");
    const auto e = capture([&] { c.apply_text("seed = 1\nnope = 2\n"); });
    EXPECT_EQ(e.key(), "nope");
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_EQ(capture([&] { c.apply_text("seed 1\n"); }).key(), "seed 1");
}

TEST(Config, ValidateReportsSection) {
    ExperimentConfig c;
    c.set("eval.many_min", "10");
    EXPECT_EQ(capture([&] { c.validate(); }).key(), "eval");
    c = ExperimentConfig{};
    c.set("stage1.momentum", "1.5");
    EXPECT_EQ(capture([&] { c.validate(); }).key(), "stage1");
}

TEST(Config, DumpReparsesToSameConfig) {
    ExperimentConfig c;
    c.apply_text("seed = 9\nstage2.rho = 0.7\nmodel.encoder = off\npaths.train = x/y.csv\nbound.samplers = ib\n");
    ExperimentConfig d;
    d.apply_text(c.dump());
    EXPECT_EQ(d.dump(), c.dump());
    EXPECT_EQ(d.effective_rho(), 0.7);
    EXPECT_FALSE(d.use_encoder);
    EXPECT_EQ(d.train_path->string(), "x/y.csv");

    // An unset rho stays unset, so the head-dependent default still applies.
    ExperimentConfig e;
    e.apply_text(ExperimentConfig{}.dump());
    e.set("model.head", "cosine");
    EXPECT_EQ(e.effective_rho(), 1.5);
}

TEST(Config, EveryDocumentedKeyIsSettable) {
    std::set<std::string_view> seen;
    for (const auto& k : config_keys()) {
        EXPECT_TRUE(seen.insert(k.key).second) << "duplicate key " << k.key;
        EXPECT_FALSE(k.description.empty()) << k.key;
    }
    // Tunables named throughout the library must be reachable.
    for (const char* key :
         {"gen.mean_scale", "gen.noise_scale", "gen.pareto_power", "test.per_class", "model.hidden", "model.scale",
          "stage1.weight_decay", "stage1.sampler", "stage2.rho", "stage2.epochs", "stage2.confidence",
          "baseline.tau", "baseline.lambda", "baseline.tde_lambda", "bound.per_class", "eval.few_max",
          "output.dir", "seed"})
        EXPECT_TRUE(seen.count(key)) << key;
}

}  // namespace
}  // namespace ltcal
