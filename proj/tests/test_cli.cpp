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
#include <filesystem>
#include <sstream>

#include "ltcal/cli.hpp"
#include "ltcal/io.hpp"

namespace ltcal {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("ltcal_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    // Runs `ltcal <args> --out dir_` with a small problem size.
    int run(std::vector<std::string> args) {
        args.insert(args.begin(), "ltcal");
        args.push_back("--out");
        args.push_back(dir_.string());
        for (std::string a : {"--set", "gen.num_classes=5", "gen.feature_dim=6",
                              "gen.max_count=40", "gen.min_count=4", "model.hidden=8", "stage1.epochs=5",
                              "stage2.epochs=2", "baseline.epochs=2", "bound.epochs=2", "bound.per_class=10",
                              "test.per_class=40"})
            args.push_back(a);
        for (const auto& e : extra_) args.push_back(e);
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        out_.str("");
        err_.str("");
        return cli_dispatch(static_cast<int>(argv.size()), argv.data(), out_, err_);
    }

    fs::path dir_;
    std::vector<std::string> extra_;
    std::ostringstream out_, err_;
};

TEST_F(Cli, UnknownSubcommandPrintsUsage) {
    const char* argv[] = {"ltcal", "frobnicate"};
    std::ostringstream out, err;
    EXPECT_NE(cli_dispatch(2, argv, out, err), 0);
    EXPECT_NE(err.str().find("Usage"), std::string::npos);
    const char* none[] = {"ltcal"};
    EXPECT_NE(cli_dispatch(1, none, out, err), 0);
}

TEST_F(Cli, UnknownConfigKeyIsOneLineDiagnostic) {
    extra_ = {"stage2.nonsense=1"};
    EXPECT_EQ(run({"config"}), 1);
    const auto msg = err_.str();
    EXPECT_NE(msg.find("stage2.nonsense"), std::string::npos);
    EXPECT_EQ(std::count(msg.begin(), msg.end(), '\n'), 1);
}

TEST_F(Cli, MalformedDatasetReportsOffset) {
    ASSERT_EQ(run({"gen"}), 0);
    auto raw = read_text_file(dir_ / "train.ltds");
    raw.resize(raw.size() - 3);
    write_text_file(dir_ / "train.ltds", raw);
    EXPECT_EQ(run({"train"}), 1);
    EXPECT_NE(err_.str().find("truncated at " + std::to_string(raw.size())), std::string::npos) << err_.str();
}

TEST_F(Cli, DimensionMismatchIsReported) {
    ASSERT_EQ(run({"gen"}), 0);
    ASSERT_EQ(run({"train"}), 0);
    extra_ = {"gen.feature_dim=7"};
    ASSERT_EQ(run({"gen"}), 0);
    EXPECT_EQ(run({"eval"}), 1);
    EXPECT_NE(err_.str().find("dimension mismatch"), std::string::npos) << err_.str();
}

TEST_F(Cli, UntrainedHeadScoresNearChance) {
    extra_ = {"stage1.epochs=0", "test.per_class=200"};
    ASSERT_EQ(run({"gen"}), 0);
    ASSERT_EQ(run({"train"}), 0);
    ASSERT_EQ(run({"eval"}), 0);
    const auto text = read_text_file(dir_ / "report.json");
    const auto pos = text.find("\"balanced_accuracy\": ");
    const double acc = std::stod(text.substr(pos + 21));
    // Mean of K = 5 class accuracies over 200 draws each: sd ~ sqrt(p(1-p)/1000).
    const double sd = std::sqrt(0.2 * 0.8 / 1000.0);
    EXPECT_NEAR(acc, 0.2, 3 * sd + 0.2 * 0.8);  // a random head can still favour one class
    EXPECT_GE(acc, 0.0);
}

TEST_F(Cli, CalibrateWithEverythingOffEqualsEval) {
    ASSERT_EQ(run({"gen"}), 0);
    ASSERT_EQ(run({"train"}), 0);
    ASSERT_EQ(run({"eval"}), 0);
    const auto base = read_text_file(dir_ / "report.csv");
    extra_ = {"stage2.mt=off", "stage2.mg=off", "stage2.grw=off"};
    ASSERT_EQ(run({"calibrate"}), 0);
    EXPECT_EQ(read_text_file(dir_ / "report_disalign.csv"), base);
}

TEST_F(Cli, FullPipelineIsByteDeterministic) {
    std::string first;
    for (int round = 0; round < 2; ++round) {
        fs::remove_all(dir_);
        ASSERT_EQ(run({"gen"}), 0);
        ASSERT_EQ(run({"train"}), 0);
        ASSERT_EQ(run({"calibrate"}), 0);
        const auto text = read_text_file(dir_ / "report_disalign.json");
        if (round == 0)
            first = text;
        else
            EXPECT_EQ(text, first);
    }
}

TEST_F(Cli, EverySubcommandRuns) {
    ASSERT_EQ(run({"gen"}), 0) << err_.str();
    ASSERT_EQ(run({"train"}), 0) << err_.str();
    ASSERT_EQ(run({"calibrate"}), 0) << err_.str();
    ASSERT_EQ(run({"eval", "--calibrated"}), 0) << err_.str();
    for (const char* m : {"crt", "lws", "tau-norm", "ncm", "logit-adjust", "tde"}) {
        ASSERT_EQ(run({"baseline", "--method", m}), 0) << m << ": " << err_.str();
        EXPECT_TRUE(fs::exists(dir_ / ("report_" + std::string(m) + ".json")));
    }
    EXPECT_EQ(run({"baseline", "--method", "magic"}), 1);
    ASSERT_EQ(run({"sweep-rho"}), 0) << err_.str();
    ASSERT_EQ(run({"weight-curve"}), 0) << err_.str();
    extra_ = {"bound.samplers=ib"};
    ASSERT_EQ(run({"bound-study"}), 0) << err_.str();
    EXPECT_EQ(read_text_file(dir_ / "sweep_rho.csv").substr(0, 33), "rho,balanced_accuracy,many,medium");
    EXPECT_TRUE(fs::exists(dir_ / "bound_study.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "weight_curve.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "stage1_trace.csv"));
}

TEST_F(Cli, ConfigFileAndSeedFlag) {
    fs::create_directories(dir_);
    write_text_file(dir_ / "exp.cfg", "stage2.rho = 0.9\n");
    const std::string cfg = (dir_ / "exp.cfg").string();
    ASSERT_EQ(run({"config", "--config", cfg, "--seed", "42"}), 0) << err_.str();
    EXPECT_NE(out_.str().find("stage2.rho = 0.9\n"), std::string::npos);
    EXPECT_NE(out_.str().find("seed = 42\n"), std::string::npos);
    EXPECT_NE(out_.str().find("output.dir = " + dir_.string()), std::string::npos);
}

}  // namespace
}  // namespace ltcal
