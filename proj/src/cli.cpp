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


#include "ltcal/cli.hpp"

#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ltcal/error.hpp"
#include "ltcal/experiment.hpp"
#include "ltcal/format.hpp"

namespace ltcal {

namespace {

namespace fs = std::filesystem;

struct Paths {
    fs::path train, test, model, calibration;
};

Paths resolve_paths(const ExperimentConfig& cfg) {
    const auto& dir = cfg.output_dir;
    return {cfg.train_path.value_or(dir / "train.ltds"), cfg.test_path.value_or(dir / "test.ltds"),
            cfg.model_path.value_or(dir / "model.json"), cfg.calibration_path.value_or(dir / "calibration.json")};
}

void write_report(const fs::path& dir, const std::string& stem, const EvalReport& report, std::ostream& out) {
    write_text_file(dir / (stem + ".json"), report_to_json(report));
    write_text_file(dir / (stem + ".csv"), report_to_csv(report));
    out << report.predictor << ": balanced_accuracy=" << format_double(report.balanced_accuracy);
    for (ShotGroup g : {ShotGroup::many, ShotGroup::medium, ShotGroup::few})
        if (auto acc = report.group(g)) out << ' ' << to_string(g) << '=' << format_double(*acc);
    out << '\n';
}

// Checks that a dataset matches the model the way the trainers expect, so
// a mismatch is reported before any work.
void check_model_fits(const LongTailDataset& data, const ModelCheckpoint& model, const fs::path& data_path) {
    const std::size_t want = model.encoder.enabled ? model.encoder.input_dim() : model.head.dim();
    if (data.dim() != want)
        throw InvalidArgument("dimension mismatch: '" + data_path.string() + "' has feature_dim " +
                              std::to_string(data.dim()) + ", model expects " + std::to_string(want));
    if (data.num_classes != model.head.num_classes())
        throw InvalidArgument("dimension mismatch: '" + data_path.string() + "' has " +
                              std::to_string(data.num_classes) + " classes, model has " +
                              std::to_string(model.head.num_classes()));
}

struct Loaded {
    LongTailDataset train;
    LongTailDataset test;
    ModelCheckpoint model;
};

Loaded load_all(const Paths& p) {
    Loaded l{read_dataset(p.train), {}, model_from_json(read_text_file(p.model))};
    l.test = read_dataset(p.test, l.train.num_classes);
    check_model_fits(l.train, l.model, p.train);
    check_model_fits(l.test, l.model, p.test);
    return l;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Long-tail classifier calibration experiments", "ltcal"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    app.add_option("--config", config_path, "config file of `key = value` lines")->check(CLI::ExistingFile);
    app.add_option("--set", overrides, "override one config key, e.g. --set stage2.rho=1.5")->take_all();
    app.add_option("--seed", seed, "master seed (config key `seed`)");
    app.add_option("--out", out_dir, "output directory (config key `output.dir`)");

    auto* gen = app.add_subcommand("gen", "generate the long-tail training set and its balanced test twin");
    auto* train = app.add_subcommand("train", "stage 1: joint encoder + head training");
    auto* calibrate = app.add_subcommand("calibrate", "stage 2: learn the calibration on the frozen model");
    auto* baseline = app.add_subcommand("baseline", "fit and evaluate one baseline on the frozen model");
    std::string method;
    baseline->add_option("--method", method, "crt | lws | tau-norm | ncm | logit-adjust | tde")->required();
    auto* eval = app.add_subcommand("eval", "evaluate a model (and optional calibration) on the test set");
    bool with_calibration = false;
    eval->add_flag("--calibrated", with_calibration, "apply the calibration checkpoint");
    auto* sweep = app.add_subcommand("sweep-rho", "train stage 2 once per rho in sweep.rhos");
    auto* bound = app.add_subcommand("bound-study", "baseline vs. balanced-retrained head per stage-1 sampler");
    auto* curve = app.add_subcommand("weight-curve", "class weights per rho in curve.rhos");
    auto* show = app.add_subcommand("config", "print the resolved configuration");
    auto* keys = app.add_subcommand("keys", "list every config key");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "ltcal: " << e.what() << '\n' << app.help();
        return 2;
    }

    try {
        ExperimentConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError(kv, "--set expects key=value");
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (seed) cfg.seed = *seed;
        if (out_dir) cfg.output_dir = *out_dir;
        cfg.validate();
        const Paths paths = resolve_paths(cfg);
        const fs::path& dir = cfg.output_dir;

        if (show->parsed()) {
            out << cfg.dump();
        } else if (keys->parsed()) {
            for (const auto& k : config_keys()) out << k.key << "  " << k.description << '\n';
        } else if (gen->parsed()) {
            const auto data = make_data(cfg);
            write_dataset(paths.train, data.train);
            write_dataset(paths.test, data.test);
            write_text_file(dir / "config.resolved", cfg.dump());
            out << "wrote " << paths.train.string() << " (" << data.train.size() << " samples) and "
                << paths.test.string() << " (" << data.test.size() << " samples)\n";
        } else if (train->parsed()) {
            const auto data = read_dataset(paths.train);
            const auto s1 = run_stage1(data, cfg);
            write_text_file(paths.model, model_to_json(s1.model));
            write_text_file(dir / "stage1_trace.csv", trace_to_csv(s1.trace));
            out << "wrote " << paths.model.string();
            if (!s1.trace.loss.empty()) out << " (final loss " << format_double(s1.trace.loss.back()) << ')';
            out << '\n';
        } else if (calibrate->parsed()) {
            const auto l = load_all(paths);
            const auto s2 = run_stage2(l.train, l.model, cfg);
            write_text_file(paths.calibration, calibration_to_json(s2.calibration));
            write_text_file(dir / "stage2_trace.csv", trace_to_csv(s2.trace));
            write_report(dir, "report_disalign",
                         evaluate(l.test, disalign_predictor(l.model, s2.calibration), l.train.class_counts,
                                  cfg.thresholds),
                         out);
        } else if (baseline->parsed()) {
            const auto m = parse_baseline_method(method);
            const auto l = load_all(paths);
            write_report(dir, "report_" + std::string(to_string(m)),
                         evaluate(l.test, baseline_predictor(m, l.train, l.model, cfg), l.train.class_counts,
                                  cfg.thresholds),
                         out);
        } else if (eval->parsed()) {
            const auto l = load_all(paths);
            if (with_calibration) {
                const auto calib = calibration_from_json(read_text_file(paths.calibration));
                if (calib.params.num_classes() != l.model.head.num_classes() ||
                    calib.params.dim() != l.model.head.dim())
                    throw InvalidArgument("dimension mismatch: calibration checkpoint does not fit the model");
                write_report(dir, "report",
                             evaluate(l.test, disalign_predictor(l.model, calib), l.train.class_counts, cfg.thresholds),
                             out);
            } else {
                write_report(dir, "report",
                             evaluate(l.test, model_predictor(l.model), l.train.class_counts, cfg.thresholds), out);
            }
        } else if (sweep->parsed()) {
            const auto l = load_all(paths);
            const auto rows = rho_sweep(l.train, l.model.encoder, l.model.head, cfg.sweep_rhos, cfg.flags,
                                        cfg.stage2_sgd(), l.test, cfg.thresholds);
            write_text_file(dir / "sweep_rho.csv", sweep_to_csv(rows));
            for (const auto& r : rows)
                out << "rho=" << format_double(r.rho) << " balanced_accuracy=" << format_double(r.report.balanced_accuracy)
                    << '\n';
        } else if (bound->parsed()) {
            const auto rows = bound_study(cfg.bound_study_config());
            write_text_file(dir / "bound_study.csv", bound_study_to_csv(rows));
            for (const auto& r : rows)
                out << to_string(r.sampler) << ": baseline=" << format_double(r.baseline.balanced_accuracy)
                    << " bound=" << format_double(r.bound.balanced_accuracy) << '\n';
        } else if (curve->parsed()) {
            const auto data = read_dataset(paths.train);
            write_text_file(dir / "weight_curve.csv",
                            weight_curve_to_csv(export_weight_curve(class_frequencies(data), cfg.curve_rhos)));
            out << "wrote " << (dir / "weight_curve.csv").string() << '\n';
        }
        return 0;
    } catch (const std::exception& e) {
        err << "ltcal: error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace ltcal
