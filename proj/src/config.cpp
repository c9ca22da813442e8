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


#include "ltcal/config.hpp"

#include <charconv>
#include <deque>
#include <cmath>
#include <functional>
#include <string>

#include "ltcal/error.hpp"
#include "ltcal/format.hpp"
#include "ltcal/io.hpp"

namespace ltcal {

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_unsigned(std::string_view key, std::string_view v) {
    T out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError(std::string(key), "expected a non-negative integer, got '" + std::string(v) + "'");
    return out;
}

double parse_real(std::string_view key, std::string_view v) {
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
        throw ConfigError(std::string(key), "expected a finite number, got '" + std::string(v) + "'");
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(std::string(key), "expected on/off, got '" + std::string(v) + "'");
}

template <class F>
auto parse_enum(std::string_view key, std::string_view v, F&& parse) {
    try {
        return parse(v);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string(key), e.what());
    }
}

template <class T, class F>
std::vector<T> parse_list(std::string_view v, F&& item) {
    std::vector<T> out;
    while (true) {
        const auto comma = v.find(',');
        const auto part = trim(v.substr(0, comma));
        if (!part.empty()) out.push_back(item(part));
        if (comma == std::string_view::npos) break;
        v.remove_prefix(comma + 1);
    }
    return out;
}

std::string bool_str(bool b) { return b ? "on" : "off"; }

template <class T>
std::string join(const std::vector<T>& items, const std::function<std::string(const T&)>& fmt) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ',';
        out += fmt(items[i]);
    }
    return out;
}

std::string opt_seed(const std::optional<std::uint64_t>& s) { return s ? std::to_string(*s) : std::string(); }

std::string opt_path(const std::optional<std::filesystem::path>& p) { return p ? p->string() : std::string(); }

struct KeyHandler {
    std::string_view key;
    std::string_view description;
    std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

using Sgd = SgdConfig ExperimentConfig::*;
using Seed = std::optional<std::uint64_t> ExperimentConfig::*;

// Shared SGD keys for one section.
void add_sgd_keys(std::vector<KeyHandler>& keys, std::string_view section, Sgd sgd, Seed seed, bool sampler,
                  bool weight_decay) {
    static std::deque<std::string> names;  // owns the composed key strings; deque never relocates
    const auto name = [&](const char* leaf) -> std::string_view {
        names.push_back(std::string(section) + "." + leaf);
        return names.back();
    };
    keys.push_back({name("lr0"), "initial learning rate",
                    [sgd](ExperimentConfig& c, auto k, auto v) { (c.*sgd).lr0 = parse_real(k, v); },
                    [sgd](const ExperimentConfig& c) { return format_double((c.*sgd).lr0); }});
    keys.push_back({name("momentum"), "heavy-ball momentum",
                    [sgd](ExperimentConfig& c, auto k, auto v) { (c.*sgd).momentum = parse_real(k, v); },
                    [sgd](const ExperimentConfig& c) { return format_double((c.*sgd).momentum); }});
    keys.push_back({name("batch_size"), "mini-batch size",
                    [sgd](ExperimentConfig& c, auto k, auto v) { (c.*sgd).batch_size = parse_unsigned<std::size_t>(k, v); },
                    [sgd](const ExperimentConfig& c) { return std::to_string((c.*sgd).batch_size); }});
    keys.push_back({name("epochs"), "epochs; one epoch is N sampler draws",
                    [sgd](ExperimentConfig& c, auto k, auto v) { (c.*sgd).epochs = parse_unsigned<std::size_t>(k, v); },
                    [sgd](const ExperimentConfig& c) { return std::to_string((c.*sgd).epochs); }});
    keys.push_back({name("schedule"), "cosine_to_zero | constant",
                    [sgd](ExperimentConfig& c, auto k, auto v) { (c.*sgd).schedule = parse_enum(k, v, parse_schedule); },
                    [sgd](const ExperimentConfig& c) { return std::string(to_string((c.*sgd).schedule)); }});
    if (sampler)
        keys.push_back({name("sampler"), "instance_balanced | class_balanced | square_root",
                        [sgd](ExperimentConfig& c, auto k, auto v) { (c.*sgd).sampler = parse_enum(k, v, parse_sampler_kind); },
                        [sgd](const ExperimentConfig& c) { return std::string(to_string((c.*sgd).sampler)); }});
    if (weight_decay)
        keys.push_back({name("weight_decay"), "L2 penalty coefficient",
                        [sgd](ExperimentConfig& c, auto k, auto v) { (c.*sgd).weight_decay = parse_real(k, v); },
                        [sgd](const ExperimentConfig& c) { return format_double((c.*sgd).weight_decay); }});
    keys.push_back({name("seed"), "sampler/initialisation seed (default: seed)",
                    [seed](ExperimentConfig& c, auto k, auto v) { c.*seed = parse_unsigned<std::uint64_t>(k, v); },
                    [seed](const ExperimentConfig& c) { return opt_seed(c.*seed); }});
}

std::vector<KeyHandler> build_keys() {
    using C = ExperimentConfig;
    std::vector<KeyHandler> k;
    k.push_back({"seed", "master seed for every stage",
                 [](C& c, auto key, auto v) { c.seed = parse_unsigned<std::uint64_t>(key, v); },
                 [](const C& c) { return std::to_string(c.seed); }});

    k.push_back({"gen.num_classes", "number of classes K",
                 [](C& c, auto key, auto v) { c.gen.num_classes = parse_unsigned<std::size_t>(key, v); },
                 [](const C& c) { return std::to_string(c.gen.num_classes); }});
    k.push_back({"gen.feature_dim", "raw feature dimension",
                 [](C& c, auto key, auto v) { c.gen.feature_dim = parse_unsigned<std::size_t>(key, v); },
                 [](const C& c) { return std::to_string(c.gen.feature_dim); }});
    k.push_back({"gen.profile", "exponential | pareto",
                 [](C& c, auto key, auto v) { c.gen.profile = parse_enum(key, v, parse_count_profile); },
                 [](const C& c) { return std::string(to_string(c.gen.profile)); }});
    k.push_back({"gen.max_count", "samples in the most frequent class",
                 [](C& c, auto key, auto v) { c.gen.max_count = parse_unsigned<std::uint64_t>(key, v); },
                 [](const C& c) { return std::to_string(c.gen.max_count); }});
    k.push_back({"gen.min_count", "samples in the least frequent class",
                 [](C& c, auto key, auto v) { c.gen.min_count = parse_unsigned<std::uint64_t>(key, v); },
                 [](const C& c) { return std::to_string(c.gen.min_count); }});
    k.push_back({"gen.pareto_power", "pareto profile exponent",
                 [](C& c, auto key, auto v) { c.gen.pareto_power = parse_real(key, v); },
                 [](const C& c) { return format_double(c.gen.pareto_power); }});
    k.push_back({"gen.mean_scale", "expected norm of a class centre",
                 [](C& c, auto key, auto v) { c.gen.mean_scale = parse_real(key, v); },
                 [](const C& c) { return format_double(c.gen.mean_scale); }});
    k.push_back({"gen.noise_scale", "per-coordinate noise standard deviation",
                 [](C& c, auto key, auto v) { c.gen.noise_scale = parse_real(key, v); },
                 [](const C& c) { return format_double(c.gen.noise_scale); }});
    k.push_back({"gen.seed", "generator seed (default: seed)",
                 [](C& c, auto key, auto v) { c.gen_seed = parse_unsigned<std::uint64_t>(key, v); },
                 [](const C& c) { return opt_seed(c.gen_seed); }});
    k.push_back({"test.per_class", "samples per class in the balanced test set",
                 [](C& c, auto key, auto v) { c.test_per_class = parse_unsigned<std::size_t>(key, v); },
                 [](const C& c) { return std::to_string(c.test_per_class); }});

    k.push_back({"model.encoder", "on: one ReLU hidden layer; off: identity features",
                 [](C& c, auto key, auto v) { c.use_encoder = parse_bool(key, v); },
                 [](const C& c) { return bool_str(c.use_encoder); }});
    k.push_back({"model.hidden", "hidden width of the encoder",
                 [](C& c, auto key, auto v) { c.hidden_dim = parse_unsigned<std::size_t>(key, v); },
                 [](const C& c) { return std::to_string(c.hidden_dim); }});
    k.push_back({"model.head", "linear | cosine",
                 [](C& c, auto key, auto v) { c.head_kind = parse_enum(key, v, parse_head_kind); },
                 [](const C& c) { return std::string(to_string(c.head_kind)); }});
    k.push_back({"model.scale", "cosine head scale s",
                 [](C& c, auto key, auto v) { c.head_scale = parse_real(key, v); },
                 [](const C& c) { return format_double(c.head_scale); }});

    add_sgd_keys(k, "stage1", &C::stage1, &C::stage1_seed, true, true);

    add_sgd_keys(k, "stage2", &C::stage2, &C::stage2_seed, true, false);
    k.push_back({"stage2.lr_per_mean_weight", "divide lr0 by the mean class weight of a training sample",
                 [](C& c, auto key, auto v) { c.stage2.lr_per_mean_weight = parse_bool(key, v); },
                 [](const C& c) { return bool_str(c.stage2.lr_per_mean_weight); }});
    k.push_back({"stage2.rho", "re-weighting exponent (default 1.2 linear, 1.5 cosine)",
                 [](C& c, auto key, auto v) { c.rho = parse_real(key, v); },
                 [](const C& c) { return c.rho ? format_double(*c.rho) : std::string(); }});
    k.push_back({"stage2.magnitude", "learnable per-class magnitude (alias stage2.mt)",
                 [](C& c, auto key, auto v) { c.flags.magnitude = parse_bool(key, v); },
                 [](const C& c) { return bool_str(c.flags.magnitude); }});
    k.push_back({"stage2.margin", "learnable per-class margin (alias stage2.mg)",
                 [](C& c, auto key, auto v) { c.flags.margin = parse_bool(key, v); },
                 [](const C& c) { return bool_str(c.flags.margin); }});
    k.push_back({"stage2.confidence", "input-dependent confidence gate",
                 [](C& c, auto key, auto v) { c.flags.confidence = parse_bool(key, v); },
                 [](const C& c) { return bool_str(c.flags.confidence); }});
    k.push_back({"stage2.grw", "class re-weighting; off forces rho = 0",
                 [](C& c, auto key, auto v) { c.grw = parse_bool(key, v); },
                 [](const C& c) { return bool_str(c.grw); }});

    add_sgd_keys(k, "baseline", &C::baseline, &C::baseline_seed, false, true);
    k.push_back({"baseline.tau", "tau-normalisation exponent",
                 [](C& c, auto key, auto v) { c.tau = parse_real(key, v); },
                 [](const C& c) { return format_double(c.tau); }});
    k.push_back({"baseline.lambda", "logit adjustment strength",
                 [](C& c, auto key, auto v) { c.la_lambda = parse_real(key, v); },
                 [](const C& c) { return format_double(c.la_lambda); }});
    k.push_back({"baseline.tde_lambda", "de-confound strength",
                 [](C& c, auto key, auto v) { c.tde_lambda = parse_real(key, v); },
                 [](const C& c) { return format_double(c.tde_lambda); }});

    add_sgd_keys(k, "bound", &C::bound, &C::bound_seed, false, true);
    k.push_back({"bound.per_class", "samples per class in the ideal balanced training set",
                 [](C& c, auto key, auto v) { c.bound_per_class = parse_unsigned<std::size_t>(key, v); },
                 [](const C& c) { return std::to_string(c.bound_per_class); }});
    k.push_back({"bound.samplers", "comma list of stage-1 samplers to study",
                 [](C& c, auto key, auto v) {
                     c.bound_samplers =
                         parse_list<SamplerKind>(v, [&](std::string_view s) { return parse_enum(key, s, parse_sampler_kind); });
                 },
                 [](const C& c) {
                     return join<SamplerKind>(c.bound_samplers, [](const SamplerKind& s) { return std::string(to_string(s)); });
                 }});

    const auto rho_list = [](std::vector<double> C::*field) {
        return std::pair{[field](C& c, std::string_view key, std::string_view v) {
                             c.*field = parse_list<double>(v, [&](std::string_view s) { return parse_real(key, s); });
                         },
                         [field](const C& c) { return join<double>(c.*field, [](const double& x) { return format_double(x); }); }};
    };
    {
        auto [set, get] = rho_list(&C::sweep_rhos);
        k.push_back({"sweep.rhos", "comma list of rho values for sweep-rho", set, get});
    }
    {
        auto [set, get] = rho_list(&C::curve_rhos);
        k.push_back({"curve.rhos", "comma list of rho values for weight-curve", set, get});
    }

    k.push_back({"eval.many_min", "classes with more training samples are many-shot",
                 [](C& c, auto key, auto v) { c.thresholds.many_min = parse_unsigned<std::uint64_t>(key, v); },
                 [](const C& c) { return std::to_string(c.thresholds.many_min); }});
    k.push_back({"eval.few_max", "classes with fewer training samples are few-shot",
                 [](C& c, auto key, auto v) { c.thresholds.few_max = parse_unsigned<std::uint64_t>(key, v); },
                 [](const C& c) { return std::to_string(c.thresholds.few_max); }});

    k.push_back({"output.dir", "directory for every written artifact",
                 [](C& c, auto, auto v) { c.output_dir = std::filesystem::path(std::string(v)); },
                 [](const C& c) { return c.output_dir.string(); }});
    k.push_back({"paths.train", "training dataset (default: <output.dir>/train.ltds)",
                 [](C& c, auto, auto v) { c.train_path = std::filesystem::path(std::string(v)); },
                 [](const C& c) { return opt_path(c.train_path); }});
    k.push_back({"paths.test", "test dataset (default: <output.dir>/test.ltds)",
                 [](C& c, auto, auto v) { c.test_path = std::filesystem::path(std::string(v)); },
                 [](const C& c) { return opt_path(c.test_path); }});
    k.push_back({"paths.model", "stage-1 checkpoint (default: <output.dir>/model.json)",
                 [](C& c, auto, auto v) { c.model_path = std::filesystem::path(std::string(v)); },
                 [](const C& c) { return opt_path(c.model_path); }});
    k.push_back({"paths.calibration", "stage-2 checkpoint (default: <output.dir>/calibration.json)",
                 [](C& c, auto, auto v) { c.calibration_path = std::filesystem::path(std::string(v)); },
                 [](const C& c) { return opt_path(c.calibration_path); }});
    return k;
}

const std::vector<KeyHandler>& handlers() {
    static const std::vector<KeyHandler> keys = build_keys();
    return keys;
}

std::string_view canonical(std::string_view key) {
    if (key == "stage2.mt") return "stage2.magnitude";
    if (key == "stage2.mg") return "stage2.margin";
    return key;
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
    stage1.weight_decay = 1e-2;
    stage2.epochs = 10;
    stage2.lr_per_mean_weight = true;
    baseline.epochs = 30;
    bound.epochs = 30;
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
    const std::string_view canon = canonical(trim(key));
    value = trim(value);
    for (const auto& h : handlers())
        if (h.key == canon) {
            h.set(*this, canon, value);
            return;
        }
    throw ConfigError(std::string(key), "unknown key");
}

void ExperimentConfig::apply_text(std::string_view text) {
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(std::string(line), "line " + std::to_string(line_no) + ": expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        try {
            set(key, line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(e.key(), "line " + std::to_string(line_no) + ": " + e.detail());
        }
    }
}

void ExperimentConfig::validate() const {
    const auto check = [](const char* key, auto&& fn) {
        try {
            fn();
        } catch (const InvalidArgument& e) {
            throw ConfigError(key, e.what());
        }
    };
    check("gen", [&] { gen_spec().validate(); });
    check("stage1", [&] { stage1.validate(); });
    check("stage2", [&] { stage2.validate(); });
    check("baseline", [&] { baseline.validate(); });
    check("bound", [&] { bound.validate(); });
    check("eval", [&] { thresholds.validate(); });
    if (stage2.weight_decay != 0.0) throw ConfigError("stage2.weight_decay", "stage 2 has no weight decay");
    if (hidden_dim == 0) throw ConfigError("model.hidden", "must be >= 1");
    if (!(head_scale > 0.0)) throw ConfigError("model.scale", "must be > 0");
    if (rho && *rho < 0.0) throw ConfigError("stage2.rho", "must be >= 0");
    if (test_per_class == 0) throw ConfigError("test.per_class", "must be >= 1");
    if (bound_per_class == 0) throw ConfigError("bound.per_class", "must be >= 1");
    if (bound_samplers.empty()) throw ConfigError("bound.samplers", "needs at least one sampler");
    if (sweep_rhos.empty()) throw ConfigError("sweep.rhos", "needs at least one value");
    if (curve_rhos.empty()) throw ConfigError("curve.rhos", "needs at least one value");
    for (double r : sweep_rhos)
        if (r < 0.0) throw ConfigError("sweep.rhos", "values must be >= 0");
    for (double r : curve_rhos)
        if (r < 0.0) throw ConfigError("curve.rhos", "values must be >= 0");
}

GenSpec ExperimentConfig::gen_spec() const {
    GenSpec g = gen;
    g.seed = gen_seed.value_or(seed);
    return g;
}

SgdConfig ExperimentConfig::stage1_sgd() const {
    SgdConfig c = stage1;
    c.seed = stage1_seed.value_or(seed);
    return c;
}

SgdConfig ExperimentConfig::stage2_sgd() const {
    SgdConfig c = stage2;
    c.seed = stage2_seed.value_or(seed);
    return c;
}

SgdConfig ExperimentConfig::baseline_sgd() const {
    SgdConfig c = baseline;
    c.seed = baseline_seed.value_or(seed);
    return c;
}

SgdConfig ExperimentConfig::bound_sgd() const {
    SgdConfig c = bound;
    c.seed = bound_seed.value_or(seed);
    return c;
}

double ExperimentConfig::effective_rho() const {
    if (!grw) return 0.0;
    if (rho) return *rho;
    return head_kind == HeadKind::cosine ? 1.5 : 1.2;
}

BoundStudyConfig ExperimentConfig::bound_study_config() const {
    BoundStudyConfig b;
    b.gen = gen_spec();
    b.samplers = bound_samplers;
    b.stage1 = stage1_sgd();
    b.bound = bound_sgd();
    b.use_encoder = use_encoder;
    b.hidden_dim = hidden_dim;
    b.head_kind = head_kind;
    b.head_scale = head_scale;
    b.bound_per_class = bound_per_class;
    b.test_per_class = test_per_class;
    b.thresholds = thresholds;
    return b;
}

std::string ExperimentConfig::dump() const {
    std::string out;
    for (const auto& h : handlers()) {
        const std::string v = h.get(*this);
        if (v.empty()) continue;
        out += std::string(h.key) + " = " + v + '\n';
    }
    return out;
}

const std::vector<ConfigKeyInfo>& config_keys() {
    static const std::vector<ConfigKeyInfo> keys = [] {
        std::vector<ConfigKeyInfo> out;
        for (const auto& h : handlers()) out.push_back({h.key, h.description});
        return out;
    }();
    return keys;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    ExperimentConfig cfg;
    cfg.apply_text(read_text_file(path));
    return cfg;
}

}  // namespace ltcal
