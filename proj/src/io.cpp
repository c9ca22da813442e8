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


#include "ltcal/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "ltcal/error.hpp"
#include "ltcal/format.hpp"

namespace ltcal {

using json = nlohmann::ordered_json;

const char* to_string(FormatErrorKind kind) noexcept {
    switch (kind) {
        case FormatErrorKind::bad_magic: return "bad magic";
        case FormatErrorKind::version_mismatch: return "version mismatch";
        case FormatErrorKind::truncated: return "truncated";
        case FormatErrorKind::malformed: return "malformed";
        case FormatErrorKind::io: return "i/o error";
    }
    return "format error";
}

namespace {

constexpr char kMagic[4] = {'L', 'T', 'D', 'S'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[off + i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::span<const std::uint8_t> b, std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[off + i]) << (8 * i);
    return v;
}

bool has_suffix(const std::filesystem::path& path, std::string_view ext) {
    auto e = path.extension().string();
    for (auto& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return e == ext;
}

}  // namespace

std::vector<std::uint8_t> encode_ltds(const LongTailDataset& dataset) {
    const std::uint64_t n = dataset.size();
    const std::size_t d = dataset.dim();
    if (d > std::numeric_limits<std::uint32_t>::max() || dataset.num_classes > std::numeric_limits<std::uint32_t>::max())
        throw InvalidArgument("dataset dimensions exceed the LTDS 32-bit fields");
    std::vector<std::uint8_t> out;
    out.reserve(kLtdsHeaderSize + 4 * n + 4 * n * d);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_u32(out, kLtdsVersion);
    put_u64(out, n);
    put_u32(out, static_cast<std::uint32_t>(d));
    put_u32(out, static_cast<std::uint32_t>(dataset.num_classes));
    for (auto y : dataset.labels) put_u32(out, y);
    for (float f : dataset.features.flat()) put_u32(out, std::bit_cast<std::uint32_t>(f));
    return out;
}

LongTailDataset decode_ltds(std::span<const std::uint8_t> bytes) {
    using K = FormatErrorKind;
    if (bytes.size() < 4) throw FormatError(K::truncated, bytes.size(), "file shorter than the magic bytes");
    if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()))
        throw FormatError(K::bad_magic, 0, "expected 'LTDS'");
    if (bytes.size() < kLtdsHeaderSize) throw FormatError(K::truncated, bytes.size(), "incomplete header");
    const std::uint32_t version = get_u32(bytes, 4);
    if (version != kLtdsVersion)
        throw FormatError(K::version_mismatch, 4,
                          "file version " + std::to_string(version) + ", reader supports " + std::to_string(kLtdsVersion));
    const std::uint64_t n = get_u64(bytes, 8);
    const std::uint32_t d = get_u32(bytes, 16);
    const std::uint32_t num_classes = get_u32(bytes, 20);
    if (num_classes == 0) throw FormatError(K::malformed, 20, "zero classes");
    if (d == 0 && n > 0) throw FormatError(K::malformed, 16, "zero feature dimension");

    // Guard the size arithmetic: payload = 4n + 4nd.
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    if (n > (max - kLtdsHeaderSize) / 4 / (static_cast<std::uint64_t>(d) + 1))
        throw FormatError(K::malformed, 8, "sample count overflows");
    const std::uint64_t expected = kLtdsHeaderSize + 4 * n + 4 * n * d;
    if (bytes.size() < expected)
        throw FormatError(K::truncated, bytes.size(),
                          "payload needs " + std::to_string(expected) + " bytes, file has " + std::to_string(bytes.size()));
    if (bytes.size() > expected) throw FormatError(K::malformed, expected, "trailing bytes after payload");

    std::vector<std::uint32_t> labels(n);
    std::size_t off = kLtdsHeaderSize;
    for (std::uint64_t i = 0; i < n; ++i, off += 4) {
        labels[i] = get_u32(bytes, off);
        if (labels[i] >= num_classes)
            throw FormatError(K::malformed, off, "label " + std::to_string(labels[i]) + " >= K");
    }
    FeatureMatrix features(n, d);
    auto flat = features.flat();
    for (std::size_t i = 0; i < flat.size(); ++i, off += 4) {
        flat[i] = std::bit_cast<float>(get_u32(bytes, off));
        if (!std::isfinite(flat[i])) throw FormatError(K::malformed, off, "non-finite feature");
    }
    return LongTailDataset::from_rows(std::move(features), std::move(labels), num_classes);
}

std::string encode_csv(const LongTailDataset& dataset) {
    std::string out;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        out += std::to_string(dataset.labels[i]);
        for (float f : dataset.sample(i)) {
            out += ',';
            out += format_float(f);
        }
        out += '\n';
    }
    return out;
}

LongTailDataset decode_csv(std::string_view text, std::optional<std::size_t> num_classes) {
    using K = FormatErrorKind;
    std::vector<std::uint32_t> labels;
    std::vector<float> values;
    std::size_t dim = 0;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        std::size_t fields = 0;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
            const char* first = field.data();
            const char* last = field.data() + field.size();
            if (fields == 0) {
                std::uint32_t y = 0;
                auto [p, ec] = std::from_chars(first, last, y);
                if (ec != std::errc() || p != last) throw FormatError(K::malformed, line_no, "bad label '" + std::string(field) + "'");
                labels.push_back(y);
            } else {
                float v = 0.0f;
                auto [p, ec] = std::from_chars(first, last, v);
                if (ec != std::errc() || p != last || !std::isfinite(v))
                    throw FormatError(K::malformed, line_no, "bad feature '" + std::string(field) + "'");
                values.push_back(v);
            }
            ++fields;
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (fields < 2) throw FormatError(K::malformed, line_no, "row needs a label and at least one feature");
        if (dim == 0) dim = fields - 1;
        if (fields - 1 != dim)
            throw FormatError(K::malformed, line_no,
                              "row has " + std::to_string(fields - 1) + " features, expected " + std::to_string(dim));
    }
    std::size_t k = 0;
    for (auto y : labels) k = std::max<std::size_t>(k, y + 1);
    if (num_classes) {
        if (*num_classes < k) throw FormatError(K::malformed, 0, "label exceeds the declared class count");
        k = *num_classes;
    }
    if (k == 0) throw FormatError(K::malformed, 0, "no samples");
    const std::size_t n = labels.size();
    return LongTailDataset::from_rows(FeatureMatrix(n, dim, std::move(values)), std::move(labels), k);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatErrorKind::io, 0, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(FormatErrorKind::io, 0, "cannot write '" + path.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw FormatError(FormatErrorKind::io, 0, "write failed for '" + path.string() + "'");
}

void write_dataset(const std::filesystem::path& path, const LongTailDataset& dataset) {
    if (has_suffix(path, ".csv")) {
        write_text_file(path, encode_csv(dataset));
        return;
    }
    const auto bytes = encode_ltds(dataset);
    write_text_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

LongTailDataset read_dataset(const std::filesystem::path& path, std::optional<std::size_t> num_classes) {
    const std::string raw = read_text_file(path);
    if (has_suffix(path, ".csv")) return decode_csv(raw, num_classes);
    return decode_ltds(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
}

// ---------------------------------------------------------------------------
// JSON checkpoints

namespace {

// nlohmann's own number formatting is round-trip exact but not always the
// shortest string, so floats are rendered through format_double instead.
void dump_into(const json& j, int indent, int depth, std::string& out) {
    const auto newline = [&](int level) {
        out += '\n';
        out.append(static_cast<std::size_t>(indent * level), ' ');
    };
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                newline(depth + 1);
                out += json(it.key()).dump();
                out += ": ";
                dump_into(it.value(), indent, depth + 1, out);
            }
            newline(depth);
            out += '}';
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += '[';
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += ',';
                first = false;
                newline(depth + 1);
                dump_into(v, indent, depth + 1, out);
            }
            newline(depth);
            out += ']';
            return;
        }
        case json::value_t::number_float: {
            const double v = j.get<double>();
            out += std::isfinite(v) ? format_double(v) : std::string("null");
            return;
        }
        default:
            out += j.dump();
    }
}

std::string dump_json(const json& j) {
    std::string out;
    dump_into(j, 2, 0, out);
    out += '\n';
    return out;
}

json parse_json(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(FormatErrorKind::malformed, e.byte, e.what());
    }
}

void expect_format(const json& j, std::string_view format) {
    if (!j.is_object() || j.value("format", std::string()) != format)
        throw FormatError(FormatErrorKind::bad_magic, 0, "expected a '" + std::string(format) + "' document");
    if (j.value("version", 0) != 1)
        throw FormatError(FormatErrorKind::version_mismatch, 0, "unsupported " + std::string(format) + " version");
}

template <class T>
T field(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(FormatErrorKind::malformed, 0, std::string("field '") + key + "': " + e.what());
    }
}

Matrix matrix_field(const json& j, const char* key, std::size_t rows, std::size_t cols) {
    auto flat = field<std::vector<double>>(j, key);
    if (flat.size() != rows * cols)
        throw FormatError(FormatErrorKind::malformed, 0,
                          std::string("field '") + key + "' has " + std::to_string(flat.size()) + " values, expected " +
                              std::to_string(rows * cols));
    return Matrix(rows, cols, std::move(flat));
}

}  // namespace

std::string model_to_json(const ModelCheckpoint& model) {
    json enc = {{"enabled", model.encoder.enabled}};
    if (model.encoder.enabled) {
        enc["input_dim"] = model.encoder.hidden_weights.cols();
        enc["hidden_dim"] = model.encoder.hidden_weights.rows();
        enc["weights"] = model.encoder.hidden_weights.storage();
        enc["bias"] = model.encoder.hidden_bias;
    }
    const json head = {{"kind", std::string(to_string(model.head.kind))},
                       {"num_classes", model.head.num_classes()},
                       {"dim", model.head.dim()},
                       {"scale", model.head.scale},
                       {"weights", model.head.weights.storage()}};
    const json doc = {{"format", "ltcal.model"}, {"version", 1}, {"encoder", enc}, {"head", head}};
    return dump_json(doc);
}

ModelCheckpoint model_from_json(std::string_view text) {
    const json doc = parse_json(text);
    expect_format(doc, "ltcal.model");
    ModelCheckpoint m;
    const json& enc = doc.at("encoder");
    m.encoder.enabled = field<bool>(enc, "enabled");
    if (m.encoder.enabled) {
        const auto in = field<std::size_t>(enc, "input_dim");
        const auto hidden = field<std::size_t>(enc, "hidden_dim");
        m.encoder.hidden_weights = matrix_field(enc, "weights", hidden, in);
        m.encoder.hidden_bias = field<Vector>(enc, "bias");
    }
    const json& head = doc.at("head");
    try {
        m.head.kind = parse_head_kind(field<std::string>(head, "kind"));
    } catch (const InvalidArgument& e) {
        throw FormatError(FormatErrorKind::malformed, 0, e.what());
    }
    m.head.scale = field<double>(head, "scale");
    m.head.weights = matrix_field(head, "weights", field<std::size_t>(head, "num_classes"), field<std::size_t>(head, "dim"));
    try {
        m.encoder.validate();
        m.head.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(FormatErrorKind::malformed, 0, e.what());
    }
    return m;
}

std::string calibration_to_json(const CalibrationCheckpoint& calib) {
    const auto& p = calib.params;
    const json doc = {{"format", "ltcal.calibration"},
                      {"version", 1},
                      {"rho", calib.rho},
                      {"num_classes", p.num_classes()},
                      {"dim", p.dim()},
                      {"flags", {{"magnitude", p.flags.magnitude}, {"margin", p.flags.margin}, {"confidence", p.flags.confidence}}},
                      {"alpha", p.alpha},
                      {"beta", p.beta},
                      {"conf_weights", p.conf_weights},
                      {"conf_bias", p.conf_bias}};
    return dump_json(doc);
}

CalibrationCheckpoint calibration_from_json(std::string_view text) {
    const json doc = parse_json(text);
    expect_format(doc, "ltcal.calibration");
    CalibrationCheckpoint c;
    c.rho = field<double>(doc, "rho");
    const json& flags = doc.at("flags");
    c.params.flags = {field<bool>(flags, "magnitude"), field<bool>(flags, "margin"), field<bool>(flags, "confidence")};
    c.params.alpha = field<Vector>(doc, "alpha");
    c.params.beta = field<Vector>(doc, "beta");
    c.params.conf_weights = field<Vector>(doc, "conf_weights");
    c.params.conf_bias = field<double>(doc, "conf_bias");
    if (c.params.alpha.size() != field<std::size_t>(doc, "num_classes") ||
        c.params.conf_weights.size() != field<std::size_t>(doc, "dim"))
        throw FormatError(FormatErrorKind::malformed, 0, "calibration arrays disagree with declared dimensions");
    try {
        c.params.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(FormatErrorKind::malformed, 0, e.what());
    }
    return c;
}

// ---------------------------------------------------------------------------
// Reports

std::string report_to_json(const EvalReport& report) {
    json groups = json::object();
    for (ShotGroup g : {ShotGroup::many, ShotGroup::medium, ShotGroup::few})
        if (auto acc = report.group(g)) groups[std::string(to_string(g))] = *acc;
    json per_class = json::array();
    for (std::size_t c = 0; c < report.per_class_accuracy.size(); ++c)
        per_class.push_back({{"class", c},
                             {"group", std::string(to_string(report.groups[c]))},
                             {"train_count", report.train_counts[c]},
                             {"correct", report.per_class_correct[c]},
                             {"total", report.per_class_total[c]},
                             {"accuracy", report.per_class_accuracy[c]}});
    const json doc = {{"format", "ltcal.report"},
                      {"version", 1},
                      {"predictor", report.predictor},
                      {"balanced_accuracy", report.balanced_accuracy},
                      {"group_accuracy", groups},
                      {"thresholds", {{"many_min", report.thresholds.many_min}, {"few_max", report.thresholds.few_max}}},
                      {"per_class", per_class}};
    return dump_json(doc);
}

std::string report_to_csv(const EvalReport& report) {
    std::string out = "class,group,train_count,correct,total,accuracy\n";
    for (std::size_t c = 0; c < report.per_class_accuracy.size(); ++c) {
        out += std::to_string(c) + ',' + std::string(to_string(report.groups[c])) + ',' +
               std::to_string(report.train_counts[c]) + ',' + std::to_string(report.per_class_correct[c]) + ',' +
               std::to_string(report.per_class_total[c]) + ',' + format_double(report.per_class_accuracy[c]) + '\n';
    }
    return out;
}

namespace {

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string group_cells(const EvalReport& r) {
    return optional_cell(r.group(ShotGroup::many)) + ',' + optional_cell(r.group(ShotGroup::medium)) + ',' +
           optional_cell(r.group(ShotGroup::few));
}

}  // namespace

std::string trace_to_csv(const TrainTrace& trace) {
    std::string out = "epoch,loss,lr\n";
    for (std::size_t e = 0; e < trace.loss.size(); ++e)
        out += std::to_string(e) + ',' + format_double(trace.loss[e]) + ',' + format_double(trace.lr[e]) + '\n';
    return out;
}

std::string sweep_to_csv(std::span<const SweepRow> rows) {
    std::string out = "rho,balanced_accuracy,many,medium,few\n";
    for (const auto& row : rows)
        out += format_double(row.rho) + ',' + format_double(row.report.balanced_accuracy) + ',' + group_cells(row.report) + '\n';
    return out;
}

std::string bound_study_to_csv(std::span<const BoundStudyRow> rows) {
    std::string out =
        "sampler,baseline_balanced_accuracy,bound_balanced_accuracy,baseline_many,baseline_medium,baseline_few,"
        "bound_many,bound_medium,bound_few\n";
    for (const auto& row : rows)
        out += std::string(to_string(row.sampler)) + ',' + format_double(row.baseline.balanced_accuracy) + ',' +
               format_double(row.bound.balanced_accuracy) + ',' + group_cells(row.baseline) + ',' +
               group_cells(row.bound) + '\n';
    return out;
}

std::string weight_curve_to_csv(const WeightCurve& curve) {
    std::string out = "rank,class,frequency";
    for (double rho : curve.rhos) out += ",w_rho=" + format_double(rho);
    out += '\n';
    for (std::size_t rank = 0; rank < curve.class_index.size(); ++rank) {
        out += std::to_string(rank) + ',' + std::to_string(curve.class_index[rank]) + ',' + format_double(curve.frequency[rank]);
        for (std::size_t k = 0; k < curve.rhos.size(); ++k) out += ',' + format_double(curve.weights(rank, k));
        out += '\n';
    }
    return out;
}

}  // namespace ltcal
