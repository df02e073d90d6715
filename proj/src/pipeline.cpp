#include "must/pipeline.hpp"

#include "must/errors.hpp"
#include "must/random.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace must {

int Manifest::class_count() const {
    int k = 0;
    for (const auto& e : entries) k = std::max(k, e.label + 1);
    return k;
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
    const auto base = path.parent_path();
    Manifest m;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line != "path,label") throw ParseError("expected header 'path,label'", "line 1");
            continue;
        }
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos) throw ParseError("expected 'path,label'", "line " + std::to_string(line_no));
        ManifestEntry e;
        const std::string_view label(line.data() + comma + 1, line.size() - comma - 1);
        auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), e.label);
        if (label.empty() || ec != std::errc() || ptr != label.data() + label.size() || e.label < 0) {
            throw ParseError("bad label", "line " + std::to_string(line_no));
        }
        std::filesystem::path p(line.substr(0, comma));
        e.path = p.is_absolute() ? p : base / p;
        m.entries.push_back(std::move(e));
    }
    if (line_no == 0) throw ParseError("missing header", "line 1");
    return m;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write manifest '" + path.string() + "'");
    out << "path,label\n";
    for (const auto& e : manifest.entries) out << e.path.generic_string() << ',' << e.label << '\n';
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

PipelineConfig PipelineConfig::from(const RunConfig& c, bool need_features) {
    PipelineConfig p;
    p.seed = c.get_u64("seed");
    p.workers = static_cast<int>(c.get_int("workers"));
    if (p.workers < 1) throw UsageError("workers must be at least 1");

    p.msd.tau_ms = c.get_double("msd.tau_ms");
    p.msd.threshold = c.get_double("msd.threshold");
    p.msd.confirm_window = static_cast<int>(c.get_int("msd.confirm_window"));
    p.msd.flush_tail = c.get_bool("msd.flush_tail");
    p.msd.max_segment_ms = c.get_double("msd.max_segment_ms");
    p.msd.validate();

    p.gabor.scales = c.get_ints("gabor.scales");
    p.gabor.sigmas = c.get_doubles("gabor.sigmas");
    p.gabor.lambdas = c.get_doubles("gabor.lambdas");
    p.gabor.orientations_deg = c.get_doubles("gabor.orientations_deg");
    p.gabor.gamma = c.get_double("gabor.gamma");
    p.gabor.validate();

    if (need_features) {
        p.tau_leak_ms = c.get_double("feature.tau_leak_ms");
        if (!(p.tau_leak_ms > 0)) throw UsageError("feature.tau_leak_ms must be positive");
    }
    p.coding = parse_coding_kind(c.get("coding.kind"));
    p.t_w = c.get_double("coding.t_w_ms");
    p.r_min = c.get_double("coding.r_min");
    if (!(p.t_w > 0) || !(p.r_min > 0)) throw UsageError("coding.t_w_ms and coding.r_min must be positive");
    p.fusion = parse_fusion_mode(c.get("fusion.mode"));

    auto& s = p.snn;
    s.v_rest = c.get_double("snn.v_rest");
    s.v_reset = c.get_double("snn.v_reset");
    s.e_exc = c.get_double("snn.e_exc");
    s.e_inh = c.get_double("snn.e_inh");
    s.tau_m = c.get_double("snn.tau_m");
    s.tau_ge = c.get_double("snn.tau_ge");
    s.tau_gi = c.get_double("snn.tau_gi");
    s.tau_thr = c.get_double("snn.tau_thr");
    s.tau_apre = c.get_double("snn.tau_apre");
    s.tau_apost = c.get_double("snn.tau_apost");
    s.tau_apost2 = c.get_double("snn.tau_apost2");
    s.v_t = c.get_double("snn.v_t");
    s.v_plus = c.get_double("snn.v_plus");
    s.a_plus = c.get_double("snn.a_plus");
    s.a_minus = c.get_double("snn.a_minus");
    s.w_inh = c.get_double("snn.w_inh");
    s.t_d_ms = c.get_double("snn.t_d_ms");
    s.norm_L = c.get_double("snn.norm_L");
    s.dt_ms = c.get_double("snn.dt_ms");
    s.validate();
    const auto n_learning = c.get_int("snn.n_learning");
    if (n_learning < 1) throw UsageError("snn.n_learning must be at least 1");
    p.n_learning = static_cast<std::uint32_t>(n_learning);

    p.epochs = static_cast<int>(c.get_int("train.epochs"));
    if (p.epochs < 0) throw UsageError("train.epochs must be non-negative");
    p.snn_seed = c.has_value("snn.seed") ? c.get_u64("snn.seed") : derive_seed(p.seed, Stage::weight_init);
    p.shuffle_seed =
        c.has_value("train.shuffle_seed") ? c.get_u64("train.shuffle_seed") : derive_seed(p.seed, Stage::shuffle);
    p.split_fraction = c.get_double("split.fraction");
    if (!(p.split_fraction > 0 && p.split_fraction < 1)) throw UsageError("split.fraction must be in (0, 1)");
    p.runs = static_cast<int>(c.get_int("split.runs"));
    if (p.runs < 1) throw UsageError("split.runs must be at least 1");

    auto& y = p.synth;
    y.classes = static_cast<int>(c.get_int("synth.classes"));
    y.per_class = static_cast<int>(c.get_int("synth.per_class"));
    if (y.classes < 1 || y.classes > 3) throw UsageError("synth.classes must be 1, 2 or 3");
    if (y.per_class < 0) throw UsageError("synth.per_class must be non-negative");
    const auto w = c.get_int("synth.width"), h = c.get_int("synth.height");
    if (w < 1 || h < 1 || w > 65535 || h > 65535) throw UsageError("synth.width/height out of range");
    y.width = static_cast<std::uint16_t>(w);
    y.height = static_cast<std::uint16_t>(h);
    y.duration_ms = c.get_double("synth.duration_ms");
    y.event_rate = c.get_double("synth.event_rate");
    y.noise_rate = c.get_double("synth.noise_rate");
    y.speed = c.get_double("synth.speed");
    y.size_px = c.get_double("synth.size_px");
    y.jitter_px = c.get_double("synth.jitter_px");
    y.orientation_jitter_deg = c.get_double("synth.orientation_jitter_deg");
    y.position_jitter_px = c.get_double("synth.position_jitter_px");
    y.format = parse_event_format(c.get("synth.format"));
    return p;
}

SynthSpec synth_spec_for(const SynthConfig& synth, int cls, int index, std::uint64_t seed) {
    const std::uint64_t rec_seed = derive_seed(seed, static_cast<std::uint64_t>(cls) * 1000003ULL + index);
    Rng rng(rec_seed);
    SynthSpec s;
    s.kind = static_cast<ShapeKind>(cls);
    s.width = synth.width;
    s.height = synth.height;
    s.size_px = synth.size_px;
    s.duration_ms = synth.duration_ms;
    s.event_rate = synth.event_rate;
    s.noise_rate = synth.noise_rate;
    s.jitter_px = synth.jitter_px;

    static constexpr double kBaseOrientation[] = {45.0, 0.0, 0.0};
    s.orientation_deg = kBaseOrientation[cls] + uniform(rng, -1.0, 1.0) * synth.orientation_jitter_deg;
    s.start_x = 0.5 * synth.width + uniform(rng, -1.0, 1.0) * synth.position_jitter_px;
    s.start_y = 0.25 * synth.height + uniform(rng, -1.0, 1.0) * synth.position_jitter_px;
    // downward swing, heading within +-10 degrees of vertical
    const double heading = (90.0 + uniform(rng, -10.0, 10.0)) * std::numbers::pi / 180.0;
    s.velocity_x = synth.speed * std::cos(heading);
    s.velocity_y = synth.speed * std::sin(heading);
    s.seed = rng();
    return s;
}

RecordingFeatures extract_recording(const EventStream& stream, const PipelineConfig& config, const GaborBank& bank) {
    RecordingFeatures f;
    f.label = stream.label.value_or(0);
    for (const auto& seg : segment_stream(stream, config.msd)) {
        f.segments.push_back(extract_c1(seg, bank, stream.header.width, stream.header.height, config.tau_leak_ms));
    }
    return f;
}

std::vector<RecordingFeatures> extract_features(const Manifest& manifest, const PipelineConfig& config) {
    const GaborBank bank(config.gabor);
    std::vector<RecordingFeatures> out(manifest.entries.size());
    std::optional<SensorHeader> header;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& entry = manifest.entries[i];
        auto stream = read_events(entry.path, event_format_for(entry.path));
        if (!header) header = stream.header;
        if (stream.header.width != header->width || stream.header.height != header->height) {
            throw DataError("'" + entry.path.string() + "' has a different sensor size than the first recording");
        }
        stream.label = entry.label;
        out[i] = extract_recording(stream, config, bank);
        out[i].recording = static_cast<int>(i);
    }
    return out;
}

std::vector<double> collect_responses(std::span<const RecordingFeatures> features, std::span<const std::size_t> which) {
    std::vector<double> out;
    for (auto i : which) {
        for (const auto& c1 : features[i].segments) out.insert(out.end(), c1.values.begin(), c1.values.end());
    }
    return out;
}

CodingParams fit_coding_on(std::span<const RecordingFeatures> features, std::span<const std::size_t> which,
                           const PipelineConfig& config) {
    const auto responses = collect_responses(features, which);
    return fit_coding(responses, config.r_min, config.t_w, config.coding);
}

Dataset build_dataset(std::span<const RecordingFeatures> features, std::span<const std::size_t> which,
                      const CodingParams& coding, FusionMode fusion, int class_count) {
    Dataset d;
    d.class_count = class_count;
    for (auto i : which) {
        for (const auto& c1 : features[i].segments) {
            d.items.push_back({encode(c1, coding, fusion), features[i].label, features[i].recording});
        }
    }
    return d;
}

Split stratified_split(std::span<const RecordingFeatures> features, double fraction, std::uint64_t seed) {
    int classes = 0;
    for (const auto& f : features) classes = std::max(classes, f.label + 1);
    Rng rng(seed);
    Split split;
    for (int c = 0; c < classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < features.size(); ++i) {
            if (features[i].label == c) members.push_back(i);
        }
        for (std::size_t k = members.size(); k > 1; --k) {
            const auto r = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(k));
            std::swap(members[k - 1], members[std::min(r, k - 1)]);
        }
        const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
        split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
        split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

TrainedModel train_pipeline(std::span<const RecordingFeatures> features, std::span<const std::size_t> train_set,
                            const PipelineConfig& config, int class_count, const TrainObserver& observer) {
    const auto coding = fit_coding_on(features, train_set, config);
    const auto dataset = build_dataset(features, train_set, coding, config.fusion, class_count);
    if (dataset.items.empty()) throw DataError("training set has no segments");

    TrainConfig tc;
    tc.n_learning = config.n_learning;
    tc.epochs = config.epochs;
    tc.init_seed = config.snn_seed;
    tc.shuffle_seed = config.shuffle_seed;
    tc.snn = config.snn;
    auto network = train(dataset, tc, observer);
    return {assign_labels(std::move(network), dataset, config.workers), coding};
}

}  // namespace must
