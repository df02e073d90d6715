#include "must/commands.hpp"

#include "must/analysis.hpp"
#include "must/config.hpp"
#include "must/errors.hpp"
#include "must/pipeline.hpp"
#include "must/random.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

namespace must {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

fs::path prepare_out(const RunConfig& config) {
    const auto& out = config.require("path.out");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw DataError("cannot create output directory '" + out + "': " + ec.message());
    return out;
}

void write_resolved(const RunConfig& config, const fs::path& dir) {
    write_text(dir / "config.txt", config.serialize());
}

Manifest load_manifest(const RunConfig& config) {
    auto manifest = read_manifest(config.require("path.manifest"));
    if (manifest.entries.empty()) throw DataError("manifest lists no recordings");
    return manifest;
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

// Model sidecar: what is needed besides the weights to encode new data.
struct ModelMeta {
    int class_count = 0;
    CodingParams coding;
    FusionMode fusion = FusionMode::multiscale;
};

fs::path meta_path(const fs::path& model) {
    return fs::path(model.string() + ".meta");
}

void write_meta(const ModelMeta& meta, const fs::path& model) {
    std::ostringstream s;
    s << "class_count=" << meta.class_count << '\n'
      << "coding.kind=" << to_string(meta.coding.kind) << '\n'
      << "coding.t_w_ms=" << fmt(meta.coding.t_w) << '\n'
      << "coding.r_min=" << fmt(meta.coding.r_min) << '\n'
      << "coding.r_max=" << fmt(meta.coding.r_max) << '\n'
      << "fusion.mode=" << to_string(meta.fusion) << '\n';
    write_text(meta_path(model), s.str());
}

ModelMeta read_meta(const fs::path& model) {
    const auto path = meta_path(model);
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model metadata '" + path.string() + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto field = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw DataError("model metadata lacks '" + key + "'");
        return it->second;
    };
    try {
        ModelMeta m;
        m.class_count = std::stoi(field("class_count"));
        m.coding = CodingParams::make(parse_coding_kind(field("coding.kind")), std::stod(field("coding.r_max")),
                                      std::stod(field("coding.r_min")), std::stod(field("coding.t_w_ms")));
        m.fusion = parse_fusion_mode(field("fusion.mode"));
        return m;
    } catch (const std::logic_error&) {
        throw DataError("malformed model metadata '" + path.string() + "'");
    }
}

// --------------------------------------------------------------------------

int cmd_synth(const RunConfig& config, std::ostream& log) {
    const auto cfg = PipelineConfig::from(config, false);
    const auto dir = prepare_out(config);
    const auto seed = derive_seed(cfg.seed, Stage::synth);
    const char* ext = cfg.synth.format == EventFormat::binary ? ".aers" : ".csv";
    Manifest manifest;
    for (int c = 0; c < cfg.synth.classes; ++c) {
        for (int i = 0; i < cfg.synth.per_class; ++i) {
            auto stream = synthesize(synth_spec_for(cfg.synth, c, i, seed));
            char name[64];
            std::snprintf(name, sizeof name, "c%d_%03d%s", c, i, ext);
            write_events(stream, dir / name, cfg.synth.format);
            manifest.entries.push_back({name, c});
        }
    }
    write_manifest(manifest, dir / "manifest.csv");
    write_resolved(config, dir);
    log << "synth: wrote " << manifest.entries.size() << " recordings to " << dir.string() << '\n';
    return kExitOk;
}

int cmd_segment(const RunConfig& config, const std::string& input, double slice_ms, bool dump_c1,
                std::ostream& log) {
    const auto cfg = PipelineConfig::from(config, dump_c1);
    const auto format = event_format_for(input);
    const auto stream = read_events(input, format);
    const auto dir = prepare_out(config);
    const auto segments = slice_ms > 0 ? slice_stream(stream, slice_ms) : segment_stream(stream, cfg.msd);
    std::optional<GaborBank> bank;
    if (dump_c1) bank.emplace(cfg.gabor);

    std::ostringstream index;
    index << "segment,t_start_us,t_end_us,events\n";
    for (std::size_t k = 0; k < segments.size(); ++k) {
        const auto& seg = segments[k];
        index << k << ',' << seg.t_start_us << ',' << seg.t_end_us << ',' << seg.events.size() << '\n';
        char name[64];
        std::snprintf(name, sizeof name, "seg_%03zu", k);
        EventStream part{stream.header, seg.events, std::nullopt};
        write_events(part, dir / (std::string(name) + (format == EventFormat::binary ? ".aers" : ".csv")), format);
        if (bank) {
            const auto c1 = extract_c1(seg, *bank, stream.header.width, stream.header.height, cfg.tau_leak_ms);
            write_text(dir / (std::string(name) + "_c1.csv"), c1_to_csv(c1, cfg.gabor));
        }
    }
    write_text(dir / "segments.csv", index.str());
    write_resolved(config, dir);
    log << "segment: " << segments.size() << " segments from " << stream.events.size() << " events\n";
    return kExitOk;
}

int cmd_encode(const RunConfig& config, const std::string& input, std::optional<double> r_max, std::ostream& log) {
    const auto cfg = PipelineConfig::from(config);
    const auto stream = read_events(input, event_format_for(input));
    const auto dir = prepare_out(config);
    const auto features = extract_recording(stream, cfg, GaborBank(cfg.gabor));
    const std::vector<RecordingFeatures> one{features};
    const std::vector<std::size_t> which{0};
    const auto coding = r_max ? CodingParams::make(cfg.coding, *r_max, cfg.r_min, cfg.t_w)
                              : fit_coding_on(one, which, cfg);

    std::ostringstream spikes;
    spikes << "segment,address,time_ms\n";
    std::uint32_t n_addresses = 0;
    std::size_t total = 0;
    for (std::size_t k = 0; k < features.segments.size(); ++k) {
        const auto pattern = encode(features.segments[k], coding, cfg.fusion);
        n_addresses = pattern.n_addresses;
        total += pattern.spikes.size();
        for (const auto& s : pattern.spikes) spikes << k << ',' << s.address << ',' << fmt(s.time_ms) << '\n';
    }
    write_text(dir / "spikes.csv", spikes.str());
    std::ostringstream info;
    info << "coding.kind=" << to_string(coding.kind) << "\ncoding.r_max=" << fmt(coding.r_max)
         << "\nfusion.mode=" << to_string(cfg.fusion) << "\naddresses=" << n_addresses
         << "\nsegments=" << features.segments.size() << "\nspikes=" << total << '\n';
    write_text(dir / "encoding.txt", info.str());
    write_resolved(config, dir);
    log << "encode: " << total << " spikes over " << features.segments.size() << " segments\n";
    return kExitOk;
}

int cmd_train(const RunConfig& config, std::ostream& log) {
    const auto cfg = PipelineConfig::from(config);
    const auto manifest = load_manifest(config);
    const auto dir = prepare_out(config);
    const auto features = extract_features(manifest, cfg);
    const auto all = all_indices(features.size());
    const auto trained = train_pipeline(features, all, cfg, manifest.class_count());

    const fs::path model_path = config.has_value("path.model") ? fs::path(config.get("path.model")) : dir / "model.bin";
    save_model(trained.model, model_path);
    write_meta({manifest.class_count(), trained.coding, cfg.fusion}, model_path);
    write_resolved(config, dir);
    std::size_t silent = 0;
    for (bool s : trained.model.silent) silent += s ? 1 : 0;
    log << "train: " << features.size() << " recordings, r_max=" << fmt(trained.coding.r_max) << ", " << silent
        << " silent neurons; model written to " << model_path.string() << '\n';
    return kExitOk;
}

void write_eval_reports(const std::vector<EvalReport>& reports, const fs::path& dir) {
    std::ostringstream summary, confusion, per_class;
    summary << "run,accuracy,recordings,no_response\n";
    confusion << "run,true,predicted,count\n";
    per_class << "run,class,accuracy\n";
    double mean = 0.0;
    for (std::size_t r = 0; r < reports.size(); ++r) {
        const auto& e = reports[r];
        summary << r << ',' << fmt(e.accuracy) << ',' << e.total << ',' << e.no_response << '\n';
        mean += e.accuracy;
        for (std::size_t t = 0; t < e.confusion.size(); ++t) {
            for (std::size_t p = 0; p < e.confusion[t].size(); ++p) {
                confusion << r << ',' << t << ',' << p << ',' << e.confusion[t][p] << '\n';
            }
            per_class << r << ',' << t << ',' << fmt(e.per_class_accuracy[t]) << '\n';
        }
    }
    mean /= static_cast<double>(reports.size());
    double var = 0.0;
    for (const auto& e : reports) var += (e.accuracy - mean) * (e.accuracy - mean);
    const double sd = std::sqrt(var / static_cast<double>(reports.size()));
    summary << "accuracy," << fmt(mean) << ',' << fmt(sd) << '\n';
    write_text(dir / "summary.csv", summary.str());
    write_text(dir / "confusion.csv", confusion.str());
    write_text(dir / "per_class.csv", per_class.str());
}

int cmd_eval(const RunConfig& config, std::ostream& log) {
    const auto cfg = PipelineConfig::from(config);
    const auto manifest = load_manifest(config);
    const auto dir = prepare_out(config);
    std::vector<EvalReport> reports;

    if (config.has_value("path.model")) {
        const fs::path model_path = config.get("path.model");
        const auto meta = read_meta(model_path);
        if (meta.class_count != manifest.class_count()) {
            throw DataError("model has " + std::to_string(meta.class_count) + " classes, manifest has " +
                            std::to_string(manifest.class_count()));
        }
        const auto model = load_model(model_path, cfg.snn, meta.class_count);
        const auto features = extract_features(manifest, cfg);
        const auto all = all_indices(features.size());
        const auto dataset = build_dataset(features, all, meta.coding, meta.fusion, meta.class_count);
        reports.push_back(evaluate(model, dataset, cfg.workers));
        log << "eval: accuracy " << fmt(reports.back().accuracy) << " on " << reports.back().total
            << " recordings\n";
    } else {
        const auto features = extract_features(manifest, cfg);
        const int classes = manifest.class_count();
        const auto split_seed = derive_seed(cfg.seed, Stage::split);
        for (int r = 0; r < cfg.runs; ++r) {
            const auto run = static_cast<std::uint64_t>(r);
            auto run_cfg = cfg;
            run_cfg.snn_seed = derive_seed(cfg.snn_seed, run);
            run_cfg.shuffle_seed = derive_seed(cfg.shuffle_seed, run);
            const auto split = stratified_split(features, cfg.split_fraction, derive_seed(split_seed, run));
            if (split.train.empty() || split.test.empty()) throw DataError("split leaves an empty train or test set");
            const auto trained = train_pipeline(features, split.train, run_cfg, classes);
            const auto test = build_dataset(features, split.test, trained.coding, cfg.fusion, classes);
            reports.push_back(evaluate(trained.model, test, cfg.workers));
            log << "eval: run " << r << " accuracy " << fmt(reports.back().accuracy) << " on "
                << reports.back().total << " recordings\n";
        }
    }
    write_eval_reports(reports, dir);
    write_resolved(config, dir);
    return kExitOk;
}

int cmd_analyze(const RunConfig& config, std::ostream& log) {
    const auto cfg = PipelineConfig::from(config);
    const auto manifest = load_manifest(config);
    const auto dir = prepare_out(config);
    const auto features = extract_features(manifest, cfg);
    const auto all = all_indices(features.size());
    const double entropy_bin = config.get_double("analysis.entropy_bin_ms");
    const double response_bin = config.get_double("analysis.response_bin");
    const double cc_bin = config.get_double("analysis.cc_bin");

    // entropy and spike-time histograms, both coding kinds
    std::ostringstream entropy;
    entropy << "coding,entropy_bits,spikes\n";
    for (auto kind : {CodingKind::log, CodingKind::linear}) {
        auto kcfg = cfg;
        kcfg.coding = kind;
        const auto coding = fit_coding_on(features, all, kcfg);
        std::vector<double> times;
        for (const auto& f : features) {
            for (const auto& c1 : f.segments) {
                for (const auto& s : encode(c1, coding, cfg.fusion).spikes) times.push_back(s.time_ms);
            }
        }
        entropy << to_string(kind) << ',' << fmt(spike_entropy(times, entropy_bin, cfg.t_w)) << ',' << times.size()
                << '\n';
        const auto hist = spike_time_histogram(times, entropy_bin, cfg.t_w);
        const auto dens = hist.densities();
        std::ostringstream h;
        h << "bin_lo_ms,density\n";
        for (std::size_t k = 0; k < dens.size(); ++k) h << fmt(hist.bin_lo(k)) << ',' << fmt(dens[k]) << '\n';
        write_text(dir / ("spike_hist_" + std::string(to_string(kind)) + ".csv"), h.str());
    }
    write_text(dir / "entropy.csv", entropy.str());

    // C1 response distribution
    {
        const auto responses = collect_responses(features, all);
        const auto rh = response_histogram(responses, response_bin, cfg.r_min);
        const auto dens = rh.histogram.densities();
        std::ostringstream h;
        h << "# below_r_min=" << rh.below_min << " fraction=" << fmt(rh.below_min_fraction) << '\n';
        h << "bin_lo,density\n";
        for (std::size_t k = 0; k < dens.size(); ++k) h << fmt(rh.histogram.bin_lo(k)) << ',' << fmt(dens[k]) << '\n';
        write_text(dir / "response_hist.csv", h.str());
    }

    // cross-scale vs cross-orientation correlation
    {
        std::ostringstream rows;
        rows << "recording,segment,label,scale_cc,orientation_cc\n";
        std::vector<double> scc, occ;
        for (std::size_t r = 0; r < features.size(); ++r) {
            for (std::size_t k = 0; k < features[r].segments.size(); ++k) {
                const auto s = scale_cc(features[r].segments[k]);
                const auto o = orientation_cc(features[r].segments[k]);
                rows << r << ',' << k << ',' << features[r].label << ',' << fmt(s.mean) << ',' << fmt(o.mean) << '\n';
                if (s.pairs) scc.push_back(s.mean);
                if (o.pairs) occ.push_back(o.mean);
            }
        }
        write_text(dir / "cc.csv", rows.str());
        auto mean = [](const std::vector<double>& v) {
            return v.empty() ? std::nan("") : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        };
        std::ostringstream summary;
        summary << "measure,mean,samples\n"
                << "scale," << fmt(mean(scc)) << ',' << scc.size() << '\n'
                << "orientation," << fmt(mean(occ)) << ',' << occ.size() << '\n';
        write_text(dir / "cc_summary.csv", summary.str());
        std::ostringstream h;
        h << "measure,bin_lo,density\n";
        for (const auto& [name, values] : {std::pair{"scale", &scc}, std::pair{"orientation", &occ}}) {
            const auto rh = response_histogram(*values, cc_bin, -std::numeric_limits<double>::infinity());
            const auto dens = rh.histogram.densities();
            for (std::size_t k = 0; k < dens.size(); ++k) {
                h << name << ',' << fmt(rh.histogram.bin_lo(k)) << ',' << fmt(dens[k]) << '\n';
            }
        }
        write_text(dir / "cc_hist.csv", h.str());
    }

    // address counts per fusion mode
    {
        const auto coding = fit_coding_on(features, all, cfg);
        std::ostringstream rows;
        rows << "fusion,addresses,ratio_to_multiscale,spikes\n";
        const C1Maps* probe = nullptr;
        for (const auto& f : features) {
            if (!f.segments.empty()) {
                probe = &f.segments.front();
                break;
            }
        }
        if (!probe) throw DataError("no segments to analyze");
        const double base =
            address_count(FusionMode::multiscale, probe->n_scales, probe->n_orientations, probe->width, probe->height);
        for (auto mode : kFusionModes) {
            const auto n = address_count(mode, probe->n_scales, probe->n_orientations, probe->width, probe->height);
            std::size_t spikes = 0;
            for (const auto& f : features) {
                for (const auto& c1 : f.segments) spikes += encode(c1, coding, mode).spikes.size();
            }
            rows << to_string(mode) << ',' << n << ',' << fmt(n / base) << ',' << spikes << '\n';
        }
        write_text(dir / "fusion.csv", rows.str());
    }
    write_resolved(config, dir);
    log << "analyze: " << features.size() << " recordings analyzed into " << dir.string() << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& log) {
    CLI::App app{"Multiscale spatio-temporal feature extraction and spiking recognition of event streams", "must"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::vector<std::string> sets;
    app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "global seed");
    app.add_option("--workers", workers, "threads for plasticity-off phases");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--set", sets, "override a config key (key=value), repeatable");

    std::string manifest, model, input;
    double slice_ms = 0.0;
    bool dump_c1 = false;
    std::optional<double> r_max;

    auto* synth = app.add_subcommand("synth", "generate a labeled synthetic dataset and manifest");
    auto* segment = app.add_subcommand("segment", "split one recording into motion-symbol segments");
    segment->add_option("--input", input, "event file (.aers or .csv)")->required();
    segment->add_option("--slice-ms", slice_ms, "fixed time slices instead of MSD (debugging)");
    segment->add_flag("--c1", dump_c1, "also dump C1 maps per segment");
    auto* encode_cmd = app.add_subcommand("encode", "encode the segments of one recording as spike trains");
    encode_cmd->add_option("--input", input, "event file (.aers or .csv)")->required();
    encode_cmd->add_option("--r-max", r_max, "coding r_max (default: fitted on the input)");
    auto* train_cmd = app.add_subcommand("train", "train a model on every recording of a manifest");
    train_cmd->add_option("--manifest", manifest, "dataset manifest CSV");
    train_cmd->add_option("--model", model, "model output path (default <out>/model.bin)");
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a model, or run split.runs train/test repetitions");
    eval_cmd->add_option("--manifest", manifest, "dataset manifest CSV");
    eval_cmd->add_option("--model", model, "trained model; omit to train per split");
    auto* analyze = app.add_subcommand("analyze", "entropy, correlation, histogram and fusion exports");
    analyze->add_option("--manifest", manifest, "dataset manifest CSV");

    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::ostringstream help, error;
        const int code = app.exit(e, help, error);
        out << help.str();
        log << error.str();
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        RunConfig config;
        if (!config_path.empty()) config.load_file(config_path);
        for (const auto& s : sets) config.set_assignment(s);
        if (seed) config.set("seed", std::to_string(*seed));
        if (workers) config.set("workers", std::to_string(*workers));
        if (!out_dir.empty()) config.set("path.out", out_dir);
        if (!manifest.empty()) config.set("path.manifest", manifest);
        if (!model.empty()) config.set("path.model", model);

        if (*synth) return cmd_synth(config, log);
        if (*segment) return cmd_segment(config, input, slice_ms, dump_c1, log);
        if (*encode_cmd) return cmd_encode(config, input, r_max, log);
        if (*train_cmd) return cmd_train(config, log);
        if (*eval_cmd) return cmd_eval(config, log);
        return cmd_analyze(config, log);
    } catch (const UsageError& e) {
        log << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DegenerateError& e) {
        log << "numerical degeneracy: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const DataError& e) {
        log << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        log << "data error: " << e.what() << '\n';
        return kExitData;
    }
}

}  // namespace must
