#pragma once

#include "must/config.hpp"
#include "must/event_io.hpp"
#include "must/features.hpp"
#include "must/recognition.hpp"
#include "must/segmentation.hpp"
#include "must/snn.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace must {

// ---------------------------------------------------------------------------
// Manifests: CSV with header "path,label"; relative paths resolve against the
// manifest's directory.
// ---------------------------------------------------------------------------

struct ManifestEntry {
    std::filesystem::path path;
    int label = 0;
};

struct Manifest {
    std::vector<ManifestEntry> entries;

    /// max label + 1 (0 for an empty manifest).
    int class_count() const;
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Typed view of a RunConfig
// ---------------------------------------------------------------------------

struct SynthConfig {
    int classes = 3;
    int per_class = 40;
    std::uint16_t width = 32;
    std::uint16_t height = 32;
    double duration_ms = 50.0;
    double event_rate = 20.0;
    double noise_rate = 0.5;
    double speed = 0.3;
    double size_px = 16.0;
    double jitter_px = 0.5;
    double orientation_jitter_deg = 5.0;
    double position_jitter_px = 1.0;
    EventFormat format = EventFormat::binary;
};

struct PipelineConfig {
    std::uint64_t seed = 1;
    int workers = 1;
    MsdConfig msd;
    GaborParams gabor;
    double tau_leak_ms = 50.0;
    CodingKind coding = CodingKind::log;
    double t_w = 500.0;
    double r_min = 0.2;
    FusionMode fusion = FusionMode::multiscale;
    SnnParams snn;
    std::uint32_t n_learning = 60;
    int epochs = 1;
    std::uint64_t snn_seed = 0;
    std::uint64_t shuffle_seed = 0;
    double split_fraction = 0.9;
    int runs = 1;
    SynthConfig synth;

    /// Reads every key. feature.tau_leak_ms is required only when
    /// `need_features` is set. Empty snn.seed / train.shuffle_seed derive from seed.
    static PipelineConfig from(const RunConfig& config, bool need_features = true);
};

/// Class `cls` (0 bar, 1 disc, 2 corner) moving down the sensor with jittered
/// start, heading and orientation; recording `index` picks the sub-seed.
SynthSpec synth_spec_for(const SynthConfig& synth, int cls, int index, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Features and datasets
// ---------------------------------------------------------------------------

/// C1 maps of every MSD segment of one recording.
struct RecordingFeatures {
    int label = 0;
    int recording = 0;
    std::vector<C1Maps> segments;
};

RecordingFeatures extract_recording(const EventStream& stream, const PipelineConfig& config, const GaborBank& bank);

std::vector<RecordingFeatures> extract_features(const Manifest& manifest, const PipelineConfig& config);

/// Every C1 response of the selected recordings.
std::vector<double> collect_responses(std::span<const RecordingFeatures> features, std::span<const std::size_t> which);

/// fit_coding over the responses of the selected recordings.
CodingParams fit_coding_on(std::span<const RecordingFeatures> features, std::span<const std::size_t> which,
                           const PipelineConfig& config);

/// One item per segment of every selected recording.
Dataset build_dataset(std::span<const RecordingFeatures> features, std::span<const std::size_t> which,
                      const CodingParams& coding, FusionMode fusion, int class_count);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per-class shuffle; round(fraction * n_c) recordings of each class go to
/// training. Both lists are returned in ascending order.
Split stratified_split(std::span<const RecordingFeatures> features, double fraction, std::uint64_t seed);

struct TrainedModel {
    Model model;
    CodingParams coding;
};

/// fit_coding -> encode -> train -> assign_labels on the selected recordings.
TrainedModel train_pipeline(std::span<const RecordingFeatures> features, std::span<const std::size_t> train_set,
                            const PipelineConfig& config, int class_count, const TrainObserver& observer = {});

}  // namespace must
