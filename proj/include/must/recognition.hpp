#pragma once

#include "must/snn.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

namespace must {

struct LabeledPattern {
    SpikePattern pattern;
    int label = 0;
    int recording = 0;  // patterns of one recording share this id
};

struct Dataset {
    std::vector<LabeledPattern> items;
    int class_count = 0;

    /// Throws DataError on labels outside [0, class_count) or mixed address counts.
    void validate() const;
    std::uint32_t n_addresses() const { return items.empty() ? 0 : items.front().pattern.n_addresses; }
};

struct TrainConfig {
    std::uint32_t n_learning = 60;
    int epochs = 1;
    std::uint64_t init_seed = 0;
    std::uint64_t shuffle_seed = 0;
    SnnParams snn;
};

/// Called after every training presentation with the item index just shown.
using TrainObserver = std::function<void(const Network&, std::size_t item)>;

/// Unsupervised: labels are never read. Each epoch presents every item once
/// (plasticity and threshold adaptation on) in a freshly shuffled order.
Network train(const Dataset& dataset, const TrainConfig& config, const TrainObserver& observer = {});

struct Model {
    Network network;
    std::vector<std::uint32_t> labels;  // class per learning neuron
    std::vector<bool> silent;           // neuron never fired during assignment
    int class_count = 0;
};

/// Per-neuron class = argmax of summed spike counts over one frozen pass of
/// the training set; ties go to the lowest class, silent neurons to class 0.
Model assign_labels(Network network, const Dataset& dataset, int workers = 1);

struct Prediction {
    int label = 0;
    std::vector<double> class_means;  // mean spike count per class's neurons
    bool no_response = false;
};

/// Class-averaged counts with lowest-index tie-break. Classes without
/// neurons cannot win.
Prediction predict_from_counts(std::span<const std::uint32_t> neuron_labels, std::span<const std::uint64_t> counts,
                               int class_count);
Prediction predict(const Model& model, const SpikePattern& pattern);

struct EvalReport {
    double accuracy = 0.0;
    std::vector<std::vector<std::uint64_t>> confusion;  // [true][predicted]
    std::vector<double> per_class_accuracy;             // NaN for classes absent from the test set
    std::uint64_t total = 0;
    std::uint64_t no_response = 0;
};

/// One prediction per recording: spike counts of all its patterns are summed
/// before class averaging.
EvalReport evaluate(const Model& model, const Dataset& dataset, int workers = 1);

/// Little-endian: u32 n_e, u32 n_l, f64 weights[n_e * n_l] (row-major),
/// f64 thresholds[n_l], u32 labels[n_l].
void save_model(const Model& model, const std::filesystem::path& path);
/// Hyperparameters and class count are not part of the file.
Model load_model(const std::filesystem::path& path, const SnnParams& params, int class_count);

}  // namespace must
