#include "must/recognition.hpp"

#include "must/errors.hpp"
#include "must/random.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <type_traits>

namespace must {

void Dataset::validate() const {
    if (class_count <= 0) throw DataError("dataset: class count must be positive");
    for (const auto& item : items) {
        if (item.label < 0 || item.label >= class_count) {
            throw DataError("dataset: label " + std::to_string(item.label) + " outside [0, " +
                            std::to_string(class_count) + ")");
        }
        if (item.pattern.n_addresses != n_addresses()) throw DataError("dataset: patterns differ in address count");
    }
}

Network train(const Dataset& dataset, const TrainConfig& config, const TrainObserver& observer) {
    if (dataset.items.empty()) throw DataError("train: empty training set");
    if (config.epochs < 0) throw UsageError("train.epochs must be non-negative");
    const auto n_e = dataset.n_addresses();
    for (const auto& item : dataset.items) {
        if (item.pattern.n_addresses != n_e) throw DataError("train: patterns differ in address count");
    }

    Network net(n_e, config.n_learning, config.snn, config.init_seed);
    Rng rng(config.shuffle_seed);
    std::vector<std::size_t> order(dataset.items.size());
    const PresentOptions options{.plasticity = true, .adapt_thresholds = true};
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        // Fisher-Yates with our own index draw so the order is library independent
        for (std::size_t k = order.size(); k > 1; --k) {
            const auto r = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(k));
            std::swap(order[k - 1], order[std::min(r, k - 1)]);
        }
        for (const auto idx : order) {
            present(net, dataset.items[idx].pattern, options);
            if (observer) observer(net, idx);
        }
    }
    return net;
}

namespace {

std::vector<std::vector<std::uint32_t>> frozen_counts(const Network& net, const Dataset& dataset, int workers) {
    std::vector<std::vector<std::uint32_t>> counts(dataset.items.size());
    detail::parallel_for(dataset.items.size(), workers, [&](std::size_t i) {
        counts[i] = present_frozen(net, dataset.items[i].pattern).counts;
    });
    return counts;
}

}  // namespace

Model assign_labels(Network network, const Dataset& dataset, int workers) {
    dataset.validate();
    const auto n_l = network.n_l();
    const auto counts = frozen_counts(network, dataset, workers);

    // [neuron][class]
    std::vector<std::vector<std::uint64_t>> per_class(n_l, std::vector<std::uint64_t>(dataset.class_count, 0));
    for (std::size_t i = 0; i < dataset.items.size(); ++i) {
        const auto c = static_cast<std::size_t>(dataset.items[i].label);
        for (std::uint32_t j = 0; j < n_l; ++j) per_class[j][c] += counts[i][j];
    }

    Model model{std::move(network), std::vector<std::uint32_t>(n_l, 0), std::vector<bool>(n_l, false),
                dataset.class_count};
    for (std::uint32_t j = 0; j < n_l; ++j) {
        const auto& row = per_class[j];
        const auto best = std::max_element(row.begin(), row.end());  // first maximum: lowest class wins ties
        model.labels[j] = static_cast<std::uint32_t>(best - row.begin());
        model.silent[j] = *best == 0;
    }
    return model;
}

Prediction predict_from_counts(std::span<const std::uint32_t> neuron_labels, std::span<const std::uint64_t> counts,
                               int class_count) {
    Prediction p;
    p.class_means.assign(static_cast<std::size_t>(class_count), 0.0);
    std::vector<std::uint64_t> members(static_cast<std::size_t>(class_count), 0);
    std::uint64_t total = 0;
    for (std::size_t j = 0; j < neuron_labels.size(); ++j) {
        const auto c = neuron_labels[j];
        if (c >= static_cast<std::uint32_t>(class_count)) throw DataError("predict: neuron label outside class range");
        p.class_means[c] += static_cast<double>(counts[j]);
        ++members[c];
        total += counts[j];
    }
    double best = -1.0;
    for (int c = 0; c < class_count; ++c) {
        if (members[c] == 0) continue;
        p.class_means[c] /= static_cast<double>(members[c]);
        if (p.class_means[c] > best) {
            best = p.class_means[c];
            p.label = c;
        }
    }
    if (total == 0) {
        p.no_response = true;
        p.label = 0;
    }
    return p;
}

Prediction predict(const Model& model, const SpikePattern& pattern) {
    const auto r = present_frozen(model.network, pattern);
    const std::vector<std::uint64_t> counts(r.counts.begin(), r.counts.end());
    return predict_from_counts(model.labels, counts, model.class_count);
}

EvalReport evaluate(const Model& model, const Dataset& dataset, int workers) {
    if (dataset.items.empty()) throw DataError("evaluate: empty test set");
    dataset.validate();
    if (dataset.class_count != model.class_count) {
        throw DataError("evaluate: model has " + std::to_string(model.class_count) + " classes, test set has " +
                        std::to_string(dataset.class_count));
    }
    const auto counts = frozen_counts(model.network, dataset, workers);

    // recordings in order of first appearance
    std::map<int, std::size_t> slot;
    std::vector<std::vector<std::uint64_t>> summed;
    std::vector<int> truth;
    for (std::size_t i = 0; i < dataset.items.size(); ++i) {
        const auto& item = dataset.items[i];
        auto [it, inserted] = slot.try_emplace(item.recording, summed.size());
        if (inserted) {
            summed.emplace_back(model.network.n_l(), 0);
            truth.push_back(item.label);
        } else if (truth[it->second] != item.label) {
            throw DataError("evaluate: recording " + std::to_string(item.recording) + " has conflicting labels");
        }
        auto& acc = summed[it->second];
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += counts[i][j];
    }

    const auto k = static_cast<std::size_t>(dataset.class_count);
    EvalReport report;
    report.confusion.assign(k, std::vector<std::uint64_t>(k, 0));
    std::uint64_t correct = 0;
    for (std::size_t r = 0; r < summed.size(); ++r) {
        const auto p = predict_from_counts(model.labels, summed[r], model.class_count);
        ++report.confusion[static_cast<std::size_t>(truth[r])][static_cast<std::size_t>(p.label)];
        if (p.label == truth[r]) ++correct;
        if (p.no_response) ++report.no_response;
    }
    report.total = summed.size();
    report.accuracy = static_cast<double>(correct) / static_cast<double>(report.total);
    report.per_class_accuracy.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        const auto row = std::accumulate(report.confusion[c].begin(), report.confusion[c].end(), std::uint64_t{0});
        const auto hits = static_cast<double>(report.confusion[c][c]);
        report.per_class_accuracy[c] =
            row == 0 ? std::numeric_limits<double>::quiet_NaN() : hits / static_cast<double>(row);
    }
    return report;
}

namespace {

template <typename T>
void put(std::ostream& out, T value) {
    unsigned char bytes[sizeof(T)];
    std::uint64_t bits = 0;
    if constexpr (std::is_floating_point_v<T>) {
        static_assert(sizeof(T) == 8);
        std::memcpy(&bits, &value, 8);
    } else {
        bits = static_cast<std::uint64_t>(value);
    }
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(const std::string& buf, std::size_t& offset) {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[offset + i])) << (8 * i);
    }
    offset += sizeof(T);
    if constexpr (std::is_floating_point_v<T>) {
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    } else {
        return static_cast<T>(bits);
    }
}

}  // namespace

void save_model(const Model& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write model '" + path.string() + "'");
    const auto& net = model.network;
    put<std::uint32_t>(out, net.n_e());
    put<std::uint32_t>(out, net.n_l());
    for (double w : net.weights()) put<double>(out, w);
    for (double t : net.thresholds()) put<double>(out, t);
    for (auto label : model.labels) put<std::uint32_t>(out, label);
    if (!out) throw DataError("write failed for model '" + path.string() + "'");
}

Model load_model(const std::filesystem::path& path, const SnnParams& params, int class_count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string buf = ss.str();
    if (buf.size() < 8) throw DataError("model file truncated");
    std::size_t off = 0;
    const auto n_e = get<std::uint32_t>(buf, off);
    const auto n_l = get<std::uint32_t>(buf, off);
    const std::uint64_t expected = 8 + 8ULL * n_e * n_l + 8ULL * n_l + 4ULL * n_l;
    if (buf.size() != expected) {
        throw DataError("model file has " + std::to_string(buf.size()) + " bytes, expected " +
                        std::to_string(expected));
    }
    std::vector<double> weights(static_cast<std::size_t>(n_e) * n_l);
    for (auto& w : weights) w = get<double>(buf, off);
    std::vector<double> thresholds(n_l);
    for (auto& t : thresholds) t = get<double>(buf, off);
    std::vector<std::uint32_t> labels(n_l);
    for (auto& l : labels) {
        l = get<std::uint32_t>(buf, off);
        if (l >= static_cast<std::uint32_t>(class_count)) {
            throw DataError("model assigns class " + std::to_string(l) + " but only " + std::to_string(class_count) +
                            " classes exist");
        }
    }
    return Model{Network(n_e, n_l, params, std::move(weights), std::move(thresholds)), std::move(labels),
                 std::vector<bool>(n_l, false), class_count};
}

}  // namespace must
