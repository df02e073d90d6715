#include "must/snn.hpp"

#include "must/errors.hpp"
#include "must/random.hpp"

#include <algorithm>
#include <stdexcept>
#include <type_traits>

namespace must {

void SnnParams::validate() const {
    for (double tau : {tau_m, tau_ge, tau_gi, tau_thr, tau_apre, tau_apost, tau_apost2}) {
        if (!(tau > 0)) throw UsageError("snn: time constants must be positive");
    }
    if (!(dt_ms > 0)) throw UsageError("snn.dt_ms must be positive");
    if (!(t_d_ms >= 0)) throw UsageError("snn.t_d_ms must be non-negative");
    if (!(norm_L > 0)) throw UsageError("snn.norm_L must be positive");
    if (!(a_plus >= 0) || !(a_minus >= 0) || !(w_inh >= 0) || !(v_plus >= 0)) {
        throw UsageError("snn: learning rates, w_inh and v_plus must be non-negative");
    }
}

void on_pre_spike(SynapseState& syn, double t, const SnnParams& p) {
    syn.w = std::max(0.0, syn.w - p.a_minus * syn.a_post(t, p));
    syn.last_pre_t = t;
}

void on_post_spike(SynapseState& syn, double t, const SnnParams& p) {
    syn.w += p.a_plus * syn.a_pre(t, p) * syn.a_post2(t, p);
    syn.last_post_t = t;
}

Network::Network(std::uint32_t n_e, std::uint32_t n_l, const SnnParams& params, std::uint64_t seed)
    : n_e_(n_e), n_l_(n_l), params_(params) {
    params_.validate();
    if (n_e == 0 || n_l == 0) throw UsageError("network needs at least one encoding and one learning neuron");
    Rng rng(seed);
    weights_.resize(static_cast<std::size_t>(n_e) * n_l);
    for (auto& w : weights_) w = uniform01(rng);
    thresholds_.assign(n_l, params_.v_t);
    normalize_weights(*this, params_.norm_L);
}

Network::Network(std::uint32_t n_e, std::uint32_t n_l, const SnnParams& params, std::vector<double> weights,
                 std::vector<double> thresholds)
    : n_e_(n_e), n_l_(n_l), params_(params), weights_(std::move(weights)), thresholds_(std::move(thresholds)) {
    params_.validate();
    if (weights_.size() != static_cast<std::size_t>(n_e) * n_l || thresholds_.size() != n_l) {
        throw DataError("network: weight or threshold array has the wrong size");
    }
}

double Network::column_sum(std::uint32_t j) const {
    double sum = 0.0;
    for (std::uint32_t i = 0; i < n_e_; ++i) sum += weight(i, j);
    return sum;
}

void normalize_weights(Network& network, double L) {
    const auto n_e = network.n_e(), n_l = network.n_l();
    auto w = network.weights();
    std::vector<double> sums(n_l, 0.0);
    for (std::uint32_t i = 0; i < n_e; ++i) {
        for (std::uint32_t j = 0; j < n_l; ++j) sums[j] += w[static_cast<std::size_t>(i) * n_l + j];
    }
    for (std::uint32_t j = 0; j < n_l; ++j) {
        if (!(sums[j] > 0)) {
            throw DegenerateError("normalize: learning neuron " + std::to_string(j) + " has no incoming weight");
        }
        sums[j] = L / sums[j];
    }
    for (std::uint32_t i = 0; i < n_e; ++i) {
        for (std::uint32_t j = 0; j < n_l; ++j) w[static_cast<std::size_t>(i) * n_l + j] *= sums[j];
    }
}

Simulation::Simulation(const Network& network, SimOptions options)
    : net_(&network), options_(options), dt_(network.params().dt_ms) {
    if (options_.plasticity) throw std::logic_error("Simulation: plasticity needs a mutable network");
    init();
}

Simulation::Simulation(Network& network, SimOptions options)
    : net_(&network), mutable_net_(&network), options_(options), dt_(network.params().dt_ms) {
    init();
}

void Simulation::init() {
    neurons_.resize(net_->n_l());
    last_post_.resize(net_->n_l());
    last_pre_.resize(net_->n_e());
    reset();
}

void Simulation::reset() {
    const auto& p = net_->params();
    const auto thresholds = net_->thresholds();
    for (std::uint32_t j = 0; j < net_->n_l(); ++j) {
        auto& n = neurons_[j];
        n.v = p.v_rest;
        n.g_e = 0.0;
        n.g_i = 0.0;
        n.v_thr = thresholds[j];
        n.spike_count = 0;
    }
    std::fill(last_pre_.begin(), last_pre_.end(), kNever);
    std::fill(last_post_.begin(), last_post_.end(), kNever);
    pending_inhibition_.clear();
    raster_.clear();
    steps_ = 0;
}

void Simulation::step(std::span<const std::uint32_t> due_inputs) {
    const auto& p = net_->params();
    const std::uint32_t n_l = net_->n_l();
    const double t = static_cast<double>(steps_ + 1) * dt_;
    const double decay_ge = std::exp(-dt_ / p.tau_ge);
    const double decay_gi = std::exp(-dt_ / p.tau_gi);
    const double decay_thr = std::exp(-dt_ / p.tau_thr);
    // mean of an exponentially decaying conductance over the step, per unit start value
    const double mean_ge = p.tau_ge / dt_ * (1.0 - decay_ge);
    const double mean_gi = p.tau_gi / dt_ * (1.0 - decay_gi);

    for (auto& n : neurons_) {
        const double g_e = n.g_e * mean_ge, g_i = n.g_i * mean_gi;
        const double dv = (p.v_rest - n.v) + g_e * (p.e_exc - n.v) + g_i * (p.e_inh - n.v);
        n.v += dt_ / p.tau_m * dv;
        n.g_e *= decay_ge;
        n.g_i *= decay_gi;
        if (options_.adapt_thresholds) n.v_thr = p.v_t + (n.v_thr - p.v_t) * decay_thr;
    }

    if (!due_inputs.empty()) {
        const auto weights = net_->weights();
        std::vector<double> a_post;
        if (options_.plasticity) {
            a_post.resize(n_l);
            for (std::uint32_t j = 0; j < n_l; ++j) a_post[j] = trace_at(last_post_[j], t, p.tau_apost);
        }
        for (const auto i : due_inputs) {
            const std::size_t row = static_cast<std::size_t>(i) * n_l;
            for (std::uint32_t j = 0; j < n_l; ++j) neurons_[j].g_e += weights[row + j];
            if (options_.plasticity) {
                auto w = mutable_net_->weights();
                for (std::uint32_t j = 0; j < n_l; ++j) w[row + j] = std::max(0.0, w[row + j] - p.a_minus * a_post[j]);
            }
            last_pre_[i] = t;
        }
    }

    constexpr double kDueSlack = 1e-9;
    while (!pending_inhibition_.empty() && pending_inhibition_.front().first <= t + kDueSlack) {
        const auto source = pending_inhibition_.front().second;
        pending_inhibition_.pop_front();
        for (std::uint32_t j = 0; j < n_l; ++j) {
            if (j != source) neurons_[j].g_i += p.w_inh;
        }
    }

    fired_.clear();
    for (std::uint32_t j = 0; j < n_l; ++j) {
        if (neurons_[j].v > neurons_[j].v_thr) fired_.push_back(j);
    }
    if (fired_.empty()) {
        ++steps_;
        return;
    }

    std::vector<double> a_pre;
    if (options_.plasticity) {
        a_pre.resize(net_->n_e());
        for (std::uint32_t i = 0; i < net_->n_e(); ++i) a_pre[i] = trace_at(last_pre_[i], t, p.tau_apre);
    }
    for (const auto j : fired_) {
        auto& n = neurons_[j];
        n.v = p.v_reset;
        if (options_.adapt_thresholds) n.v_thr += p.v_plus;
        ++n.spike_count;
        if (options_.record_raster) raster_.push_back({j, t});
        pending_inhibition_.emplace_back(t + p.t_d_ms, j);
        if (options_.plasticity) {
            const double a_post2 = trace_at(last_post_[j], t, p.tau_apost2);
            if (a_post2 > 0.0) {
                auto w = mutable_net_->weights();
                const double gain = p.a_plus * a_post2;
                for (std::uint32_t i = 0; i < net_->n_e(); ++i) {
                    w[static_cast<std::size_t>(i) * n_l + j] += gain * a_pre[i];
                }
            }
        }
        last_post_[j] = t;
    }
    ++steps_;
}

void Simulation::commit_thresholds() {
    if (!mutable_net_) throw std::logic_error("Simulation: read-only network");
    auto thr = mutable_net_->thresholds();
    for (std::uint32_t j = 0; j < net_->n_l(); ++j) thr[j] = neurons_[j].v_thr;
}

namespace {

template <typename Net>
PresentationResult run_presentation(Net& network, const SpikePattern& pattern, const SimOptions& sim_options,
                                    double duration_ms) {
    const double duration = duration_ms > 0 ? duration_ms : pattern.t_w;
    if (duration < pattern.t_w) throw UsageError("presentation shorter than the coding window");
    for (const auto& s : pattern.spikes) {
        if (s.address >= network.n_e()) {
            throw DataError("pattern address " + std::to_string(s.address) + " outside network with " +
                            std::to_string(network.n_e()) + " encoding neurons");
        }
    }

    Simulation sim(network, sim_options);
    const double dt = network.params().dt_ms;
    const auto n_steps = static_cast<std::uint64_t>(std::ceil(duration / dt - 1e-9));
    std::vector<std::uint32_t> due;
    std::size_t cursor = 0;
    for (std::uint64_t k = 1; k <= n_steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        due.clear();
        while (cursor < pattern.spikes.size() && pattern.spikes[cursor].time_ms <= t + 1e-9) {
            due.push_back(pattern.spikes[cursor++].address);
        }
        sim.step(due);
    }

    PresentationResult result;
    result.counts.reserve(network.n_l());
    for (const auto& n : sim.neurons()) result.counts.push_back(n.spike_count);
    result.raster = sim.raster();
    if constexpr (!std::is_const_v<Net>) {
        if (sim_options.adapt_thresholds) sim.commit_thresholds();
    }
    return result;
}

}  // namespace

PresentationResult present(Network& network, const SpikePattern& pattern, const PresentOptions& options) {
    const SimOptions sim{options.plasticity, options.adapt_thresholds, options.record_raster};
    auto result = run_presentation(network, pattern, sim, options.duration_ms);
    if (options.plasticity) normalize_weights(network, network.params().norm_L);
    return result;
}

PresentationResult present_frozen(const Network& network, const SpikePattern& pattern, double duration_ms,
                                  bool record_raster) {
    return run_presentation(network, pattern, SimOptions{false, false, record_raster}, duration_ms);
}

}  // namespace must
