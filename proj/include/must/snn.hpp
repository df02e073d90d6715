#pragma once

#include "must/features.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

namespace must {

/// Learning-layer hyperparameters. Voltages in mV, times in ms. Config keys snn.*.
struct SnnParams {
    double v_rest = -65.0;
    double v_reset = -65.0;
    double e_exc = 0.0;
    double e_inh = -100.0;
    double tau_m = 100.0;
    double tau_ge = 1.0;
    double tau_gi = 2.0;
    double v_t = -63.5;
    double v_plus = 0.07;
    double tau_thr = 1e7;
    double tau_apre = 20.0;
    double tau_apost = 30.0;
    double tau_apost2 = 40.0;
    double a_plus = 0.1;
    double a_minus = 0.001;
    double w_inh = 2.4;
    double t_d_ms = 0.3;
    double dt_ms = 0.5;
    double norm_L = 47.0;

    void validate() const;
};

// ---------------------------------------------------------------------------
// Nearest-spike triplet STDP
// ---------------------------------------------------------------------------

inline constexpr double kNever = -std::numeric_limits<double>::infinity();

/// Nearest-spike trace: 1 at the last spike, exp(-(t - t_last) / tau) after,
/// 0 before any spike.
inline double trace_at(double last_spike, double t, double tau) {
    return last_spike == kNever ? 0.0 : std::exp(-(t - last_spike) / tau);
}

/// One synapse with its traces, held as last spike times.
struct SynapseState {
    double w = 0.0;
    double last_pre_t = kNever;
    double last_post_t = kNever;

    double a_pre(double t, const SnnParams& p) const { return trace_at(last_pre_t, t, p.tau_apre); }
    double a_post(double t, const SnnParams& p) const { return trace_at(last_post_t, t, p.tau_apost); }
    double a_post2(double t, const SnnParams& p) const { return trace_at(last_post_t, t, p.tau_apost2); }
};

/// Depression w <- max(0, w - A- a_post), then a_pre <- 1.
void on_pre_spike(SynapseState& syn, double t, const SnnParams& p);
/// Potentiation w <- w + A+ a_pre a_post2 (a_post2 read before this spike),
/// then a_post, a_post2 <- 1.
void on_post_spike(SynapseState& syn, double t, const SnnParams& p);

// ---------------------------------------------------------------------------
// Network and simulation
// ---------------------------------------------------------------------------

/// Persistent learning-layer state: n_e x n_l excitatory weights (row-major,
/// row = encoding neuron) and one adaptive threshold per learning neuron.
class Network {
public:
    /// Uniform [0, 1) weights from `seed`, normalized to column sum norm_L;
    /// thresholds start at v_t.
    Network(std::uint32_t n_e, std::uint32_t n_l, const SnnParams& params, std::uint64_t seed);
    Network(std::uint32_t n_e, std::uint32_t n_l, const SnnParams& params, std::vector<double> weights,
            std::vector<double> thresholds);

    std::uint32_t n_e() const { return n_e_; }
    std::uint32_t n_l() const { return n_l_; }
    const SnnParams& params() const { return params_; }
    SnnParams& params() { return params_; }

    double weight(std::uint32_t i, std::uint32_t j) const { return weights_[static_cast<std::size_t>(i) * n_l_ + j]; }
    std::span<const double> weights() const { return weights_; }
    std::span<double> weights() { return weights_; }
    std::span<const double> thresholds() const { return thresholds_; }
    std::span<double> thresholds() { return thresholds_; }

    double column_sum(std::uint32_t j) const;

private:
    std::uint32_t n_e_;
    std::uint32_t n_l_;
    SnnParams params_;
    std::vector<double> weights_;
    std::vector<double> thresholds_;
};

/// w_ij <- w_ij * L / sum_k w_kj for every learning neuron j. Throws
/// DegenerateError on a column that sums to zero.
void normalize_weights(Network& network, double L);

struct NeuronState {
    double v = 0.0;
    double g_e = 0.0;
    double g_i = 0.0;
    double v_thr = 0.0;
    std::uint32_t spike_count = 0;
};

struct RasterEntry {
    std::uint32_t neuron;
    double t_ms;
};

struct SimOptions {
    bool plasticity = false;
    bool adapt_thresholds = false;
    bool record_raster = false;
};

/// Clock-driven simulation of one presentation. Per step of dt:
///   1. forward Euler of the membrane equation, exact decay of g_e, g_i and
///      (when adapting) of v_thr toward v_t;
///   2. due input spikes add w_ij to g_e and apply the pre-spike rule;
///   3. due lateral inhibition adds w_inh to g_i of every other neuron;
///   4. neurons with v > v_thr fire: reset, threshold bump, inhibition
///      scheduled at t + t_d, post-spike rule.
/// Plasticity acts in place on the network's weights.
class Simulation {
public:
    /// Read-only: plasticity must be off; thresholds are copied and any
    /// adaptation stays local to the simulation.
    Simulation(const Network& network, SimOptions options);
    /// Plasticity on or off; thresholds are written back by commit_thresholds().
    Simulation(Network& network, SimOptions options);

    /// V <- v_rest, conductances and traces cleared, clock at 0.
    void reset();

    /// Advances one dt. `due_inputs` are encoding-neuron indices whose
    /// spikes fall in this step.
    void step(std::span<const std::uint32_t> due_inputs);

    double clock() const { return static_cast<double>(steps_) * dt_; }
    std::uint64_t steps() const { return steps_; }
    std::span<const NeuronState> neurons() const { return neurons_; }
    NeuronState& neuron(std::uint32_t j) { return neurons_[j]; }
    const std::vector<RasterEntry>& raster() const { return raster_; }
    double last_pre(std::uint32_t i) const { return last_pre_[i]; }
    double last_post(std::uint32_t j) const { return last_post_[j]; }

    void commit_thresholds();

private:
    void init();

    const Network* net_;
    Network* mutable_net_ = nullptr;
    SimOptions options_;
    double dt_;
    std::uint64_t steps_ = 0;
    std::vector<NeuronState> neurons_;
    std::vector<double> last_pre_;
    std::vector<double> last_post_;
    std::deque<std::pair<double, std::uint32_t>> pending_inhibition_;
    std::vector<RasterEntry> raster_;
    std::vector<std::uint32_t> fired_;
};

struct PresentationResult {
    std::vector<std::uint32_t> counts;
    std::vector<RasterEntry> raster;  // empty unless requested
};

struct PresentOptions {
    bool plasticity = false;
    bool adapt_thresholds = false;
    bool record_raster = false;
    /// Presentation length in ms; 0 means the pattern's t_w.
    double duration_ms = 0.0;
};

/// Resets the dynamic state, feeds the pattern for the duration, and (with
/// plasticity) normalizes once at the end. Throws DataError on an address
/// outside the network.
PresentationResult present(Network& network, const SpikePattern& pattern, const PresentOptions& options);
/// Plasticity-off, frozen-threshold presentation; safe to run concurrently.
PresentationResult present_frozen(const Network& network, const SpikePattern& pattern, double duration_ms = 0.0,
                                  bool record_raster = false);

}  // namespace must
