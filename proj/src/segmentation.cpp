#include "must/segmentation.hpp"

#include "must/errors.hpp"

#include <cmath>

namespace must {

void MsdConfig::validate() const {
    if (!(tau_ms > 0)) throw UsageError("msd.tau_ms must be positive");
    if (!(threshold >= 0)) throw UsageError("msd.threshold must be non-negative");
    if (confirm_window < 1) throw UsageError("msd.confirm_window must be at least 1");
    if (!(max_segment_ms > 0)) throw UsageError("msd.max_segment_ms must be positive");
}

void msd_update(MsdState& state, const Event& event, const MsdConfig& config) {
    const double t = event.t_ms();
    if (state.last_event_ms) {
        if (t < *state.last_event_ms) throw DataError("msd: timestamp regression");
        // exp(-dt / inf) == 1, so an infinite tau gives a plain counter
        state.potential *= std::exp(-(t - *state.last_event_ms) / config.tau_ms);
    }
    state.potential += 1.0;
    state.last_event_ms = t;
    state.queue.push_back(event);

    const PotentialSample sample{t, state.potential, event.t_us};
    state.recent.push_back(sample);
    while (state.recent.size() > static_cast<std::size_t>(config.confirm_window) + 1) state.recent.pop_front();

    if (!state.candidate || sample.potential >= state.candidate->potential) {
        state.candidate = sample;
        state.samples_below_candidate = 0;
    } else {
        ++state.samples_below_candidate;
    }
}

MotionSymbolDetector::MotionSymbolDetector(MsdConfig config) : config_(config) {
    config_.validate();
}

Segment MotionSymbolDetector::flush_through(std::uint32_t t_end_us, bool whole_queue) {
    Segment seg;
    auto& q = state_.queue;
    while (!q.empty() && (whole_queue || q.front().t_us <= t_end_us)) {
        seg.events.push_back(q.front());
        q.pop_front();
    }
    seg.t_start_us = seg.events.front().t_us;
    seg.t_end_us = whole_queue ? seg.events.back().t_us : t_end_us;

    state_.potential = 0.0;
    state_.recent.clear();
    state_.candidate.reset();
    state_.samples_below_candidate = 0;
    return seg;
}

std::optional<Segment> MotionSymbolDetector::push(const Event& event) {
    if (state_.last_event_ms && event.t_ms() < *state_.last_event_ms) {
        throw DataError("msd: timestamp regression");
    }
    std::optional<Segment> out;
    if (!state_.queue.empty()) {
        const double span_ms = (static_cast<double>(event.t_us) - state_.queue.front().t_us) / 1000.0;
        if (span_ms > config_.max_segment_ms) out = flush_through(state_.queue.back().t_us, true);
    }

    msd_update(state_, event, config_);

    if (!out && state_.candidate && state_.samples_below_candidate >= config_.confirm_window &&
        state_.candidate->potential >= config_.threshold) {
        const auto peak = *state_.candidate;
        peaks_.push_back(peak.t_ms);
        out = flush_through(peak.t_us, false);
    }
    return out;
}

std::optional<Segment> MotionSymbolDetector::finish() {
    if (!config_.flush_tail || state_.queue.empty()) return std::nullopt;
    return flush_through(state_.queue.back().t_us, true);
}

std::vector<Segment> segment_stream(const EventStream& stream, const MsdConfig& config) {
    MotionSymbolDetector msd(config);
    std::vector<Segment> segments;
    for (const auto& e : stream.events) {
        if (auto seg = msd.push(e)) segments.push_back(std::move(*seg));
    }
    if (auto seg = msd.finish()) segments.push_back(std::move(*seg));
    return segments;
}

std::vector<Segment> slice_stream(const EventStream& stream, double slice_ms) {
    if (!(slice_ms > 0)) throw UsageError("slice length must be positive");
    std::vector<Segment> segments;
    std::uint64_t current = 0;
    for (const auto& e : stream.events) {
        const auto index = static_cast<std::uint64_t>(std::floor(e.t_ms() / slice_ms));
        if (segments.empty() || index != current) {
            segments.emplace_back();
            segments.back().t_start_us = e.t_us;
            current = index;
        }
        segments.back().events.push_back(e);
        segments.back().t_end_us = e.t_us;
    }
    return segments;
}

}  // namespace must
