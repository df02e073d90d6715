#pragma once

#include "must/event_io.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

namespace must {

/// Motion symbol detection parameters. Config keys msd.*.
struct MsdConfig {
    double tau_ms = 20.0;
    double threshold = 30.0;
    int confirm_window = 3;
    bool flush_tail = true;
    double max_segment_ms = 2000.0;

    void validate() const;
};

struct Segment {
    std::vector<Event> events;
    std::uint32_t t_start_us = 0;
    std::uint32_t t_end_us = 0;

    double t_end_ms() const { return static_cast<double>(t_end_us) / 1000.0; }
};

struct PotentialSample {
    double t_ms;
    double potential;
    std::uint32_t t_us;
};

/// Leaky integrator over event arrivals plus the pending event queue.
///
/// A peak is the largest sample since the last flush that is followed by
/// `confirm_window` samples strictly below it and reaches the threshold.
struct MsdState {
    double potential = 0.0;
    std::optional<double> last_event_ms;
    std::deque<PotentialSample> recent;  // last confirm_window + 1 samples
    std::deque<Event> queue;

    std::optional<PotentialSample> candidate;
    int samples_below_candidate = 0;
};

/// Integrates one event: potential <- potential * exp(-dt / tau) + 1, then
/// queues it and records the sample. Throws DataError on time regression.
void msd_update(MsdState& state, const Event& event, const MsdConfig& config);

/// Streaming segmenter; feed events in order, collect segments as peaks are
/// confirmed.
class MotionSymbolDetector {
public:
    explicit MotionSymbolDetector(MsdConfig config);

    /// Returns a segment when this event confirms a peak or forces a
    /// max-duration flush. At most one segment per call.
    std::optional<Segment> push(const Event& event);

    /// End of stream: the remaining queue when flush_tail is enabled.
    std::optional<Segment> finish();

    const MsdState& state() const { return state_; }
    /// Confirmed peak times in ms, in detection order.
    const std::vector<double>& peak_times() const { return peaks_; }

private:
    Segment flush_through(std::uint32_t t_end_us, bool whole_queue);

    MsdConfig config_;
    MsdState state_;
    std::vector<double> peaks_;
};

std::vector<Segment> segment_stream(const EventStream& stream, const MsdConfig& config);

/// Debug partitioning into fixed time slices of `slice_ms`; empty slices are
/// skipped.
std::vector<Segment> slice_stream(const EventStream& stream, double slice_ms);

}  // namespace must
