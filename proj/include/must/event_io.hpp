#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace must {

/// One address event. Timestamps are microseconds.
struct Event {
    std::uint32_t t_us = 0;
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::uint8_t polarity = 0;  // 0 = light-to-dark, 1 = dark-to-light

    double t_ms() const { return static_cast<double>(t_us) / 1000.0; }

    friend bool operator==(const Event&, const Event&) = default;
};

struct SensorHeader {
    std::uint16_t width = 32;
    std::uint16_t height = 32;
    std::uint16_t version = 1;

    friend bool operator==(const SensorHeader&, const SensorHeader&) = default;
};

/// A time-ordered event recording. The label is metadata and is not serialized
/// by either file format (datasets carry labels in their manifest).
struct EventStream {
    SensorHeader header;
    std::vector<Event> events;
    std::optional<int> label;

    friend bool operator==(const EventStream& a, const EventStream& b) {
        return a.header == b.header && a.events == b.events;
    }
};

enum class EventFormat { binary, csv };

EventFormat parse_event_format(std::string_view name);
std::string_view to_string(EventFormat format);
/// ".aers" -> binary, ".csv" -> csv.
EventFormat event_format_for(const std::filesystem::path& path);

/// Binary layout (little-endian):
///   "AERS" u16 version u16 width u16 height u64 count, then count records of
///   u32 t_us, u16 x, u16 y, u8 polarity.
inline constexpr std::size_t kBinaryHeaderSize = 18;
inline constexpr std::size_t kBinaryRecordSize = 9;

/// Throws DataError if any event is out of bounds, has polarity > 1, or
/// goes back in time.
void validate(const EventStream& stream);

EventStream parse_events(std::string_view bytes, EventFormat format);
std::string serialize_events(const EventStream& stream, EventFormat format);

EventStream read_events(const std::filesystem::path& path, EventFormat format);
void write_events(const EventStream& stream, const std::filesystem::path& path, EventFormat format);

enum class ShapeKind { bar = 0, disc = 1, corner = 2 };

std::string_view to_string(ShapeKind kind);
ShapeKind parse_shape_kind(std::string_view name);

/// A moving shape whose contour emits events at a fixed rate, plus uniform
/// background noise.
struct SynthSpec {
    ShapeKind kind = ShapeKind::bar;
    std::uint16_t width = 32;
    std::uint16_t height = 32;
    double orientation_deg = 0.0;  // bar axis / corner first arm
    double size_px = 12.0;         // bar length, disc diameter, corner arm span
    double start_x = 16.0;
    double start_y = 16.0;
    double velocity_x = 0.0;  // pixels per ms
    double velocity_y = 0.0;
    double duration_ms = 50.0;
    double event_rate = 20.0;  // contour events per ms
    double noise_rate = 0.0;   // background events per ms
    double jitter_px = 0.5;    // gaussian position noise on contour events
    std::uint64_t seed = 0;

    void validate() const;
};

/// Deterministic in `spec`; the stream is labeled with the shape kind.
EventStream synthesize(const SynthSpec& spec);

}  // namespace must
