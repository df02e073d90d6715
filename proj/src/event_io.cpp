#include "must/event_io.hpp"

#include "must/errors.hpp"
#include "must/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace must {

namespace {

constexpr char kMagic[4] = {'A', 'E', 'R', 'S'};
constexpr std::string_view kCsvColumns = "t_us,x,y,p";

template <typename T>
void put_le(std::string& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
    }
}

template <typename T>
T get_le(std::string_view bytes, std::size_t offset) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
    }
    return static_cast<T>(v);
}

// Checks one event against the header and its predecessor; returns an empty
// string when valid.
std::string check_event(const SensorHeader& h, const Event& e, const Event* prev) {
    if (e.x >= h.width) return "x=" + std::to_string(e.x) + " out of bounds";
    if (e.y >= h.height) return "y=" + std::to_string(e.y) + " out of bounds";
    if (e.polarity > 1) return "polarity must be 0 or 1";
    if (prev && e.t_us < prev->t_us) return "timestamp regression";
    return {};
}

void check_header(const SensorHeader& h, const std::string& location) {
    if (h.version != 1) throw ParseError("unsupported format version " + std::to_string(h.version), location);
    if (h.width == 0 || h.height == 0) throw ParseError("sensor dimensions must be positive", location);
}

EventStream parse_binary(std::string_view bytes) {
    if (bytes.size() < kBinaryHeaderSize) throw ParseError("truncated header", "byte 0");
    if (!std::equal(kMagic, kMagic + 4, bytes.begin())) throw ParseError("bad magic", "byte 0");

    EventStream s;
    s.header.version = get_le<std::uint16_t>(bytes, 4);
    s.header.width = get_le<std::uint16_t>(bytes, 6);
    s.header.height = get_le<std::uint16_t>(bytes, 8);
    check_header(s.header, "byte 4");
    const auto count = get_le<std::uint64_t>(bytes, 10);
    const std::size_t payload = bytes.size() - kBinaryHeaderSize;
    if (payload % kBinaryRecordSize != 0 || payload / kBinaryRecordSize != count) {
        throw ParseError("record count " + std::to_string(count) + " does not match payload of " +
                             std::to_string(payload) + " bytes",
                         "byte 10");
    }

    s.events.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t off = kBinaryHeaderSize + k * kBinaryRecordSize;
        Event e;
        e.t_us = get_le<std::uint32_t>(bytes, off);
        e.x = get_le<std::uint16_t>(bytes, off + 4);
        e.y = get_le<std::uint16_t>(bytes, off + 6);
        e.polarity = get_le<std::uint8_t>(bytes, off + 8);
        if (auto err = check_event(s.header, e, s.events.empty() ? nullptr : &s.events.back()); !err.empty()) {
            throw ParseError(err, "byte " + std::to_string(off));
        }
        s.events.push_back(e);
    }
    return s;
}

template <typename T>
bool parse_field(std::string_view text, T& out) {
    if (text.empty()) return false;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

// "# aers version=1 width=32 height=32"
SensorHeader parse_csv_preamble(std::string_view line) {
    const std::string location = "line 1";
    std::istringstream in{std::string(line)};
    std::string hash, tag;
    in >> hash >> tag;
    if (hash != "#" || tag != "aers") throw ParseError("expected '# aers version=.. width=.. height=..'", location);

    SensorHeader h;
    bool seen_w = false, seen_h = false, seen_v = false;
    std::string kv;
    while (in >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ParseError("malformed header field '" + kv + "'", location);
        const std::string_view key(kv.data(), eq);
        const std::string_view val(kv.data() + eq + 1, kv.size() - eq - 1);
        std::uint16_t* target = nullptr;
        if (key == "version") {
            target = &h.version;
            seen_v = true;
        } else if (key == "width") {
            target = &h.width;
            seen_w = true;
        } else if (key == "height") {
            target = &h.height;
            seen_h = true;
        } else {
            throw ParseError("unknown header field '" + std::string(key) + "'", location);
        }
        if (!parse_field(val, *target)) throw ParseError("bad value for '" + std::string(key) + "'", location);
    }
    if (!seen_w || !seen_h || !seen_v) throw ParseError("header must define version, width and height", location);
    check_header(h, location);
    return h;
}

EventStream parse_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        pos = nl + 1;
    }
    if (lines.size() < 2) throw ParseError("missing header", "line " + std::to_string(lines.size() + 1));

    EventStream s;
    s.header = parse_csv_preamble(lines[0]);
    if (lines[1] != kCsvColumns) throw ParseError("expected column header 't_us,x,y,p'", "line 2");

    for (std::size_t i = 2; i < lines.size(); ++i) {
        const auto line = lines[i];
        const std::string location = "line " + std::to_string(i + 1);
        if (line.empty()) {
            if (i + 1 == lines.size()) break;
            throw ParseError("empty record", location);
        }
        std::string_view fields[4];
        std::size_t start = 0;
        for (int f = 0; f < 4; ++f) {
            const auto comma = line.find(',', start);
            if ((f < 3) == (comma == std::string_view::npos)) throw ParseError("expected 4 fields", location);
            const auto end = f < 3 ? comma : line.size();
            fields[f] = line.substr(start, end - start);
            start = end + 1;
        }
        Event e;
        if (!parse_field(fields[0], e.t_us) || !parse_field(fields[1], e.x) || !parse_field(fields[2], e.y) ||
            !parse_field(fields[3], e.polarity)) {
            throw ParseError("non-numeric or out-of-range field", location);
        }
        if (auto err = check_event(s.header, e, s.events.empty() ? nullptr : &s.events.back()); !err.empty()) {
            throw ParseError(err, location);
        }
        s.events.push_back(e);
    }
    return s;
}

}  // namespace

EventFormat parse_event_format(std::string_view name) {
    if (name == "binary") return EventFormat::binary;
    if (name == "csv") return EventFormat::csv;
    throw UsageError("unknown event format '" + std::string(name) + "'");
}

std::string_view to_string(EventFormat format) {
    return format == EventFormat::binary ? "binary" : "csv";
}

EventFormat event_format_for(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".aers") return EventFormat::binary;
    if (ext == ".csv") return EventFormat::csv;
    throw UsageError("cannot infer event format from '" + path.string() + "'");
}

void validate(const EventStream& stream) {
    if (stream.header.version != 1) throw DataError("unsupported format version");
    if (stream.header.width == 0 || stream.header.height == 0) throw DataError("sensor dimensions must be positive");
    const Event* prev = nullptr;
    for (std::size_t i = 0; i < stream.events.size(); ++i) {
        if (auto err = check_event(stream.header, stream.events[i], prev); !err.empty()) {
            throw DataError("event " + std::to_string(i) + ": " + err);
        }
        prev = &stream.events[i];
    }
}

EventStream parse_events(std::string_view bytes, EventFormat format) {
    return format == EventFormat::binary ? parse_binary(bytes) : parse_csv(bytes);
}

std::string serialize_events(const EventStream& stream, EventFormat format) {
    validate(stream);
    std::string out;
    if (format == EventFormat::binary) {
        out.reserve(kBinaryHeaderSize + kBinaryRecordSize * stream.events.size());
        out.append(kMagic, 4);
        put_le(out, stream.header.version);
        put_le(out, stream.header.width);
        put_le(out, stream.header.height);
        put_le(out, static_cast<std::uint64_t>(stream.events.size()));
        for (const auto& e : stream.events) {
            put_le(out, e.t_us);
            put_le(out, e.x);
            put_le(out, e.y);
            put_le(out, e.polarity);
        }
        return out;
    }

    out = "# aers version=" + std::to_string(stream.header.version) + " width=" + std::to_string(stream.header.width) +
          " height=" + std::to_string(stream.header.height) + "\n";
    out += kCsvColumns;
    out += '\n';
    for (const auto& e : stream.events) {
        out += std::to_string(e.t_us);
        out += ',';
        out += std::to_string(e.x);
        out += ',';
        out += std::to_string(e.y);
        out += ',';
        out += std::to_string(e.polarity);
        out += '\n';
    }
    return out;
}

EventStream read_events(const std::filesystem::path& path, EventFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_events(buf.str(), format);
    } catch (const ParseError& e) {
        throw ParseError(e.detail(), path.string() + ": " + e.location());
    }
}

void write_events(const EventStream& stream, const std::filesystem::path& path, EventFormat format) {
    const auto bytes = serialize_events(stream, format);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::string_view to_string(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::bar: return "bar";
        case ShapeKind::disc: return "disc";
        case ShapeKind::corner: return "corner";
    }
    return "?";
}

ShapeKind parse_shape_kind(std::string_view name) {
    if (name == "bar") return ShapeKind::bar;
    if (name == "disc") return ShapeKind::disc;
    if (name == "corner") return ShapeKind::corner;
    throw UsageError("unknown shape kind '" + std::string(name) + "'");
}

void SynthSpec::validate() const {
    if (!(duration_ms > 0)) throw UsageError("synth: duration must be positive");
    if (!(event_rate >= 0) || !(noise_rate >= 0)) throw UsageError("synth: rates must be non-negative");
    if (!(jitter_px >= 0) || !(size_px >= 0)) throw UsageError("synth: size and jitter must be non-negative");
    if (width == 0 || height == 0) throw UsageError("synth: sensor dimensions must be positive");
    if (duration_ms * 1000.0 > 4.0e9) throw UsageError("synth: duration exceeds the u32 microsecond range");
}

namespace {

struct TimedPoint {
    double t_ms;
    double x;
    double y;
    std::uint8_t polarity;
};

double gaussian(Rng& rng) {
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    const double u = 1.0 - uniform01(rng);
    const double v = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

void contour_point(const SynthSpec& spec, Rng& rng, double cx, double cy, double& px, double& py) {
    const double phi = spec.orientation_deg * std::numbers::pi / 180.0;
    const double dx = std::cos(phi), dy = std::sin(phi);
    switch (spec.kind) {
        case ShapeKind::bar: {
            const double u = uniform(rng, -0.5, 0.5) * spec.size_px;
            px = cx + u * dx;
            py = cy + u * dy;
            break;
        }
        case ShapeKind::disc: {
            const double a = uniform(rng, 0.0, 2.0 * std::numbers::pi);
            const double r = 0.5 * spec.size_px;
            px = cx + r * std::cos(a);
            py = cy + r * std::sin(a);
            break;
        }
        case ShapeKind::corner: {
            // vertex at the center, arms along phi and phi + 90 degrees
            const bool second = uniform01(rng) < 0.5;
            const double u = uniform(rng, 0.0, 0.5) * spec.size_px;
            px = cx + u * (second ? -dy : dx);
            py = cy + u * (second ? dx : dy);
            break;
        }
    }
}

}  // namespace

EventStream synthesize(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    const auto n_edge = static_cast<std::size_t>(std::llround(spec.event_rate * spec.duration_ms));
    const auto n_noise = static_cast<std::size_t>(std::llround(spec.noise_rate * spec.duration_ms));

    std::vector<TimedPoint> points;
    points.reserve(n_edge + n_noise);
    for (std::size_t i = 0; i < n_edge; ++i) {
        TimedPoint p;
        p.t_ms = uniform(rng, 0.0, spec.duration_ms);
        const double cx = spec.start_x + spec.velocity_x * p.t_ms;
        const double cy = spec.start_y + spec.velocity_y * p.t_ms;
        contour_point(spec, rng, cx, cy, p.x, p.y);
        p.x += spec.jitter_px * gaussian(rng);
        p.y += spec.jitter_px * gaussian(rng);
        p.polarity = static_cast<std::uint8_t>(rng() & 1);
        points.push_back(p);
    }
    for (std::size_t i = 0; i < n_noise; ++i) {
        TimedPoint p;
        p.t_ms = uniform(rng, 0.0, spec.duration_ms);
        p.x = uniform(rng, 0.0, spec.width) - 0.5;
        p.y = uniform(rng, 0.0, spec.height) - 0.5;
        p.polarity = static_cast<std::uint8_t>(rng() & 1);
        points.push_back(p);
    }

    EventStream s;
    s.header.width = spec.width;
    s.header.height = spec.height;
    s.label = static_cast<int>(spec.kind);
    s.events.reserve(points.size());
    for (const auto& p : points) {
        const auto xi = std::llround(p.x);
        const auto yi = std::llround(p.y);
        if (xi < 0 || yi < 0 || xi >= spec.width || yi >= spec.height) continue;
        Event e;
        e.t_us = static_cast<std::uint32_t>(std::llround(p.t_ms * 1000.0));
        e.x = static_cast<std::uint16_t>(xi);
        e.y = static_cast<std::uint16_t>(yi);
        e.polarity = p.polarity;
        s.events.push_back(e);
    }
    // stable: equal timestamps keep generation order
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const Event& a, const Event& b) { return a.t_us < b.t_us; });
    return s;
}

}  // namespace must
