#pragma once

#include "must/event_io.hpp"
#include "must/random.hpp"

#include <algorithm>
#include <filesystem>
#include <string>

namespace must::test {

/// Directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        Rng rng(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this));
        path_ = std::filesystem::temp_directory_path() / ("must_" + tag + "_" + std::to_string(rng() % 1000000007ULL));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Sorted random events on a width x height sensor within [0, span_us].
inline EventStream random_stream(std::uint64_t seed, std::size_t n, std::uint16_t width = 32,
                                 std::uint16_t height = 32, std::uint32_t span_us = 100000) {
    Rng rng(seed);
    EventStream s;
    s.header.width = width;
    s.header.height = height;
    s.events.resize(n);
    for (auto& e : s.events) {
        e.t_us = static_cast<std::uint32_t>(rng() % (span_us + 1ULL));
        e.x = static_cast<std::uint16_t>(rng() % width);
        e.y = static_cast<std::uint16_t>(rng() % height);
        e.polarity = static_cast<std::uint8_t>(rng() & 1);
    }
    std::stable_sort(s.events.begin(), s.events.end(), [](const Event& a, const Event& b) { return a.t_us < b.t_us; });
    return s;
}

}  // namespace must::test
