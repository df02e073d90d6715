#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace must {

/// Flat key=value run configuration. Every key has a registered default;
/// layers apply in order defaults < config file < command line.
///
/// File syntax: one `key = value` per line, '#' starts a comment, blank
/// lines ignored. Unknown keys are rejected.
class RunConfig {
public:
    RunConfig();

    static const std::map<std::string, std::string>& defaults();

    void set(const std::string& key, const std::string& value);
    /// Parses "key=value".
    void set_assignment(std::string_view assignment);
    void load_file(const std::filesystem::path& path);
    void load_text(std::string_view text, const std::string& origin = "<text>");

    bool has_value(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<int> get_ints(const std::string& key) const;
    /// Throws UsageError naming the key when it is unset.
    const std::string& require(const std::string& key) const;

    /// Sorted "key=value" lines; feeding it back through load_text yields an
    /// identical config.
    std::string serialize() const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace must
