#include "must/config.hpp"

#include "must/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace must {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto comma = s.find(',', start);
        if (comma == std::string_view::npos) comma = s.size();
        out.push_back(trim(s.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

}  // namespace

const std::map<std::string, std::string>& RunConfig::defaults() {
    static const std::map<std::string, std::string> table = {
        {"seed", "1"},
        {"workers", "1"},
        {"path.manifest", ""},
        {"path.model", ""},
        {"path.out", ""},

        {"msd.tau_ms", "20"},
        {"msd.threshold", "30"},
        {"msd.confirm_window", "3"},
        {"msd.flush_tail", "true"},
        {"msd.max_segment_ms", "2000"},

        {"gabor.scales", "3,5,7,9"},
        {"gabor.sigmas", "1.2,2.0,2.8,3.6"},
        {"gabor.lambdas", "1.5,2.5,3.5,4.6"},
        {"gabor.orientations_deg", "0,45,90,135"},
        {"gabor.gamma", "0.3"},

        {"feature.tau_leak_ms", ""},  // dataset dependent, no default
        {"coding.kind", "log"},
        {"coding.t_w_ms", "500"},
        {"coding.r_min", "0.2"},
        {"fusion.mode", "multiscale"},

        {"snn.v_rest", "-65"},
        {"snn.v_reset", "-65"},
        {"snn.e_exc", "0"},
        {"snn.e_inh", "-100"},
        {"snn.tau_m", "100"},
        {"snn.tau_ge", "1"},
        {"snn.tau_gi", "2"},
        {"snn.tau_thr", "1e7"},
        {"snn.tau_apre", "20"},
        {"snn.tau_apost", "30"},
        {"snn.tau_apost2", "40"},
        {"snn.v_t", "-63.5"},
        {"snn.v_plus", "0.07"},
        {"snn.a_plus", "0.1"},
        {"snn.a_minus", "0.001"},
        {"snn.w_inh", "2.4"},
        {"snn.t_d_ms", "0.3"},
        {"snn.n_learning", "60"},
        {"snn.norm_L", "47"},
        {"snn.dt_ms", "0.5"},
        {"snn.seed", ""},  // empty: derived from seed

        {"train.epochs", "1"},
        {"train.shuffle_seed", ""},  // empty: derived from seed
        {"split.fraction", "0.9"},
        {"split.runs", "1"},

        {"synth.classes", "3"},
        {"synth.per_class", "40"},
        {"synth.width", "32"},
        {"synth.height", "32"},
        {"synth.duration_ms", "50"},
        {"synth.event_rate", "20"},
        {"synth.noise_rate", "0.5"},
        {"synth.speed", "0.3"},
        {"synth.size_px", "16"},
        {"synth.jitter_px", "0.5"},
        {"synth.orientation_jitter_deg", "5"},
        {"synth.position_jitter_px", "1"},
        {"synth.format", "binary"},

        {"analysis.entropy_bin_ms", "20"},
        {"analysis.response_bin", "0.1"},
        {"analysis.cc_bin", "0.02"},
    };
    return table;
}

RunConfig::RunConfig() : values_(defaults()) {}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
    it->second = std::string(trim(value));
}

void RunConfig::set_assignment(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw UsageError("expected key=value, got '" + std::string(assignment) + "'");
    set(std::string(trim(assignment.substr(0, eq))), std::string(assignment.substr(eq + 1)));
}

void RunConfig::load_text(std::string_view text, const std::string& origin) {
    std::size_t pos = 0, line_no = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        ++line_no;
        auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        try {
            set_assignment(line);
        } catch (const UsageError& e) {
            throw UsageError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    load_text(ss.str(), path.string());
}

bool RunConfig::has_value(const std::string& key) const {
    return !get(key).empty();
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
    return it->second;
}

const std::string& RunConfig::require(const std::string& key) const {
    const auto& v = get(key);
    if (v.empty()) throw UsageError("config key '" + key + "' must be set");
    return v;
}

double RunConfig::get_double(const std::string& key) const {
    const auto& v = require(key);
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw UsageError("config key '" + key + "': not a number: '" + v + "'");
    }
}

std::int64_t RunConfig::get_int(const std::string& key) const {
    const auto& v = require(key);
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw UsageError("config key '" + key + "': not an integer: '" + v + "'");
    }
    return out;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    const auto& v = require(key);
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw UsageError("config key '" + key + "': not an unsigned integer: '" + v + "'");
    }
    return out;
}

bool RunConfig::get_bool(const std::string& key) const {
    const auto& v = require(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw UsageError("config key '" + key + "': not a boolean: '" + v + "'");
}

std::vector<double> RunConfig::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (auto item : split_list(require(key))) {
        double d = 0.0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), d);
        if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
            throw UsageError("config key '" + key + "': bad list element '" + std::string(item) + "'");
        }
        out.push_back(d);
    }
    return out;
}

std::vector<int> RunConfig::get_ints(const std::string& key) const {
    std::vector<int> out;
    for (auto item : split_list(require(key))) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
            throw UsageError("config key '" + key + "': bad list element '" + std::string(item) + "'");
        }
        out.push_back(v);
    }
    return out;
}

std::string RunConfig::serialize() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
}

}  // namespace must
