// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "helpers.hpp"

#include "must/analysis.hpp"
#include "must/commands.hpp"
#include "must/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

using namespace must;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

const std::vector<std::string> kFeatureFlags = {"--set", "feature.tau_leak_ms=50"};

// Runs the command line; `features` adds the feature time constant.
int cli(std::vector<std::string> args, bool features = false) {
    args.insert(args.begin(), "must");
    if (features) args.insert(args.end(), kFeatureFlags.begin(), kFeatureFlags.end());
    std::ostringstream out, log;
    const int code = run_cli(args, out, log);
    if (code != 0) std::cerr << log.str();
    return code;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Rows of a CSV file split on commas, header included.
std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
    const GaborBank bank{GaborParams{}};
    const auto& p = bank.params();
    const double tau = 50.0;

    // oracle kernels straight from the Gabor formula
    std::vector<std::vector<double>> kernels;
    for (std::size_t s = 0; s < bank.n_scales(); ++s) {
        for (std::size_t o = 0; o < bank.n_orientations(); ++o) {
            const int r = p.scales[s];
            std::vector<double> k;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    k.push_back(gabor_value(dx, dy, p.orientations_deg[o] * std::numbers::pi / 180.0, p.gamma,
                                            p.sigmas[s], p.lambdas[s]));
                }
            }
            kernels.push_back(std::move(k));
        }
    }

    double worst = 0.0, lazy_seconds = 0.0;
    std::size_t max_events = 0;
    Rng sizes(2024);
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto n = 1 + static_cast<std::size_t>(sizes() % 10000);
        max_events = std::max(max_events, n);
        const auto stream = test::random_stream(seed, n, 32, 32, 200000);
        const double t_end = stream.events.back().t_ms();

        const auto t0 = Clock::now();
        S1Maps s1(bank, 32, 32, tau);
        for (const auto& e : stream.events) s1.deliver(e);
        s1.refresh(t_end);
        lazy_seconds += seconds_since(t0);

        std::vector<long double> direct(bank.n_scales() * bank.n_orientations() * 32 * 32, 0.0L);
        for (const auto& e : stream.events) {
            const long double decay = std::exp(-(static_cast<long double>(t_end) - e.t_ms()) / tau);
            for (std::size_t s = 0; s < bank.n_scales(); ++s) {
                const int r = p.scales[s];
                for (std::size_t o = 0; o < bank.n_orientations(); ++o) {
                    const auto& k = kernels[s * bank.n_orientations() + o];
                    auto* map = &direct[(s * bank.n_orientations() + o) * 32 * 32];
                    for (int y = std::max(0, e.y - r); y <= std::min(31, e.y + r); ++y) {
                        for (int x = std::max(0, e.x - r); x <= std::min(31, e.x + r); ++x) {
                            const int dx = x - e.x, dy = y - e.y;
                            map[y * 32 + x] += decay * k[static_cast<std::size_t>((dy + r) * (2 * r + 1) + dx + r)];
                        }
                    }
                }
            }
        }
        for (std::size_t s = 0; s < bank.n_scales(); ++s) {
            for (std::size_t o = 0; o < bank.n_orientations(); ++o) {
                for (int y = 0; y < 32; ++y) {
                    for (int x = 0; x < 32; ++x) {
                        const auto want =
                            static_cast<double>(direct[(s * bank.n_orientations() + o) * 1024 + y * 32 + x]);
                        const double got = s1.cell(s, o, x, y).value;
                        worst = std::max(worst, std::abs(got - want) / std::max(1e-12, std::abs(want)));
                    }
                }
            }
        }
    }
    return {worst <= 1e-9 && lazy_seconds < 30.0,
            "worst relative error " + num(worst) + ", lazy S1 time " + num(lazy_seconds) + " s, up to " +
                std::to_string(max_events) + " events"};
}

Outcome criterion2() {
    const GaborParams p;
    double worst_sym = 0.0, worst_rot = 0.0, worst_center = 0.0;
    for (std::size_t s = 0; s < p.scales.size(); ++s) {
        const int r = p.scales[s];
        for (double deg : p.orientations_deg) {
            const auto k = gabor_kernel(r, deg * std::numbers::pi / 180.0, p.gamma, p.sigmas[s], p.lambdas[s]);
            const auto k90 =
                gabor_kernel(r, (deg + 90.0) * std::numbers::pi / 180.0, p.gamma, p.sigmas[s], p.lambdas[s]);
            worst_center = std::max(worst_center, std::abs(k.at(0, 0) - 1.0));
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    worst_sym = std::max(worst_sym, std::abs(k.at(dx, dy) - k.at(-dx, -dy)));
                    worst_rot = std::max(worst_rot, std::abs(k90.at(dx, dy) - k.at(dy, -dx)));
                }
            }
        }
    }
    return {worst_sym <= 1e-12 && worst_rot <= 1e-12 && worst_center <= 4 * std::numeric_limits<double>::epsilon(),
            "symmetry " + num(worst_sym) + ", rotation " + num(worst_rot) + ", center " + num(worst_center)};
}

Outcome criterion3() {
    const double r_min = 0.2, r_max = 1.7, t_w = 500.0;
    bool pass = true;
    std::string detail;
    Rng rng(3);
    for (auto kind : {CodingKind::log, CodingKind::linear}) {
        const auto c = CodingParams::make(kind, r_max, r_min, t_w);
        // the linear code reaches t_w at r = 0 rather than at r_min
        const double slow_end = kind == CodingKind::log ? r_min : 0.0;
        const double e0 = std::abs(c.code(r_max)), e1 = std::abs(c.code(slow_end) - t_w);
        std::vector<double> r(10000);
        for (auto& x : r) x = r_min + (r_max - r_min) * (1.0 - uniform01(rng));  // (r_min, r_max]
        std::sort(r.begin(), r.end());
        r.erase(std::unique(r.begin(), r.end()), r.end());
        std::size_t violations = 0;
        for (std::size_t i = 1; i < r.size(); ++i) violations += c.code(r[i]) < c.code(r[i - 1]) ? 0 : 1;
        pass = pass && e0 <= 1e-9 && e1 <= 1e-9 && violations == 0 && r.size() > 9990;
        detail += std::string(to_string(kind)) + ": endpoints " + num(e0) + "/" + num(e1) + " ms, " +
                  std::to_string(violations) + " order violations in " + std::to_string(r.size()) +
                  (kind == CodingKind::log ? "; " : "");
    }
    return {pass, detail};
}

Outcome criterion4(const fs::path& work, const fs::path& manifest) {
    if (cli({"analyze", "--manifest", manifest.string(), "--out", (work / "analyze3").string()}, true) != 0) {
        return {false, "analyze failed"};
    }
    double h_log = NAN, h_lin = NAN;
    for (const auto& row : csv_rows(work / "analyze3" / "entropy.csv")) {
        if (row[0] == "log") h_log = std::stod(row[1]);
        if (row[0] == "linear") h_lin = std::stod(row[1]);
    }
    return {h_log > h_lin + 0.5, "H_log " + num(h_log) + " bits, H_linear " + num(h_lin) + " bits"};
}

Outcome criterion5(const fs::path& work) {
    const auto bars = work / "bars";
    if (cli({"synth", "--set", "synth.classes=1", "--out", bars.string()}) != 0) return {false, "synth failed"};
    const auto out = work / "analyze_bars";
    if (cli({"analyze", "--manifest", (bars / "manifest.csv").string(), "--out", out.string()}, true) != 0) {
        return {false, "analyze failed"};
    }
    double scale = NAN, orientation = NAN;
    for (const auto& row : csv_rows(out / "cc_summary.csv")) {
        if (row[0] == "scale") scale = std::stod(row[1]);
        if (row[0] == "orientation") orientation = std::stod(row[1]);
    }
    return {scale > orientation + 0.05, "scale CC " + num(scale) + ", orientation CC " + num(orientation)};
}

Outcome criterion6(const fs::path& work) {
    bool pass = true;
    for (const auto& [w, h] : std::vector<std::pair<int, int>>{{16, 16}, {64, 64}, {17, 9}, {1, 1}, {173, 2}}) {
        const double base = address_count(FusionMode::multiscale, 4, 4, w, h);
        pass = pass && address_count(FusionMode::multi_orientation, 4, 4, w, h) == base &&
               address_count(FusionMode::none, 4, 4, w, h) == 4 * base &&
               address_count(FusionMode::full, 4, 4, w, h) * 4 == base;
    }
    Rng rng(6);
    for (int trial = 0; trial < 20 && pass; ++trial) {
        C1Maps c1(4, 4, 1 + static_cast<int>(rng() % 20), 1 + static_cast<int>(rng() % 20));
        for (auto& v : c1.values) v = uniform01(rng);
        const auto coding = CodingParams::make(CodingKind::log, 1.0, 0.2, 500.0);
        const auto n = encode(c1, coding, FusionMode::multiscale).spikes.size();
        for (auto mode : kFusionModes) pass = pass && encode(c1, coding, mode).spikes.size() == n;
    }
    // the analyze export on the synthetic dataset
    std::string detail;
    const auto rows = csv_rows(work / "analyze3" / "fusion.csv");
    std::set<std::string> spikes;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        detail += rows[i][0] + " " + rows[i][1] + " (" + rows[i][2] + "), ";
        spikes.insert(rows[i][3]);
    }
    pass = pass && rows.size() == 5 && rows[1][2] == "1" && rows[2][2] == "1" && rows[3][2] == "4" &&
           rows[4][2] == "0.25" && spikes.size() == 1;
    return {pass, detail + "spikes per mode " + (spikes.size() == 1 ? *spikes.begin() : "differ")};
}

Outcome criterion7() {
    SnnParams p;
    p.w_inh = 0.0;
    const double w0 = 0.02, w1 = 0.0004;
    Network net(2, 1, p, std::vector<double>{w0, w1}, std::vector<double>{p.v_t});
    Simulation sim(net, {.plasticity = true});
    struct Action {
        int step;
        std::vector<std::uint32_t> inputs;
        bool post;
    };
    // 5 pre and 3 post spikes: a first post with an empty a_post2, depression
    // of both synapses, a triplet potentiation after two pre spikes on synapse 0
    // (nearest-spike), a clamp at zero, and a pre/post pair in one step
    const std::vector<Action> script = {
        {4, {0}, false}, {10, {}, true}, {14, {0, 1}, false}, {30, {}, true}, {31, {1}, false}, {60, {0}, true},
    };
    double w[2] = {w0, w1};
    double last_pre[2] = {kNever, kNever}, last_post = kNever;
    auto trace = [](double last, double t, double tau) { return last == kNever ? 0.0 : std::exp(-(t - last) / tau); };
    double worst = 0.0;
    int k = 1;
    for (const auto& a : script) {
        for (; k < a.step; ++k) sim.step({});
        const double t = a.step * p.dt_ms;
        for (auto i : a.inputs) {
            w[i] = std::max(0.0, w[i] - p.a_minus * trace(last_post, t, p.tau_apost));
            last_pre[i] = t;
        }
        if (a.post) {
            const double a2 = trace(last_post, t, p.tau_apost2);
            for (int i = 0; i < 2; ++i) w[i] += p.a_plus * trace(last_pre[i], t, p.tau_apre) * a2;
            last_post = t;
            sim.neuron(0).v = 50.0;
        }
        sim.step(a.inputs);
        ++k;
        for (std::uint32_t i = 0; i < 2; ++i) worst = std::max(worst, std::abs(net.weight(i, 0) - w[i]));
    }
    const bool fired = sim.neurons()[0].spike_count == 3;
    return {worst <= 1e-9 && fired,
            "max |w - hand trace| " + num(worst) + ", final w " + num(w[0]) + " / " + num(w[1])};
}

Outcome criterion8(std::span<const RecordingFeatures> features, const PipelineConfig& cfg) {
    double worst_sum = 0.0;
    std::size_t presentations = 0;
    const auto all = [&] {
        std::vector<std::size_t> v(features.size());
        std::iota(v.begin(), v.end(), std::size_t{0});
        return v;
    }();
    train_pipeline(features, all, cfg, 3, [&](const Network& net, std::size_t) {
        ++presentations;
        for (std::uint32_t j = 0; j < net.n_l(); ++j) {
            worst_sum = std::max(worst_sum, std::abs(net.column_sum(j) - cfg.snn.norm_L) / cfg.snn.norm_L);
        }
    });

    Rng rng(8);
    std::vector<double> w(1024 * 60);
    for (auto& x : w) x = uniform01(rng) * 3.0;
    Network net(1024, 60, cfg.snn, w, std::vector<double>(60, cfg.snn.v_t));
    normalize_weights(net, cfg.snn.norm_L);
    double worst_ratio = 0.0;
    for (std::uint32_t j = 0; j < 60; ++j) {
        for (std::uint32_t i = 1; i < 1024; ++i) {
            const double want = w[i * 60 + j] / w[j];
            const double got = net.weight(i, j) / net.weight(0, j);
            worst_ratio = std::max(worst_ratio, std::abs(got - want) / std::max(1.0, std::abs(want)));
        }
    }
    return {worst_sum <= 1e-9 && worst_ratio <= 1e-12 && presentations > 0,
            "column sums within " + num(worst_sum) + " relative over " + std::to_string(presentations) +
                " presentations, ratios within " + num(worst_ratio)};
}

// Largest timing difference between two spike trains of one neuron when their
// counts differ by at most one (the extra spike is left unmatched).
double train_distance(std::vector<double> a, std::vector<double> b) {
    if (a.size() < b.size()) std::swap(a, b);
    if (a.size() == b.size()) {
        double d = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
        return d;
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t skip = 0; skip < a.size(); ++skip) {
        double d = 0.0;
        for (std::size_t k = 0, q = 0; k < a.size(); ++k) {
            if (k != skip) d = std::max(d, std::abs(a[k] - b[q++]));
        }
        best = std::min(best, d);
    }
    return best;
}

Outcome criterion9(std::span<const RecordingFeatures> features, const PipelineConfig& cfg) {
    std::vector<std::size_t> all(features.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto trained = train_pipeline(features, all, cfg, 3);
    const std::size_t first[] = {0};
    const auto pattern = build_dataset(features, first, trained.coding, cfg.fusion, 3).items.at(0).pattern;

    const auto& coarse_net = trained.model.network;
    Network fine_net = coarse_net;
    fine_net.params().dt_ms = coarse_net.params().dt_ms / 2.0;
    const auto coarse = present_frozen(coarse_net, pattern, 0.0, true);
    const auto fine = present_frozen(fine_net, pattern, 0.0, true);

    int worst_count = 0;
    double worst_time = 0.0;
    std::uint32_t total_coarse = 0, total_fine = 0;
    for (std::uint32_t j = 0; j < coarse_net.n_l(); ++j) {
        std::vector<double> a, b;
        for (const auto& r : coarse.raster) {
            if (r.neuron == j) a.push_back(r.t_ms);
        }
        for (const auto& r : fine.raster) {
            if (r.neuron == j) b.push_back(r.t_ms);
        }
        total_coarse += static_cast<std::uint32_t>(a.size());
        total_fine += static_cast<std::uint32_t>(b.size());
        const int dc = std::abs(static_cast<int>(a.size()) - static_cast<int>(b.size()));
        worst_count = std::max(worst_count, dc);
        if (dc <= 1) worst_time = std::max(worst_time, train_distance(a, b));
    }
    return {worst_count <= 1 && worst_time < 1.0,
            "pattern with " + std::to_string(pattern.spikes.size()) + " input spikes over " + num(pattern.t_w) +
                " ms, 60 neurons; worst count difference " + std::to_string(worst_count) +
                ", worst matched time difference " + num(worst_time) + " ms, totals " +
                std::to_string(total_coarse) + " vs " + std::to_string(total_fine)};
}

Outcome criterion10(const fs::path& work, const fs::path& manifest) {
    const auto t0 = Clock::now();
    const std::vector<std::string> args = {"eval", "--manifest", manifest.string(), "--set", "split.runs=10",
                                           "--out", (work / "eval").string()};
    if (cli(args, true) != 0) {
        return {false, "eval failed"};
    }
    const double elapsed = seconds_since(t0);
    const auto rows = csv_rows(work / "eval" / "summary.csv");
    const auto& last = rows.back();
    const double mean = std::stod(last[1]), sd = std::stod(last[2]);
    return {rows.size() == 12 && mean >= 0.90 && elapsed < 600.0,
            "mean accuracy " + num(mean) + " (std " + num(sd) + ") over " + std::to_string(rows.size() - 2) +
                " runs in " + num(elapsed) + " s"};
}

Outcome criterion11(const fs::path& work, const fs::path& manifest) {
    for (const auto* name : {"train_a", "train_b"}) {
        const std::vector<std::string> args = {"train", "--manifest", manifest.string(), "--seed", "11",
                                               "--out", (work / name).string()};
        if (cli(args, true) != 0) {
            return {false, "train failed"};
        }
    }
    const auto a = slurp(work / "train_a" / "model.bin"), b = slurp(work / "train_b" / "model.bin");
    return {!a.empty() && a == b, std::to_string(a.size()) + " byte model files " + (a == b ? "identical" : "differ")};
}

}  // namespace

int main() {
    test::TempDir work("acceptance");
    const auto data = work / "data";
    if (cli({"synth", "--out", data.string()}) != 0) {
        std::cerr << "synthetic dataset generation failed\n";
        return 2;
    }
    const auto manifest = data / "manifest.csv";
    RunConfig rc;
    rc.set("feature.tau_leak_ms", "50");
    const auto cfg = PipelineConfig::from(rc);
    const auto features = extract_features(read_manifest(manifest), cfg);

    const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
        {1, [] { return criterion1(); }},
        {2, [] { return criterion2(); }},
        {3, [] { return criterion3(); }},
        {4, [&] { return criterion4(work.path(), manifest); }},
        {5, [&] { return criterion5(work.path()); }},
        {6, [&] { return criterion6(work.path()); }},
        {7, [] { return criterion7(); }},
        {8, [&] { return criterion8(features, cfg); }},
        {9, [&] { return criterion9(features, cfg); }},
        {10, [&] { return criterion10(work.path(), manifest); }},
        {11, [&] { return criterion11(work.path(), manifest); }},
    };
    int failures = 0;
    for (const auto& [id, run] : criteria) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.detail << "; "
                  << num(seconds_since(t0)) << " s)" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
