#include "must/analysis.hpp"

#include "must/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace must {

std::vector<double> Histogram::densities() const {
    std::vector<double> d(counts.size(), 0.0);
    if (total == 0) return d;
    for (std::size_t k = 0; k < counts.size(); ++k) d[k] = static_cast<double>(counts[k]) / static_cast<double>(total);
    return d;
}

namespace {

// floor(value / width) robust to representation error at bin edges, e.g.
// 0.3 / 0.1 == 2.9999999999999996.
std::int64_t bin_index(double value, double width) {
    auto k = static_cast<std::int64_t>(std::floor(value / width));
    if (static_cast<double>(k + 1) * width <= value) ++k;
    if (static_cast<double>(k) * width > value) --k;
    return k;
}

}  // namespace

Histogram spike_time_histogram(std::span<const double> spike_times, double bin_ms, double t_w) {
    if (!(bin_ms > 0)) throw UsageError("histogram: bin width must be positive");
    if (!(t_w > 0)) throw UsageError("histogram: window must be positive");
    Histogram h;
    h.bin_width = bin_ms;
    h.lower = 0.0;
    const auto n_bins = static_cast<std::size_t>(std::max<std::int64_t>(1, bin_index(t_w, bin_ms) +
                                                                               (std::fmod(t_w, bin_ms) > 0 ? 1 : 0)));
    h.counts.assign(n_bins, 0);
    for (double t : spike_times) {
        if (t < 0 || t > t_w) throw DataError("histogram: spike time outside [0, t_w]");
        const auto k = std::min<std::int64_t>(bin_index(t, bin_ms), static_cast<std::int64_t>(n_bins) - 1);
        ++h.counts[static_cast<std::size_t>(k)];
        ++h.total;
    }
    return h;
}

double spike_entropy(std::span<const double> spike_times, double bin_ms, double t_w) {
    if (spike_times.empty()) throw DataError("entropy: no spikes");
    const auto h = spike_time_histogram(spike_times, bin_ms, t_w);
    double entropy = 0.0;
    for (double p : h.densities()) {
        if (p > 0) entropy -= p * std::log2(p);
    }
    return entropy;
}

ResponseHistogram response_histogram(std::span<const double> responses, double bin_width, double r_min) {
    if (!(bin_width > 0)) throw UsageError("histogram: bin width must be positive");
    ResponseHistogram out;
    out.histogram.bin_width = bin_width;
    std::int64_t lo = std::numeric_limits<std::int64_t>::max(), hi = std::numeric_limits<std::int64_t>::min();
    for (double r : responses) {
        if (r <= r_min) continue;
        const auto k = bin_index(r, bin_width);
        lo = std::min(lo, k);
        hi = std::max(hi, k);
    }
    if (lo <= hi) {
        out.histogram.lower = static_cast<double>(lo) * bin_width;
        out.histogram.counts.assign(static_cast<std::size_t>(hi - lo + 1), 0);
    }
    for (double r : responses) {
        if (r <= r_min) {
            ++out.below_min;
            continue;
        }
        ++out.histogram.counts[static_cast<std::size_t>(bin_index(r, bin_width) - lo)];
        ++out.histogram.total;
    }
    if (!responses.empty()) {
        out.below_min_fraction = static_cast<double>(out.below_min) / static_cast<double>(responses.size());
    }
    return out;
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("pearson: vectors differ in length");
    if (a.size() < 2) return std::nullopt;
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

template <typename PairOf>
CcEntry mean_cc(std::size_t outer, std::size_t inner, PairOf&& maps) {
    CcEntry e;
    double sum = 0.0;
    for (std::size_t g = 0; g < outer; ++g) {
        for (std::size_t a = 0; a < inner; ++a) {
            for (std::size_t b = a + 1; b < inner; ++b) {
                const auto [ma, mb] = maps(g, a, b);
                if (auto cc = pearson(ma, mb)) {
                    sum += *cc;
                    ++e.pairs;
                } else {
                    ++e.skipped;
                }
            }
        }
    }
    e.mean = e.pairs ? sum / static_cast<double>(e.pairs) : std::numeric_limits<double>::quiet_NaN();
    return e;
}

}  // namespace

CcEntry scale_cc(const C1Maps& c1) {
    if (c1.n_scales < 2) throw UsageError("scale_cc: needs at least two scales");
    return mean_cc(c1.n_orientations, c1.n_scales, [&](std::size_t o, std::size_t s1, std::size_t s2) {
        return std::pair{c1.map(s1, o), c1.map(s2, o)};
    });
}

CcEntry orientation_cc(const C1Maps& c1) {
    if (c1.n_orientations < 2) throw UsageError("orientation_cc: needs at least two orientations");
    return mean_cc(c1.n_scales, c1.n_orientations, [&](std::size_t s, std::size_t o1, std::size_t o2) {
        return std::pair{c1.map(s, o1), c1.map(s, o2)};
    });
}

}  // namespace must
