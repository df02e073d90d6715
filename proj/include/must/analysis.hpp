#pragma once

#include "must/features.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace must {

/// Fixed-width bins starting at `lower`; bin k covers [lower + k w, lower + (k+1) w).
struct Histogram {
    double bin_width = 0.0;
    double lower = 0.0;
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;

    /// Proportion of the total in each bin (sums to 1 when total > 0).
    std::vector<double> densities() const;
    double bin_lo(std::size_t k) const { return lower + static_cast<double>(k) * bin_width; }
};

/// Shannon entropy in bits of spike times binned over [0, t_w]; a time equal
/// to t_w falls in the last bin. Throws DataError on an empty list.
double spike_entropy(std::span<const double> spike_times, double bin_ms, double t_w);

/// Spike-timing histogram over [0, t_w] with ceil(t_w / bin) bins.
Histogram spike_time_histogram(std::span<const double> spike_times, double bin_ms, double t_w);

struct ResponseHistogram {
    Histogram histogram;              // responses above r_min
    std::uint64_t below_min = 0;      // responses <= r_min, reported separately
    double below_min_fraction = 0.0;  // of all responses
};

/// Histogram of C1 responses above r_min with bins aligned to multiples of
/// bin_width.
ResponseHistogram response_histogram(std::span<const double> responses, double bin_width, double r_min);

/// Pearson correlation; nullopt when either vector has zero variance.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

struct CcEntry {
    double mean = 0.0;        // NaN when every pair was skipped
    std::size_t pairs = 0;    // pairs that contributed
    std::size_t skipped = 0;  // zero-variance pairs
};

/// Mean Pearson CC over same-orientation, different-scale map pairs
/// (n_o * C(n_s, 2) pairs).
CcEntry scale_cc(const C1Maps& c1);
/// Mean Pearson CC over same-scale, different-orientation map pairs
/// (n_s * C(n_o, 2) pairs).
CcEntry orientation_cc(const C1Maps& c1);

}  // namespace must
