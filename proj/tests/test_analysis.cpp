#include "helpers.hpp"

#include "must/analysis.hpp"
#include "must/errors.hpp"
#include "must/pipeline.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace must;

TEST_CASE("spike_entropy") {
    SUBCASE("one bin") {
        const std::vector<double> t{3.0, 5.0, 19.9};
        CHECK(spike_entropy(t, 20.0, 500.0) == 0.0);
    }
    SUBCASE("uniform over 25 bins") {
        std::vector<double> t;
        for (int k = 0; k < 25; ++k) t.push_back(20.0 * k + 10.0);
        CHECK(spike_entropy(t, 20.0, 500.0) == doctest::Approx(std::log2(25.0)).epsilon(1e-12));
        CHECK(std::log2(25.0) == doctest::Approx(4.6439).epsilon(1e-4));
    }
    SUBCASE("t_w lands in the last bin") {
        const std::vector<double> t{500.0, 490.0};
        CHECK(spike_entropy(t, 20.0, 500.0) == 0.0);
        const auto h = spike_time_histogram(t, 20.0, 500.0);
        CHECK(h.counts.size() == 25);
        CHECK(h.counts.back() == 2);
    }
    SUBCASE("bounds and permutation invariance") {
        Rng rng(17);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> t(1 + rng() % 300);
            for (auto& x : t) x = uniform01(rng) * 500.0;
            const double h = spike_entropy(t, 20.0, 500.0);
            CHECK(h >= 0.0);
            CHECK(h <= std::log2(25.0) + 1e-12);
            std::shuffle(t.begin(), t.end(), rng);
            CHECK(spike_entropy(t, 20.0, 500.0) == doctest::Approx(h).epsilon(1e-12));
        }
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(spike_entropy(std::vector<double>{}, 20.0, 500.0), DataError);
        const std::vector<double> t{1.0};
        CHECK_THROWS(spike_entropy(t, 0.0, 500.0));
    }
}

TEST_CASE("response_histogram") {
    SUBCASE("worked example") {
        const std::vector<double> r{0.25, 0.25, 0.35};
        const auto rh = response_histogram(r, 0.1, 0.2);
        const auto d = rh.histogram.densities();
        std::vector<std::pair<double, double>> nonzero;
        for (std::size_t k = 0; k < d.size(); ++k) {
            if (d[k] > 0) nonzero.push_back({rh.histogram.bin_lo(k), d[k]});
        }
        REQUIRE(nonzero.size() == 2);
        CHECK(nonzero[0].first == doctest::Approx(0.2));
        CHECK(nonzero[0].second == doctest::Approx(2.0 / 3.0));
        CHECK(nonzero[1].first == doctest::Approx(0.3));
        CHECK(nonzero[1].second == doctest::Approx(1.0 / 3.0));
        CHECK(rh.below_min == 0);
    }
    SUBCASE("empty input") {
        const auto rh = response_histogram(std::vector<double>{}, 0.1, 0.2);
        CHECK(rh.histogram.total == 0);
        CHECK(rh.below_min == 0);
    }
    SUBCASE("sub-threshold mass is reported separately") {
        const std::vector<double> r{0.05, 0.2, 0.5, 0.9};
        const auto rh = response_histogram(r, 0.1, 0.2);
        CHECK(rh.below_min == 2);
        CHECK(rh.below_min_fraction == 0.5);
        CHECK(rh.histogram.total == 2);
    }
    SUBCASE("densities sum to one and counts to the total") {
        Rng rng(5);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> r(1 + rng() % 500);
            for (auto& x : r) x = uniform01(rng) * 3.0;
            const double width = 0.01 + uniform01(rng) * 0.5;
            const auto rh = response_histogram(r, width, 0.2);
            const auto& h = rh.histogram;
            CHECK(std::accumulate(h.counts.begin(), h.counts.end(), std::uint64_t{0}) == h.total);
            CHECK(h.total + rh.below_min == r.size());
            if (h.total > 0) {
                const auto d = h.densities();
                CHECK(std::accumulate(d.begin(), d.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("pearson") {
    const std::vector<double> a{1.0, 2.0, 4.0, 8.0, 3.0};
    std::vector<double> neg(a.size());
    std::transform(a.begin(), a.end(), neg.begin(), [](double x) { return -x; });
    CHECK(*pearson(a, a) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(*pearson(a, neg) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK_FALSE(pearson(a, std::vector<double>(5, 2.0)).has_value());

    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(20), y(20), z(20);
        const double alpha = 0.01 + uniform01(rng) * 100.0, beta = uniform01(rng) * 50.0 - 25.0;
        for (std::size_t i = 0; i < 20; ++i) {
            x[i] = uniform01(rng);
            y[i] = uniform01(rng) + 0.5 * x[i];
            z[i] = alpha * x[i] + beta;
        }
        const double c = *pearson(x, y);
        CHECK(c >= -1.0);
        CHECK(c <= 1.0);
        CHECK(*pearson(y, x) == doctest::Approx(c).epsilon(1e-12));
        CHECK(*pearson(z, y) == doctest::Approx(c).epsilon(1e-9));
    }
}

TEST_CASE("scale and orientation CC") {
    SUBCASE("identical maps give 1 over 24 pairs") {
        C1Maps m(4, 4, 5, 4);
        for (std::size_t s = 0; s < 4; ++s) {
            for (std::size_t o = 0; o < 4; ++o) {
                for (int y = 0; y < 4; ++y) {
                    for (int x = 0; x < 5; ++x) m.at(s, o, x, y) = 0.1 * x + 0.3 * y * y;
                }
            }
        }
        const auto sc = scale_cc(m), oc = orientation_cc(m);
        CHECK(sc.pairs == 24);
        CHECK(oc.pairs == 24);
        CHECK(sc.mean == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(oc.mean == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("a map and its negation") {
        C1Maps m(2, 1, 3, 3);
        for (int y = 0; y < 3; ++y) {
            for (int x = 0; x < 3; ++x) {
                m.at(0, 0, x, y) = x + 2.0 * y;
                m.at(1, 0, x, y) = -(x + 2.0 * y);
            }
        }
        const auto sc = scale_cc(m);
        CHECK(sc.pairs == 1);
        CHECK(sc.mean == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("zero-variance maps are skipped and counted") {
        C1Maps m(4, 4, 3, 3);
        for (std::size_t o = 0; o < 4; ++o) m.at(0, o, 1, 1) = 1.0;  // scale 0 varies, others flat
        const auto sc = scale_cc(m);
        CHECK(sc.pairs + sc.skipped == 24);
        CHECK(sc.pairs == 0);
        CHECK(std::isnan(sc.mean));
        const auto oc = orientation_cc(m);
        CHECK(oc.pairs == 6);
        CHECK(oc.skipped == 18);
    }
}

TEST_CASE("oriented bars: scale maps agree more than orientation maps") {
    RunConfig rc;
    rc.set("feature.tau_leak_ms", "50");
    const auto cfg = PipelineConfig::from(rc);
    const GaborBank bank(cfg.gabor);
    double scale_sum = 0.0, orientation_sum = 0.0;
    int samples = 0;
    for (int i = 0; i < 10; ++i) {
        const auto s = synthesize(synth_spec_for(cfg.synth, 0, i, derive_seed(cfg.seed, Stage::synth)));
        for (const auto& c1 : extract_recording(s, cfg, bank).segments) {
            const auto sc = scale_cc(c1), oc = orientation_cc(c1);
            if (sc.pairs == 0 || oc.pairs == 0) continue;
            CHECK(sc.mean >= -1.0);
            CHECK(sc.mean <= 1.0);
            scale_sum += sc.mean;
            orientation_sum += oc.mean;
            ++samples;
        }
    }
    REQUIRE(samples > 0);
    CHECK(scale_sum / samples > orientation_sum / samples);
}
