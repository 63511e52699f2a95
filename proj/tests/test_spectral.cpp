#include <catch2/catch_amalgamated.hpp>

#include <complex>

#include <morton/rng.hpp>
#include <morton/spectral.hpp>

using namespace morton;

namespace {

// Naive complex-sum DFT, written independently of the library path. The
// angle index is reduced mod N before the trig call so the oracle's own
// rounding stays far below the comparison tolerance.
std::complex<double> naive_dft(const std::vector<uint32_t>& t, size_t k) {
    std::complex<double> acc{0.0, 0.0};
    const double two_pi = 6.283185307179586476925286766559;
    const size_t n = t.size();
    for (size_t i = 0; i < n; ++i) {
        double ang = -two_pi * static_cast<double>((k * i) % n) / static_cast<double>(n);
        acc += static_cast<double>(t[i]) * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    return acc;
}

double rel_err(double got, double want) {
    double denom = std::max({std::abs(got), std::abs(want), 1.0});
    return std::abs(got - want) / denom;
}

}  // namespace

TEST_CASE("aggregate bins by half-open hour boundaries", "[spectral]") {
    AggregationConfig cfg;
    cfg.bin_seconds = 3600;
    cfg.bin_count = 2;
    InputWindow w;
    w.start = 0;
    w.end = cfg.window_ms();
    for (int64_t sec : {0, 1800, 3599, 3600}) w.queries.emplace_back(sec * 1000, 0u);
    AggregatedSeries s = aggregate(w, cfg);
    REQUIRE(s.counts.size() == 2);
    CHECK(s.counts[0] == 3);
    CHECK(s.counts[1] == 1);

    InputWindow empty;
    empty.start = 0;
    empty.end = cfg.window_ms();
    AggregatedSeries z = aggregate(empty, cfg);
    CHECK(z.counts == std::vector<uint32_t>(2, 0));

    InputWindow bad;
    bad.start = 0;
    bad.end = cfg.window_ms() + 1;
    CHECK_THROWS_AS(aggregate(bad, cfg), ArgumentError);
}

TEST_CASE("dft_coefficient frozen values", "[spectral]") {
    std::vector<uint32_t> ones(8, 1);
    auto dc = dft_coefficient(ones, 0);
    CHECK(dc.real() == Catch::Approx(8.0).margin(1e-12));
    CHECK(dc.imag() == Catch::Approx(0.0).margin(1e-12));

    std::vector<uint32_t> alt{1, 0, 1, 0, 1, 0, 1, 0};
    auto k1 = dft_coefficient(alt, 1);
    CHECK(std::abs(k1) == Catch::Approx(0.0).margin(1e-12));

    std::vector<uint32_t> spikes{2, 0, 0, 0, 2, 0, 0, 0};
    auto k2 = dft_coefficient(spikes, 2);
    CHECK(k2.real() == Catch::Approx(4.0).margin(1e-12));
    CHECK(k2.imag() == Catch::Approx(0.0).margin(1e-12));

    CHECK_THROWS_AS(dft_coefficient(ones, 8), ArgumentError);
    CHECK_THROWS_AS(dft_coefficient(ones, -1), ArgumentError);
    CHECK_THROWS_AS(dft_coefficient({}, 0), ArgumentError);
}

TEST_CASE("psd frozen values and shape", "[spectral]") {
    CHECK(psd_length(168) == 83);
    CHECK(psd_length(8) == 3);

    AggregatedSeries ones;
    ones.counts.assign(8, 1);
    PsdVector p = psd(ones);
    REQUIRE(p.values.size() == 3);
    CHECK(p.values[0] == Catch::Approx(64.0).margin(1e-9));
    CHECK(p.values[1] == Catch::Approx(0.0).margin(1e-9));
    CHECK(p.values[2] == Catch::Approx(0.0).margin(1e-9));
    CHECK_FALSE(p.normalized);

    AggregatedSeries spikes;
    spikes.counts = {2, 0, 0, 0, 2, 0, 0, 0};
    PsdVector q = psd(spikes);
    REQUIRE(q.values.size() == 3);
    CHECK(q.values[0] == Catch::Approx(16.0).margin(1e-9));
    CHECK(q.values[1] == Catch::Approx(0.0).margin(1e-9));
    CHECK(q.values[2] == Catch::Approx(16.0).margin(1e-9));
}

TEST_CASE("production psd matches the naive oracle", "[spectral]") {
    Rng rng(41);
    PsdTransform tf(168);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<uint32_t> series(168);
        for (auto& v : series) v = static_cast<uint32_t>(rng.next_below(50));
        PsdVector p = tf.power(series);
        REQUIRE(p.values.size() == 83);
        for (size_t k = 0; k < p.values.size(); ++k) {
            double want = std::norm(naive_dft(series, k));
            CHECK(rel_err(p.values[k], want) <= 1e-9);
        }
    }
}

TEST_CASE("parseval identity over all frequencies", "[spectral]") {
    Rng rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<uint32_t> series(168);
        double energy = 0.0;
        for (auto& v : series) {
            v = static_cast<uint32_t>(rng.next_below(20));
            energy += static_cast<double>(v) * static_cast<double>(v);
        }
        double spectral = 0.0;
        for (size_t k = 0; k < series.size(); ++k)
            spectral += std::norm(dft_coefficient(series, static_cast<int64_t>(k)));
        CHECK(rel_err(spectral, 168.0 * energy) <= 1e-9);
    }
}

TEST_CASE("psd is invariant under cyclic rotation", "[spectral]") {
    Rng rng(43);
    PsdTransform tf(168);
    std::vector<uint32_t> series(168);
    for (auto& v : series) v = static_cast<uint32_t>(rng.next_below(10));
    PsdVector base = tf.power(series);
    for (size_t shift : {1u, 7u, 100u}) {
        std::vector<uint32_t> rotated(series.size());
        for (size_t i = 0; i < series.size(); ++i) rotated[(i + shift) % series.size()] = series[i];
        PsdVector r = tf.power(rotated);
        for (size_t k = 0; k < base.values.size(); ++k)
            CHECK(rel_err(r.values[k], base.values[k]) <= 1e-9);
    }
}

TEST_CASE("max_power_sparse agrees with the dense spectrum", "[spectral]") {
    Rng rng(44);
    PsdTransform tf(168);
    std::vector<uint32_t> series(168, 0);
    std::vector<std::pair<uint16_t, uint32_t>> bins;
    for (int i = 0; i < 12; ++i) {
        auto bin = static_cast<uint16_t>(rng.next_below(168));
        auto count = static_cast<uint32_t>(1 + rng.next_below(5));
        if (series[bin] == 0) bins.emplace_back(bin, count);
        else
            for (auto& b : bins)
                if (b.first == bin) b.second += count;
        series[bin] += count;
    }
    PsdVector dense = tf.power(series);
    double want = 0.0;
    for (size_t k = 1; k < dense.values.size(); ++k) want = std::max(want, dense.values[k]);
    double got = tf.max_power_sparse(bins, 1, psd_length(168) - 1);
    CHECK(rel_err(got, want) <= 1e-9);
}

TEST_CASE("normalization fit and application", "[spectral]") {
    PsdVector a, b;
    a.values = {1.0, 4.0};
    b.values = {3.0, 2.0};
    NormalizationScale scale = fit_normalization({a, b});
    REQUIRE(scale.per_frequency_max.size() == 2);
    CHECK(scale.per_frequency_max[0] == 3.0);
    CHECK(scale.per_frequency_max[1] == 4.0);

    PsdVector p;
    p.values = {6.0, 1.0};
    PsdVector n = normalize(p, scale);
    CHECK(n.normalized);
    CHECK(n.values[0] == 1.0);  // clamped
    CHECK(n.values[1] == 0.25);

    PsdVector self = normalize(a, scale);
    CHECK(self.values[1] == 1.0);  // column max maps to exactly 1.0

    PsdVector zeros;
    zeros.values = {0.0, 0.0};
    NormalizationScale zscale = fit_normalization({zeros});
    CHECK(zscale.per_frequency_max == std::vector<double>{1.0, 1.0});  // sentinel
    PsdVector nz = normalize(zeros, zscale);
    CHECK(nz.values == std::vector<double>{0.0, 0.0});

    CHECK_THROWS_AS(fit_normalization({}), ArgumentError);
    PsdVector shorter;
    shorter.values = {1.0};
    CHECK_THROWS_AS(fit_normalization({a, shorter}), ArgumentError);
    CHECK_THROWS_AS(normalize(shorter, scale), ArgumentError);
    CHECK_THROWS_AS(normalize(n, scale), ArgumentError);  // already normalized
    CHECK_THROWS_AS(fit_normalization({n}), ArgumentError);
}

TEST_CASE("window_for_dataset aligns to the bin grid", "[spectral]") {
    Dataset ds;
    uint32_t dev = ds.intern_device("dev");
    uint32_t host = ds.intern_host("h.example,a");
    ds.add_query(dev, host, 7200000 + 12345);
    ds.window_start = 7200000 + 5000;  // mid-hour
    ds.window_end = ds.window_start + 1000000;
    ds.finalize();
    AggregationConfig cfg;
    auto [start, end] = window_for_dataset(ds, cfg);
    CHECK(start == 7200000);
    CHECK(end == start + cfg.window_ms());
}
