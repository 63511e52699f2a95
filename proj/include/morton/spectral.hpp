#pragma once

// Spectral features: fixed-width time binning of a device's query stream,
// discrete Fourier transform, power spectral density and per-frequency
// normalization against a training corpus.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "core.hpp"

namespace morton {

struct AggregationConfig {
    int64_t bin_seconds = 3600;
    int64_t bin_count = 168;  // one week of hourly bins
    int64_t bin_ms() const { return bin_seconds * 1000; }
    int64_t window_ms() const { return bin_count * bin_ms(); }
};

struct AggregatedSeries {
    uint32_t device = 0;
    std::vector<uint32_t> counts;
};

// Hour-aligned analysis window covering the dataset from its first bin.
inline std::pair<int64_t, int64_t> window_for_dataset(const Dataset& ds,
                                                      const AggregationConfig& cfg) {
    if (ds.query_count() == 0) throw CorpusError("cannot derive a window from an empty dataset");
    int64_t start = (ds.window_start / cfg.bin_ms()) * cfg.bin_ms();
    return {start, start + cfg.window_ms()};
}

inline AggregatedSeries aggregate(const InputWindow& w, const AggregationConfig& cfg) {
    if (cfg.bin_seconds <= 0 || cfg.bin_count <= 0)
        throw ConfigError("aggregation bins must be positive");
    if (w.end - w.start != cfg.window_ms())
        throw ArgumentError("window length does not equal bin_count * bin_seconds");
    AggregatedSeries s;
    s.device = w.device;
    s.counts.assign(static_cast<size_t>(cfg.bin_count), 0);
    for (const auto& [t, host] : w.queries) {
        if (t < w.start || t >= w.end) throw ArgumentError("query outside its window");
        ++s.counts[static_cast<size_t>((t - w.start) / cfg.bin_ms())];
    }
    return s;
}

// DFT(T, k) = sum_n t_n * exp(-i 2 pi k n / N), straight from the definition.
inline std::complex<double> dft_coefficient(const std::vector<uint32_t>& series, int64_t k) {
    const size_t n = series.size();
    if (n == 0) throw ArgumentError("empty series");
    if (k < 0 || static_cast<size_t>(k) >= n) throw ArgumentError("frequency index out of range");
    std::complex<double> acc{0.0, 0.0};
    const double w = -2.0 * std::numbers::pi_v<double> * static_cast<double>(k) / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
        if (series[i] == 0) continue;
        acc += static_cast<double>(series[i]) * std::polar(1.0, w * static_cast<double>(i));
    }
    return acc;
}

struct PsdVector {
    std::vector<double> values;
    bool normalized = false;
};

inline size_t psd_length(size_t bin_count) { return (bin_count - 1) / 2; }

// Reusable transform for one bin count: a table of the N roots of unity,
// indexed modulo N. Zero bins contribute nothing and are skipped, which
// matters for the permutation-test baseline where most series are sparse.
class PsdTransform {
public:
    explicit PsdTransform(size_t bin_count) : n_(bin_count) {
        if (bin_count == 0) throw ArgumentError("empty series");
        tw_.resize(n_);
        for (size_t m = 0; m < n_; ++m)
            tw_[m] = std::polar(1.0, -2.0 * std::numbers::pi_v<double> * static_cast<double>(m) /
                                         static_cast<double>(n_));
    }

    size_t bin_count() const { return n_; }
    size_t output_length() const { return psd_length(n_); }

    // |DFT(T,k)|^2 for k = 0 .. floor((N-1)/2) - 1.
    PsdVector power(const std::vector<uint32_t>& series) const {
        if (series.size() != n_) throw ArgumentError("series length mismatch");
        PsdVector out;
        out.values.assign(output_length(), 0.0);
        for (size_t k = 0; k < out.values.size(); ++k) {
            double re = 0.0, im = 0.0;
            for (size_t i = 0; i < n_; ++i) {
                if (series[i] == 0) continue;
                const std::complex<double>& t = tw_[(k * i) % n_];
                double v = static_cast<double>(series[i]);
                re += v * t.real();
                im += v * t.imag();
            }
            out.values[k] = re * re + im * im;
        }
        return out;
    }

    // Max of |DFT|^2 over k in [k_from, k_from + k_len) for a sparse series
    // given as (bin, count) pairs. Subtracting the series mean only changes
    // the k = 0 coefficient, so starting at k_from = 1 this is also the peak
    // of the mean-centered periodogram.
    double max_power_sparse(const std::vector<std::pair<uint16_t, uint32_t>>& bins, size_t k_from,
                            size_t k_len) const {
        double best = 0.0;
        for (size_t k = k_from; k < k_from + k_len; ++k) {
            double re = 0.0, im = 0.0;
            for (const auto& [bin, count] : bins) {
                const std::complex<double>& t = tw_[(k * bin) % n_];
                double v = static_cast<double>(count);
                re += v * t.real();
                im += v * t.imag();
            }
            double p = re * re + im * im;
            if (p > best) best = p;
        }
        return best;
    }

private:
    size_t n_;
    std::vector<std::complex<double>> tw_;
};

inline PsdVector psd(const AggregatedSeries& s) {
    if (s.counts.empty()) throw ArgumentError("empty series");
    PsdTransform t(s.counts.size());
    return t.power(s.counts);
}

// Per-frequency maxima over a training corpus; frequencies that never fire
// keep a scale of 1.0 so normalization stays a no-op there.
struct NormalizationScale {
    std::vector<double> per_frequency_max;
};

inline NormalizationScale fit_normalization(const std::vector<PsdVector>& training_psds) {
    if (training_psds.empty()) throw ArgumentError("cannot fit normalization on an empty corpus");
    size_t len = training_psds.front().values.size();
    NormalizationScale scale;
    scale.per_frequency_max.assign(len, 0.0);
    for (const PsdVector& p : training_psds) {
        if (p.values.size() != len) throw ArgumentError("inconsistent psd lengths");
        if (p.normalized) throw ArgumentError("normalization must be fit on raw psd vectors");
        for (size_t i = 0; i < len; ++i)
            scale.per_frequency_max[i] = std::max(scale.per_frequency_max[i], p.values[i]);
    }
    for (double& v : scale.per_frequency_max)
        if (v == 0.0) v = 1.0;
    return scale;
}

// Divide by the training maxima and clamp into [0, 1].
inline PsdVector normalize(const PsdVector& p, const NormalizationScale& scale) {
    if (p.normalized) throw ArgumentError("psd vector already normalized");
    if (p.values.size() != scale.per_frequency_max.size())
        throw ArgumentError("psd length does not match normalization scale");
    PsdVector out;
    out.normalized = true;
    out.values.resize(p.values.size());
    for (size_t i = 0; i < p.values.size(); ++i)
        out.values[i] = std::min(1.0, p.values[i] / scale.per_frequency_max[i]);
    return out;
}

}  // namespace morton
