#pragma once

// End-to-end detector: reputation filter -> hourly binning -> PSD ->
// normalized spectral features -> feedforward classifier. Feature extraction
// is a single pass over the device-sorted queries with no intermediate
// dataset copies, so it is also the timed detection workload in benches.

#include <cstdint>
#include <vector>

#include "classifier.hpp"
#include "core.hpp"
#include "reputation.hpp"
#include "spectral.hpp"

namespace morton {

struct PipelineConfig {
    AggregationConfig agg;
    ReputationConfig reputation;
};

// Raw (unnormalized) per-device PSD features over filter-surviving queries.
// Devices without surviving traffic get the all-zero spectrum, scored like
// any other.
inline std::vector<PsdVector> device_features(const Dataset& ds, const TrustTable& trust,
                                              const AggregationConfig& agg = {}) {
    auto [start, end] = window_for_dataset(ds, agg);
    PsdTransform tf(static_cast<size_t>(agg.bin_count));
    const int64_t bin_ms = agg.bin_ms();
    std::vector<PsdVector> out(ds.device_count());
    std::vector<uint32_t> counts(static_cast<size_t>(agg.bin_count));
    const auto& qs = ds.queries();
    for (uint32_t d = 0; d < ds.device_count(); ++d) {
        std::fill(counts.begin(), counts.end(), 0u);
        auto [b, e] = ds.device_span(d);
        for (size_t i = b; i < e; ++i) {
            if (trust.is_trusted(qs[i].host())) continue;
            int64_t t = qs[i].time_ms;
            if (t < start || t >= end) throw ArgumentError("query outside aggregation window");
            ++counts[static_cast<size_t>((t - start) / bin_ms)];
        }
        out[d] = tf.power(counts);
    }
    return out;
}

// Binary labels for every device; throws unless all devices are labeled.
inline std::vector<uint8_t> training_labels(const Dataset& ds) {
    std::vector<uint8_t> ys(ds.device_count());
    for (uint32_t d = 0; d < ds.device_count(); ++d) {
        int8_t l = ds.label(d);
        if (l != 0 && l != 1) throw TrainingError("unlabeled device: " + ds.device_name(d));
        ys[d] = static_cast<uint8_t>(l);
    }
    return ys;
}

inline ModelParams train_pipeline(const Dataset& train_ds, const RankedHosts& ranks,
                                  const PipelineConfig& cfg, const TrainConfig& tc) {
    TrustTable trust = build_trust_table(train_ds, cfg.reputation, ranks);
    std::vector<PsdVector> raw = device_features(train_ds, trust, cfg.agg);
    NormalizationScale scale = fit_normalization(raw);
    std::vector<PsdVector> xs;
    xs.reserve(raw.size());
    for (const PsdVector& p : raw) xs.push_back(normalize(p, scale));
    return train(xs, training_labels(train_ds), scale, tc);
}

// Scores every device in the dataset. This is the full detection pass:
// trust-table construction, filtering, aggregation, PSD, normalization and
// the classifier forward pass.
inline std::vector<double> score_devices(const Dataset& ds, const RankedHosts& ranks,
                                         const ModelParams& model, const PipelineConfig& cfg) {
    if (model.scale.per_frequency_max.size() !=
        psd_length(static_cast<size_t>(cfg.agg.bin_count)))
        throw ConfigError("model spectral shape does not match the configured bin count");
    TrustTable trust = build_trust_table(ds, cfg.reputation, ranks);
    std::vector<PsdVector> raw = device_features(ds, trust, cfg.agg);
    std::vector<double> scores(raw.size());
    for (size_t d = 0; d < raw.size(); ++d)
        scores[d] = forward(model, normalize(raw[d], model.scale));
    return scores;
}

}  // namespace morton
