#pragma once

// Evaluation harness: ROC/AUC, fixed-FPR operating points, drop-rate
// robustness sweeps, throughput timing, and verdict enrichment against a
// local blocklist.
//
// Scores are per device; a prediction is positive when score >= threshold.
// Thresholds are swept over the distinct observed scores, so the ROC starts
// at (0,0) (threshold above every score) and ends at (1,1). AUC is the
// trapezoidal integral, which equals the Mann-Whitney probability that a
// random positive outscores a random negative (ties at half weight).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include "core.hpp"

namespace morton {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

namespace detail {

inline void check_scored_labels(const std::vector<double>& scores,
                                const std::vector<int8_t>& labels) {
    if (scores.size() != labels.size()) throw MetricError("scores/labels length mismatch");
    if (scores.empty()) throw MetricError("no scored devices");
    size_t pos = 0, neg = 0;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1)
            ++pos;
        else if (labels[i] == 0)
            ++neg;
        else
            throw MetricError("unlabeled device in metric input");
        if (!std::isfinite(scores[i])) throw MetricError("non-finite score");
    }
    if (pos == 0 || neg == 0) throw MetricError("metrics need both classes present");
}

}  // namespace detail

inline RocCurve roc(const std::vector<double>& scores, const std::vector<int8_t>& labels) {
    detail::check_scored_labels(scores, labels);
    size_t pos = 0, neg = 0;
    for (int8_t l : labels) (l == 1 ? pos : neg) += 1;

    std::vector<size_t> order(scores.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    size_t tp = 0, fp = 0;
    for (size_t i = 0; i < order.size();) {
        double threshold = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == threshold; ++i)
            (labels[order[i]] == 1 ? tp : fp) += 1;
        curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                                static_cast<double>(tp) / static_cast<double>(pos), threshold});
    }
    double auc = 0.0;
    for (size_t i = 1; i < curve.points.size(); ++i) {
        const RocPoint& a = curve.points[i - 1];
        const RocPoint& b = curve.points[i];
        auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    curve.auc = auc;
    return curve;
}

// Best TPR among operating points meeting the FPR cap.
inline double tpr_at_fpr(const RocCurve& curve, double fpr_cap) {
    double best = 0.0;
    for (const RocPoint& p : curve.points)
        if (p.fpr <= fpr_cap) best = std::max(best, p.tpr);
    return best;
}

struct Calibration {
    double threshold = 0.0;
    double fpr = 0.0;   // achieved on the calibration scores
    double tpr = 0.0;
    bool cap_met = false;
};

// Operating point at the FPR cap: the most permissive distinct-score
// threshold whose FPR stays within the cap (maximizing TPR subject to it).
// When even the strictest threshold exceeds the cap — possible with coarsely
// tied scores — returns the minimum-FPR point with cap_met = false.
inline Calibration calibrate_threshold(const std::vector<double>& scores,
                                       const std::vector<int8_t>& labels, double fpr_cap) {
    if (!(fpr_cap >= 0.0 && fpr_cap <= 1.0)) throw MetricError("fpr cap must lie in [0, 1]");
    RocCurve curve = roc(scores, labels);
    Calibration best;
    bool found = false;
    // points[0] is the synthetic (0,0) pre-threshold point; real thresholds start at 1.
    for (size_t i = 1; i < curve.points.size(); ++i) {
        const RocPoint& p = curve.points[i];
        if (p.fpr <= fpr_cap && (!found || p.tpr >= best.tpr)) {
            best = {p.threshold, p.fpr, p.tpr, true};
            found = true;
        }
    }
    if (!found) {
        const RocPoint& p = curve.points[1];  // strictest real threshold = minimal FPR
        best = {p.threshold, p.fpr, p.tpr, false};
    }
    return best;
}

inline double detection_rate(const std::vector<double>& scores, const std::vector<int8_t>& labels,
                             double threshold) {
    if (scores.size() != labels.size()) throw MetricError("scores/labels length mismatch");
    size_t pos = 0, hit = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        ++pos;
        if (scores[i] >= threshold) ++hit;
    }
    if (pos == 0) throw MetricError("no positives for detection rate");
    return static_cast<double>(hit) / static_cast<double>(pos);
}

inline double false_positive_rate(const std::vector<double>& scores,
                                  const std::vector<int8_t>& labels, double threshold) {
    size_t neg = 0, fp = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 0) continue;
        ++neg;
        if (scores[i] >= threshold) ++fp;
    }
    if (neg == 0) throw MetricError("no negatives for false positive rate");
    return static_cast<double>(fp) / static_cast<double>(neg);
}

struct RobustnessResult {
    std::vector<double> drop_rates;       // 0.0, 0.1, ..., 0.9
    std::vector<double> detection_rates;  // TPR at the fixed threshold
    double score = 0.0;                   // mean of the detection rates
    double operating_fpr = 0.0;           // the cap the threshold was set for
    Calibration calibration;              // chosen on the clean corpus
    std::string warning;                  // non-empty when the cap was unattainable
};

// Fixes the threshold on the clean scores at the FPR cap, then measures the
// detection rate at each drop rate. score_at(rate) must return scores aligned
// with `labels` for the corpus rebuilt at that drop rate.
template <typename ScoreAt>
inline RobustnessResult robustness_sweep(const std::vector<double>& clean_scores,
                                         const std::vector<int8_t>& labels, ScoreAt&& score_at,
                                         double operating_fpr = 0.144) {
    RobustnessResult r;
    r.operating_fpr = operating_fpr;
    r.calibration = calibrate_threshold(clean_scores, labels, operating_fpr);
    if (!r.calibration.cap_met)
        r.warning = "fpr cap " + detail::fmt_double(operating_fpr) +
                    " unattainable; using minimum-fpr operating point (fpr " +
                    detail::fmt_double(r.calibration.fpr) + ")";
    for (int i = 0; i < 10; ++i) {
        double rate = 0.1 * i;
        r.drop_rates.push_back(rate);
        std::vector<double> scores = score_at(rate);
        r.detection_rates.push_back(detection_rate(scores, labels, r.calibration.threshold));
    }
    double sum = 0.0;
    for (double d : r.detection_rates) sum += d;
    r.score = sum / static_cast<double>(r.detection_rates.size());
    return r;
}

// Warm run discarded, median of `runs` timed runs.
template <typename Work>
inline double median_seconds(Work&& work, int runs = 3) {
    work();
    std::vector<double> times;
    times.reserve(static_cast<size_t>(runs));
    for (int i = 0; i < runs; ++i) {
        auto t0 = std::chrono::steady_clock::now();
        work();
        auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

struct ThroughputRow {
    size_t devices = 0;
    size_t cp_count = 0;    // filter-surviving connection pairs in the workload
    double seconds = 0.0;   // median wall-clock of the detection pass
    double cps_per_sec = 0.0;
};

inline ThroughputRow throughput_row(size_t devices, size_t cp_count, double seconds) {
    ThroughputRow row;
    row.devices = devices;
    row.cp_count = cp_count;
    row.seconds = seconds;
    row.cps_per_sec = seconds > 0 ? static_cast<double>(cp_count) / seconds : 0.0;
    return row;
}

// Device subset for scaling benches: the first n devices in id order, their
// queries and labels copied into a fresh dataset.
inline Dataset subset_devices(const Dataset& ds, size_t n) {
    if (n == 0 || n > ds.device_count()) throw ArgumentError("bad subset size");
    Dataset out;
    out.window_start = ds.window_start;
    out.window_end = ds.window_end;
    for (uint32_t d = 0; d < n; ++d) {
        uint32_t nd = out.intern_device(ds.device_name(d));
        out.set_label(nd, ds.label(d));
        auto [b, e] = ds.device_span(d);
        const auto& qs = ds.queries();
        for (size_t i = b; i < e; ++i) {
            uint32_t host = out.intern_host(ds.host_key(qs[i].host()));
            out.add_query(nd, host, qs[i].time_ms, qs[i].injected());
        }
    }
    out.finalize();
    return out;
}

// One host name per line; blanks and '#' comments ignored. Names are
// normalized like log qnames (lowercased, trailing dot stripped).
inline std::unordered_set<std::string> load_blocklist(std::istream& in) {
    std::unordered_set<std::string> hosts;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        hosts.insert(std::string(host_name_part(normalize_host(t, "a"))));
    }
    return hosts;
}

struct DeviceVerdict {
    std::string device;
    double score = 0.0;
    bool flagged = false;
    std::string evidence;  // only for flagged devices: hits or "unverified"
};

// Annotates flagged devices with the blocklisted hosts they contacted
// ("unverified" when none matched).
inline void enrich_verdicts(std::vector<DeviceVerdict>& verdicts, const Dataset& ds,
                            const std::unordered_set<std::string>& blocklist) {
    for (DeviceVerdict& v : verdicts) {
        if (!v.flagged) {
            v.evidence.clear();
            continue;
        }
        const uint32_t* dev = ds.find_device(v.device);
        std::vector<std::string> hits;
        if (dev != nullptr) {
            auto [b, e] = ds.device_span(*dev);
            const auto& qs = ds.queries();
            uint32_t last_host = 0;
            bool have_last = false;
            for (size_t i = b; i < e; ++i) {
                uint32_t h = qs[i].host();
                if (have_last && h == last_host) continue;
                last_host = h;
                have_last = true;
                std::string name(host_name_part(ds.host_key(h)));
                if (blocklist.count(name)) hits.push_back(std::move(name));
            }
        }
        std::sort(hits.begin(), hits.end());
        hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
        if (hits.empty()) {
            v.evidence = "unverified";
        } else {
            v.evidence.clear();
            for (size_t i = 0; i < hits.size(); ++i) {
                if (i) v.evidence += ';';
                v.evidence += hits[i];
            }
        }
    }
}

inline void write_roc_csv(const RocCurve& curve, std::ostream& out) {
    out << "fpr,tpr,threshold\n";
    for (const RocPoint& p : curve.points)
        out << detail::fmt_double(p.fpr) << ',' << detail::fmt_double(p.tpr) << ','
            << detail::fmt_double(p.threshold) << '\n';
    if (!out) throw IoError("roc write failed");
}

inline void write_robustness_csv(const RobustnessResult& r, std::ostream& out) {
    out << "drop_rate,detection_rate\n";
    for (size_t i = 0; i < r.drop_rates.size(); ++i)
        out << detail::fmt_double(r.drop_rates[i]) << ','
            << detail::fmt_double(r.detection_rates[i]) << '\n';
    if (!out) throw IoError("robustness write failed");
}

inline void write_throughput_csv(const std::vector<ThroughputRow>& rows, std::ostream& out) {
    out << "devices,connection_pairs,seconds,cps_per_sec\n";
    for (const ThroughputRow& r : rows)
        out << r.devices << ',' << r.cp_count << ',' << detail::fmt_double(r.seconds) << ','
            << detail::fmt_double(r.cps_per_sec) << '\n';
    if (!out) throw IoError("throughput write failed");
}

struct SummaryRow {
    std::string method;
    std::string technique;
    double auc = 0.0;
    double tpr_at_1pct = 0.0;
    double robustness = 0.0;
    double cps_per_sec = 0.0;
    double runtime_seconds = 0.0;
};

// Result-table CSV: one row per (method, technique).
inline void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out) {
    out << "method,technique,auc,tpr_at_1pct_fpr,robustness_score,cps_per_sec,runtime_seconds\n";
    for (const SummaryRow& r : rows)
        out << r.method << ',' << r.technique << ',' << detail::fmt_double(r.auc) << ','
            << detail::fmt_double(r.tpr_at_1pct) << ',' << detail::fmt_double(r.robustness) << ','
            << detail::fmt_double(r.cps_per_sec) << ',' << detail::fmt_double(r.runtime_seconds)
            << '\n';
    if (!out) throw IoError("summary write failed");
}

inline void write_device_verdicts_csv(const std::vector<DeviceVerdict>& verdicts,
                                      bool with_evidence, std::ostream& out) {
    out << (with_evidence ? "device_id,score,verdict,evidence\n" : "device_id,score,verdict\n");
    for (const DeviceVerdict& v : verdicts) {
        out << v.device << ',' << detail::fmt_double(v.score) << ',' << (v.flagged ? 1 : 0);
        if (with_evidence) out << ',' << detail::csv_quote(v.evidence);
        out << '\n';
    }
    if (!out) throw IoError("verdict write failed");
}

}  // namespace morton
