#pragma once

// Synthetic corpus generation: a benign background of enterprise-like DNS
// traffic plus injected periodic command-and-control routines.
//
// Background traffic has three tiers per device, all shaped by a diurnal
// profile:
//   - a shared Zipf-weighted "common" pool that carries almost all query
//     volume; every common host is queried by a large share of devices, so
//     the local-prevalence rule removes this tier (it also gets the ranked
//     list entries),
//   - a shared "niche" pool where each device adopts a host independently
//     with a small probability, keeping per-host prevalence comfortably
//     under the filter threshold: these survive as shared connection pairs,
//   - per-device "tail" hosts unique to one device (prevalence 1/devices),
//     the long tail of personal browsing.
//
// Injection emits queries on an arithmetic grid: every interval contains
// queries_per_interval queries evenly spaced across it, i.e. a constant
// inter-arrival time of interval/queries_per_interval (to the millisecond),
// starting from a seeded random phase. A burst mode that packs each
// interval's queries into the first seconds after the tick is available as a
// knob. Multi-stage channels (msc) spread the same grid across several hosts
// chosen uniformly per query.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "core.hpp"
#include "rng.hpp"
#include "spectral.hpp"

namespace morton {

enum class Technique { beaconing, msc };

inline const char* technique_name(Technique t) {
    return t == Technique::beaconing ? "beaconing" : "msc";
}
inline Technique technique_from_name(std::string_view s) {
    if (s == "beaconing") return Technique::beaconing;
    if (s == "msc") return Technique::msc;
    throw ConfigError("unknown technique: " + std::string(s));
}

using DiurnalProfile = std::array<double, 24>;

inline DiurnalProfile office_hours_profile() {
    return {0.25, 0.20, 0.18, 0.18, 0.20, 0.30, 0.50, 0.80, 1.20, 1.50, 1.60, 1.50,
            1.30, 1.40, 1.50, 1.50, 1.40, 1.20, 0.90, 0.70, 0.55, 0.45, 0.35, 0.30};
}
inline DiurnalProfile flat_profile() {
    DiurnalProfile p;
    p.fill(1.0);
    return p;
}

// Monday 2020-03-30 00:00:00 UTC; hour- and day-aligned.
inline constexpr int64_t kDefaultWindowStart = 1585526400000LL;

struct BackgroundSpec {
    size_t device_count = 2000;
    size_t host_pool_size = 10000;  // common pool
    double popularity_skew = 1.1;
    double mean_daily_queries = 2000.0;
    DiurnalProfile diurnal = office_hours_profile();
    size_t niche_pool_size = 2000;
    double niche_adoption_rate = 0.015;
    double niche_weekly_queries = 3.0;
    size_t tail_hosts_per_device = 60;
    double tail_query_fraction = 0.004;
    uint64_t seed = 1;
    int64_t window_start = kDefaultWindowStart;
};

namespace detail {

inline std::string device_name_for(size_t idx) {
    char buf[16];
    uint32_t mixed = static_cast<uint32_t>(idx) * 2654435761u;  // bijective on u32
    std::snprintf(buf, sizeof(buf), "d%08x", mixed);
    return buf;
}

struct HourSampler {
    std::vector<double> weight;  // one per bin, sums to 1
    std::vector<double> cdf;

    HourSampler(const DiurnalProfile& profile, size_t bins) {
        double day_total = 0.0;
        for (double w : profile) {
            if (w < 0) throw ConfigError("diurnal weights must be non-negative");
            day_total += w;
        }
        if (day_total <= 0) throw ConfigError("diurnal profile must have positive mass");
        weight.resize(bins);
        double total = 0.0;
        for (size_t h = 0; h < bins; ++h) {
            weight[h] = profile[h % 24];
            total += weight[h];
        }
        cdf.resize(bins);
        double acc = 0.0;
        for (size_t h = 0; h < bins; ++h) {
            weight[h] /= total;
            acc += weight[h];
            cdf[h] = acc;
        }
        cdf.back() = 1.0;
    }

    size_t sample(Rng& rng) const {
        double u = rng.next_double();
        return static_cast<size_t>(
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    }
};

}  // namespace detail

// Generates the benign background for the given devices (global indices into
// the spec's device range). Per-device randomness is seeded independently, so
// any partition of the index range yields the same per-device traffic.
inline Dataset generate_background_for(const BackgroundSpec& spec,
                                       const std::vector<size_t>& device_indices,
                                       const AggregationConfig& agg = {}) {
    if (spec.device_count == 0) throw ArgumentError("background needs at least one device");
    if (spec.mean_daily_queries < 0) throw ArgumentError("mean_daily_queries must be non-negative");
    if (spec.tail_query_fraction < 0 || spec.tail_query_fraction > 1)
        throw ArgumentError("tail_query_fraction must lie in [0, 1]");
    if (spec.niche_adoption_rate < 0 || spec.niche_adoption_rate > 1)
        throw ArgumentError("niche_adoption_rate must lie in [0, 1]");
    for (size_t idx : device_indices)
        if (idx >= spec.device_count) throw ArgumentError("device index out of range");

    Dataset ds;
    ds.window_start = spec.window_start;
    ds.window_end = spec.window_start + agg.window_ms();
    const int64_t bin_ms = agg.bin_ms();
    const size_t bins = static_cast<size_t>(agg.bin_count);

    std::vector<uint32_t> common_ids(spec.host_pool_size);
    for (size_t i = 0; i < spec.host_pool_size; ++i)
        common_ids[i] = ds.intern_host("s" + std::to_string(i + 1) + ".web.example,a");
    std::vector<uint32_t> niche_ids(spec.niche_pool_size);
    for (size_t j = 0; j < spec.niche_pool_size; ++j)
        niche_ids[j] = ds.intern_host("app" + std::to_string(j + 1) + ".niche.example,a");

    AliasSampler common_sampler(zipf_weights(std::max<size_t>(spec.host_pool_size, 1),
                                             spec.popularity_skew));
    detail::HourSampler hours(spec.diurnal, bins);

    const double weekly = spec.mean_daily_queries * static_cast<double>(bins) *
                          static_cast<double>(agg.bin_seconds) / 86400.0;
    const double common_weekly = weekly * (1.0 - spec.tail_query_fraction);
    const double tail_weekly = weekly * spec.tail_query_fraction;
    // The niche knob is calibrated at the default 2000-query daily budget and
    // scales linearly with it, so a zero budget silences every tier.
    const double niche_weekly = spec.niche_weekly_queries * spec.mean_daily_queries / 2000.0;

    for (size_t idx : device_indices) {
        std::string dev_name = detail::device_name_for(idx);
        uint32_t dev = ds.intern_device(dev_name);
        ds.set_label(dev, 0);
        Rng rng(mix_seed({spec.seed, 0xba5eull, static_cast<uint64_t>(idx)}));

        if (spec.host_pool_size > 0) {
            for (size_t h = 0; h < bins; ++h) {
                uint64_t n = rng.next_poisson(common_weekly * hours.weight[h]);
                int64_t bin_start = ds.window_start + static_cast<int64_t>(h) * bin_ms;
                for (uint64_t q = 0; q < n; ++q) {
                    uint32_t host = common_ids[common_sampler.sample(rng)];
                    ds.add_query(dev, host, bin_start + static_cast<int64_t>(rng.next_below(bin_ms)));
                }
            }
        }

        for (size_t j = 0; j < spec.niche_pool_size; ++j) {
            Rng adopt(mix_seed({spec.seed, 0xadce11ull, static_cast<uint64_t>(idx),
                                static_cast<uint64_t>(j)}));
            if (!adopt.next_bernoulli(spec.niche_adoption_rate)) continue;
            uint64_t n = rng.next_poisson(niche_weekly);
            for (uint64_t q = 0; q < n; ++q) {
                size_t h = hours.sample(rng);
                int64_t t = ds.window_start + static_cast<int64_t>(h) * bin_ms +
                            static_cast<int64_t>(rng.next_below(bin_ms));
                ds.add_query(dev, niche_ids[j], t);
            }
        }

        if (spec.tail_hosts_per_device > 0 && tail_weekly > 0) {
            std::vector<uint32_t> tail_ids(spec.tail_hosts_per_device);
            for (size_t k = 0; k < spec.tail_hosts_per_device; ++k)
                tail_ids[k] = ds.intern_host("c" + std::to_string(k + 1) + "." + dev_name +
                                             ".tail.example,a");
            uint64_t n = rng.next_poisson(tail_weekly);
            for (uint64_t q = 0; q < n; ++q) {
                uint32_t host = tail_ids[rng.next_below(tail_ids.size())];
                size_t h = hours.sample(rng);
                int64_t t = ds.window_start + static_cast<int64_t>(h) * bin_ms +
                            static_cast<int64_t>(rng.next_below(bin_ms));
                ds.add_query(dev, host, t);
            }
        }
    }
    ds.finalize();
    return ds;
}

inline Dataset generate_background(const BackgroundSpec& spec, const AggregationConfig& agg = {}) {
    std::vector<size_t> all(spec.device_count);
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    return generate_background_for(spec, all, agg);
}

// Ranked-list rows matching the common pool: Zipf position doubles as the
// global popularity rank.
inline std::vector<std::pair<uint64_t, std::string>> ranked_rows_for(const BackgroundSpec& spec) {
    std::vector<std::pair<uint64_t, std::string>> rows;
    rows.reserve(spec.host_pool_size);
    for (size_t i = 0; i < spec.host_pool_size; ++i)
        rows.emplace_back(i + 1, "s" + std::to_string(i + 1) + ".web.example");
    return rows;
}

enum class InjectionSpread { even, burst };

struct InjectionSpec {
    Technique technique = Technique::beaconing;
    int interval_minutes = 120;   // uniform 120..720 when sampled
    int queries_per_interval = 5; // uniform 5..15 when sampled, fixed per device
    std::vector<std::string> hosts;  // normalized keys; 1 (beaconing) or 3..6 (msc)
    int64_t phase_ms = 0;
    InjectionSpread spread = InjectionSpread::even;
    int burst_seconds = 60;
    uint64_t seed = 0;  // per-query host choice (msc) and burst offsets
};

inline InjectionSpec sample_injection_spec(Technique technique, uint64_t corpus_seed,
                                           size_t bot_ordinal) {
    Rng rng(mix_seed({corpus_seed, 0x1235ecull, static_cast<uint64_t>(bot_ordinal)}));
    InjectionSpec spec;
    spec.technique = technique;
    spec.interval_minutes = static_cast<int>(rng.next_int(120, 720));
    spec.queries_per_interval = static_cast<int>(rng.next_int(5, 15));
    size_t host_count = technique == Technique::beaconing ? 1 : static_cast<size_t>(rng.next_int(3, 6));
    char tag[32];
    std::snprintf(tag, sizeof(tag), "b%zux%08x", bot_ordinal,
                  static_cast<uint32_t>(corpus_seed * 2654435761ull));
    for (size_t h = 0; h < host_count; ++h)
        spec.hosts.push_back(normalize_host(
            "v" + std::to_string(h + 1) + "." + tag + ".bad.example", "a"));
    spec.phase_ms = static_cast<int64_t>(
        rng.next_below(static_cast<uint64_t>(spec.interval_minutes) * 60000ull));
    spec.seed = rng.next_u64();
    return spec;
}

// Number of complete intervals that fit the window after the phase offset.
inline int64_t injection_tick_count(int64_t window_ms, int64_t phase_ms, int64_t interval_ms) {
    return (window_ms - phase_ms) / interval_ms;
}

// Adds the routine's queries for one device and labels it positive. The
// dataset is left unfinalized so several injections can be batched; call
// finalize() before using span-dependent operations.
inline void inject(Dataset& ds, uint32_t device, const InjectionSpec& spec) {
    if (device >= ds.device_count()) throw ArgumentError("unknown device id");
    if (spec.interval_minutes <= 0 || spec.queries_per_interval <= 0)
        throw ArgumentError("injection interval and query count must be positive");
    if (spec.hosts.empty()) throw ArgumentError("injection needs at least one host");
    if (spec.technique == Technique::beaconing && spec.hosts.size() != 1)
        throw ArgumentError("beaconing uses exactly one host");
    if (spec.technique == Technique::msc && (spec.hosts.size() < 3 || spec.hosts.size() > 6))
        throw ArgumentError("msc uses three to six hosts");
    const int64_t interval_ms = static_cast<int64_t>(spec.interval_minutes) * 60000;
    if (spec.phase_ms < 0 || spec.phase_ms >= interval_ms)
        throw ArgumentError("phase must lie in [0, interval)");
    for (const std::string& h : spec.hosts)
        if (ds.find_host(h) != nullptr)
            throw ArgumentError("injection host already present in corpus: " + h);

    std::vector<uint32_t> host_ids;
    host_ids.reserve(spec.hosts.size());
    for (const std::string& h : spec.hosts) host_ids.push_back(ds.intern_host(h));

    const int64_t window_ms = ds.window_end - ds.window_start;
    const int64_t ticks = injection_tick_count(window_ms, spec.phase_ms, interval_ms);
    const int64_t q = spec.queries_per_interval;
    Rng rng(mix_seed({spec.seed, 0x13ec7ull}));
    for (int64_t j = 0; j < ticks; ++j) {
        int64_t tick = ds.window_start + spec.phase_ms + j * interval_ms;
        for (int64_t r = 0; r < q; ++r) {
            int64_t t;
            if (spec.spread == InjectionSpread::even) {
                t = tick + (r * interval_ms) / q;
            } else {
                t = tick + static_cast<int64_t>(
                        rng.next_below(static_cast<uint64_t>(spec.burst_seconds) * 1000ull));
            }
            uint32_t host = host_ids.size() == 1
                                ? host_ids[0]
                                : host_ids[rng.next_below(host_ids.size())];
            ds.add_query(device, host, t, /*injected=*/true);
        }
    }
    ds.set_label(device, 1);
}

// Removes each injected query independently with probability drop_rate.
// Benign queries are never touched; drop_rate 0 is the identity.
inline Dataset apply_drop(const Dataset& ds, double drop_rate, uint64_t seed) {
    if (!(drop_rate >= 0.0 && drop_rate <= 1.0))
        throw ArgumentError("drop_rate must lie in [0, 1]");
    Dataset out = ds;
    auto& qs = out.mutable_queries();
    Rng rng(mix_seed({seed, 0xd60bull}));
    size_t w = 0;
    for (size_t i = 0; i < qs.size(); ++i) {
        if (qs[i].injected() && rng.next_bernoulli(drop_rate)) continue;
        qs[w++] = qs[i];
    }
    qs.resize(w);
    out.finalize();
    return out;
}

struct InjectionRecord {
    std::string device;
    Technique technique = Technique::beaconing;
    int interval_minutes = 0;
    int queries_per_interval = 0;
    std::vector<std::string> hosts;  // bare names, no record type
};

struct LabeledCorpus {
    Dataset train;
    Dataset test;
    std::vector<InjectionRecord> train_injections;
    std::vector<InjectionRecord> test_injections;
};

// Builds train/test datasets with bot_fraction of devices carrying an
// injected routine. Split and bot assignment are stratified so both sides
// keep the same bot share.
inline LabeledCorpus build_labeled_corpus(const BackgroundSpec& bg, double bot_fraction,
                                          Technique technique, double train_fraction = 0.625,
                                          const AggregationConfig& agg = {}) {
    if (bot_fraction < 0.0 || bot_fraction > 1.0)
        throw ArgumentError("bot_fraction must lie in [0, 1]");
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw ArgumentError("train_fraction must lie in (0, 1)");
    const size_t total = bg.device_count;
    const size_t train_n = static_cast<size_t>(std::llround(train_fraction * static_cast<double>(total)));
    if (train_n == 0 || train_n >= total) throw ArgumentError("degenerate train/test split");

    Rng rng(mix_seed({bg.seed, 0x5b117ull}));
    std::vector<size_t> order(total);
    for (size_t i = 0; i < total; ++i) order[i] = i;
    rng.shuffle(order.begin(), order.end());
    std::vector<size_t> train_devices(order.begin(), order.begin() + static_cast<long>(train_n));
    std::vector<size_t> test_devices(order.begin() + static_cast<long>(train_n), order.end());

    const size_t bot_total = static_cast<size_t>(std::llround(bot_fraction * static_cast<double>(total)));
    if (bot_total == 0) throw ArgumentError("bot fraction yields zero bot devices");
    size_t bot_train = static_cast<size_t>(
        std::llround(static_cast<double>(bot_total) * train_fraction));
    bot_train = std::min(bot_train, train_devices.size());
    size_t bot_test = std::min(bot_total - bot_train, test_devices.size());

    LabeledCorpus corpus;
    corpus.train = generate_background_for(bg, train_devices, agg);
    corpus.test = generate_background_for(bg, test_devices, agg);

    size_t ordinal = 0;
    auto infect = [&](Dataset& ds, const std::vector<size_t>& devices, size_t bots,
                      std::vector<InjectionRecord>& records) {
        // Devices were already shuffled; the first `bots` of the slice are the
        // bot sample.
        for (size_t b = 0; b < bots; ++b, ++ordinal) {
            const std::string name = detail::device_name_for(devices[b]);
            const uint32_t* id = ds.find_device(name);
            if (id == nullptr) throw CorpusError("generated device missing: " + name);
            InjectionSpec spec = sample_injection_spec(technique, bg.seed, ordinal);
            inject(ds, *id, spec);
            InjectionRecord rec;
            rec.device = name;
            rec.technique = spec.technique;
            rec.interval_minutes = spec.interval_minutes;
            rec.queries_per_interval = spec.queries_per_interval;
            for (const std::string& h : spec.hosts) rec.hosts.emplace_back(host_name_part(h));
            records.push_back(std::move(rec));
        }
        ds.finalize();
    };
    infect(corpus.train, train_devices, bot_train, corpus.train_injections);
    infect(corpus.test, test_devices, bot_test, corpus.test_injections);
    return corpus;
}

// Single unsplit corpus (all devices in one dataset) for scaling benches.
inline Dataset build_bench_corpus(const BackgroundSpec& bg, double bot_fraction,
                                  Technique technique, const AggregationConfig& agg = {}) {
    if (bot_fraction < 0.0 || bot_fraction > 1.0)
        throw ArgumentError("bot_fraction must lie in [0, 1]");
    Dataset ds = generate_background(bg, agg);
    const size_t total = bg.device_count;
    const size_t bots = static_cast<size_t>(std::llround(bot_fraction * static_cast<double>(total)));
    Rng rng(mix_seed({bg.seed, 0x5b117ull}));
    std::vector<size_t> order(total);
    for (size_t i = 0; i < total; ++i) order[i] = i;
    rng.shuffle(order.begin(), order.end());
    for (size_t b = 0; b < bots; ++b) {
        const uint32_t* id = ds.find_device(detail::device_name_for(order[b]));
        if (id == nullptr) throw CorpusError("generated device missing");
        inject(ds, *id, sample_injection_spec(technique, bg.seed, b));
    }
    ds.finalize();
    return ds;
}

// Provenance CSV: device_id,technique,interval_minutes,queries_per_interval,host_count,hosts
// with hosts ';'-joined.
inline void save_provenance(const std::vector<InjectionRecord>& records, std::ostream& out) {
    out << "device_id,technique,interval_minutes,queries_per_interval,host_count,hosts\n";
    std::vector<const InjectionRecord*> sorted;
    for (const auto& r : records) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(),
              [](const InjectionRecord* a, const InjectionRecord* b) { return a->device < b->device; });
    for (const InjectionRecord* r : sorted) {
        std::string hosts;
        for (size_t i = 0; i < r->hosts.size(); ++i) {
            if (i) hosts += ';';
            hosts += r->hosts[i];
        }
        out << r->device << ',' << technique_name(r->technique) << ',' << r->interval_minutes
            << ',' << r->queries_per_interval << ',' << r->hosts.size() << ',' << hosts << '\n';
    }
    if (!out) throw IoError("provenance write failed");
}

inline std::vector<InjectionRecord> load_provenance(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty provenance file");
    if (std::string(detail::trim(line)) !=
        "device_id,technique,interval_minutes,queries_per_interval,host_count,hosts")
        throw FormatError("bad provenance header");
    std::vector<InjectionRecord> records;
    while (std::getline(in, line)) {
        std::string_view row = detail::trim(line);
        if (row.empty()) continue;
        std::vector<std::string_view> fields;
        size_t begin = 0;
        for (size_t i = 0; i <= row.size(); ++i) {
            if (i == row.size() || row[i] == ',') {
                fields.push_back(row.substr(begin, i - begin));
                begin = i + 1;
            }
        }
        if (fields.size() != 6) throw FormatError("bad provenance row: " + std::string(row));
        InjectionRecord rec;
        rec.device = std::string(fields[0]);
        rec.technique = technique_from_name(fields[1]);
        int64_t interval = 0, q = 0, host_count = 0;
        if (!detail::parse_i64(fields[2], interval) || !detail::parse_i64(fields[3], q) ||
            !detail::parse_i64(fields[4], host_count))
            throw FormatError("bad provenance row: " + std::string(row));
        rec.interval_minutes = static_cast<int>(interval);
        rec.queries_per_interval = static_cast<int>(q);
        std::string_view hosts = fields[5];
        size_t hb = 0;
        for (size_t i = 0; i <= hosts.size(); ++i) {
            if (i == hosts.size() || hosts[i] == ';') {
                if (i > hb) rec.hosts.emplace_back(hosts.substr(hb, i - hb));
                hb = i + 1;
            }
        }
        if (rec.hosts.size() != static_cast<size_t>(host_count))
            throw FormatError("provenance host count mismatch: " + std::string(row));
        records.push_back(std::move(rec));
    }
    return records;
}

// Restores injection provenance flags on a parsed dataset (logs do not carry
// the flag column; a device's injected queries are exactly those to its
// recorded routine hosts).
inline void mark_injected(Dataset& ds, const std::vector<InjectionRecord>& records) {
    for (const InjectionRecord& rec : records) {
        const uint32_t* dev = ds.find_device(rec.device);
        if (dev == nullptr) continue;
        ds.set_label(*dev, 1);
        std::vector<uint32_t> host_ids;
        for (const std::string& h : rec.hosts) {
            const uint32_t* id = ds.find_host(h + ",a");
            if (id != nullptr) host_ids.push_back(*id);
        }
        auto& qs = ds.mutable_queries();
        auto [b, e] = ds.device_span(*dev);
        for (size_t i = b; i < e; ++i)
            for (uint32_t h : host_ids)
                if (qs[i].host() == h) qs[i].host_bits |= DnsQuery::kInjectedBit;
    }
}

}  // namespace morton
