#pragma once

// Reputation filtering: a host is trusted (and its queries removed) when it is
// globally popular (rank at or under rank_threshold in a top-sites list) or
// locally prevalent (queried by at least prevalence_threshold of the devices
// in the dataset window). Matching is exact on the query name; the record-type
// suffix of the host key is ignored because reputation lists carry names only.
// Prevalence is computed once per dataset window, before any filtering, and
// passed into the filter — filtering with a fixed prevalence map is idempotent.

#include <cstdint>
#include <istream>
#include <string>
#include <unordered_map>
#include <vector>

#include "core.hpp"

namespace morton {

struct ReputationConfig {
    uint64_t rank_threshold = 500000;
    double prevalence_threshold = 0.03;
};

using RankedHosts = std::unordered_map<std::string, uint64_t>;  // name -> rank (1-based)

// Ranked list CSV: rank,host. Lower rank means more popular. Duplicate names
// keep the best (lowest) rank.
inline RankedHosts load_ranked_hosts(std::istream& in) {
    RankedHosts ranks;
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty ranked hosts file");
    if (std::string(detail::trim(line)) != "rank,host")
        throw FormatError("bad ranked hosts header");
    while (std::getline(in, line)) {
        std::string_view row = detail::trim(line);
        if (row.empty()) continue;
        size_t pos = row.find(',');
        int64_t rank = 0;
        if (pos == std::string_view::npos || !detail::parse_i64(row.substr(0, pos), rank) ||
            rank <= 0 || detail::trim(row.substr(pos + 1)).empty())
            throw FormatError("bad ranked hosts row: " + std::string(row));
        std::string name = detail::lower(detail::trim(row.substr(pos + 1)));
        if (!name.empty() && name.back() == '.') name.pop_back();
        auto [it, inserted] = ranks.emplace(name, static_cast<uint64_t>(rank));
        if (!inserted && static_cast<uint64_t>(rank) < it->second)
            it->second = static_cast<uint64_t>(rank);
    }
    return ranks;
}

inline void save_ranked_hosts(const std::vector<std::pair<uint64_t, std::string>>& rows,
                              std::ostream& out) {
    out << "rank,host\n";
    for (const auto& [rank, name] : rows) out << rank << ',' << name << '\n';
    if (!out) throw IoError("ranked hosts write failed");
}

// Fraction of active devices that queried each host, indexed by host id.
// Computed once per dataset window over all devices, before any filtering.
inline std::vector<double> prevalence_by_host(const Dataset& ds) {
    if (ds.query_count() == 0) throw CorpusError("cannot compute prevalence of an empty dataset");
    std::vector<uint32_t> device_hits(ds.host_count(), 0);
    const auto& qs = ds.queries();
    const auto& groups = ds.group_offsets();
    for (size_t g = 0; g + 1 < groups.size(); ++g)
        ++device_hits[qs[groups[g]].host()];
    double denom = static_cast<double>(ds.active_device_count());
    std::vector<double> prevalence(ds.host_count(), 0.0);
    for (size_t h = 0; h < prevalence.size(); ++h)
        prevalence[h] = static_cast<double>(device_hits[h]) / denom;
    return prevalence;
}

inline std::unordered_map<std::string, double> compute_local_prevalence(const Dataset& ds) {
    std::vector<double> by_id = prevalence_by_host(ds);
    std::unordered_map<std::string, double> out;
    out.reserve(by_id.size());
    for (uint32_t h = 0; h < by_id.size(); ++h)
        if (by_id[h] > 0.0) out.emplace(ds.host_key(h), by_id[h]);
    return out;
}

// Per-host trust flags for one dataset window: trusted hosts are dropped by
// the filter, untrusted ones survive into feature extraction.
struct TrustTable {
    std::vector<uint8_t> trusted;  // by host id
    bool is_trusted(uint32_t host) const { return trusted[host] != 0; }
    size_t trusted_count() const {
        size_t n = 0;
        for (uint8_t t : trusted) n += t;
        return n;
    }
};

inline TrustTable build_trust_table(const Dataset& ds, const ReputationConfig& cfg,
                                    const RankedHosts& ranks) {
    if (cfg.prevalence_threshold < 0.0 || cfg.prevalence_threshold > 1.0)
        throw ConfigError("prevalence threshold must lie in [0, 1]");
    std::vector<double> prevalence = prevalence_by_host(ds);
    TrustTable table;
    table.trusted.assign(ds.host_count(), 0);
    for (uint32_t h = 0; h < ds.host_count(); ++h) {
        bool by_rank = false;
        auto it = ranks.find(std::string(host_name_part(ds.host_key(h))));
        if (it != ranks.end() && it->second <= cfg.rank_threshold) by_rank = true;
        bool by_prevalence = prevalence[h] >= cfg.prevalence_threshold;
        table.trusted[h] = (by_rank || by_prevalence) ? 1 : 0;
    }
    return table;
}

// Trust decision for one host key against a prevalence map (missing host
// means prevalence 0).
inline bool host_trusted(const std::string& host_key, const ReputationConfig& cfg,
                         const RankedHosts& ranks,
                         const std::unordered_map<std::string, double>& prevalence) {
    auto it = ranks.find(std::string(host_name_part(host_key)));
    if (it != ranks.end() && it->second <= cfg.rank_threshold) return true;
    auto p = prevalence.find(host_key);
    return (p == prevalence.end() ? 0.0 : p->second) >= cfg.prevalence_threshold;
}

// Materialized filter: a copy of ds holding only queries to untrusted hosts.
// Window, device registry and labels are preserved (devices whose whole
// traffic was trusted remain as zero-traffic devices).
inline Dataset filter_queries(const Dataset& ds, const ReputationConfig& cfg,
                              const RankedHosts& ranks,
                              const std::unordered_map<std::string, double>& prevalence) {
    if (cfg.prevalence_threshold < 0.0 || cfg.prevalence_threshold > 1.0)
        throw ConfigError("prevalence threshold must lie in [0, 1]");
    std::vector<uint8_t> trusted(ds.host_count());
    for (uint32_t h = 0; h < ds.host_count(); ++h)
        trusted[h] = host_trusted(ds.host_key(h), cfg, ranks, prevalence) ? 1 : 0;
    Dataset out;
    out.window_start = ds.window_start;
    out.window_end = ds.window_end;
    for (uint32_t d = 0; d < ds.device_count(); ++d) {
        uint32_t id = out.intern_device(ds.device_name(d));
        out.set_label(id, ds.label(d));
    }
    for (const DnsQuery& q : ds.queries()) {
        if (trusted[q.host()]) continue;
        uint32_t h = out.intern_host(ds.host_key(q.host()));
        out.add_query(q.device, h, q.time_ms, q.injected());
    }
    out.finalize();
    return out;
}

// Convenience form computing the prevalence of ds itself.
inline Dataset filter_queries(const Dataset& ds, const ReputationConfig& cfg,
                              const RankedHosts& ranks) {
    return filter_queries(ds, cfg, ranks, compute_local_prevalence(ds));
}

}  // namespace morton
