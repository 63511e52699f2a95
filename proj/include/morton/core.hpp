#pragma once

// Core data model: DNS query log datasets, host normalization, CSV log
// parsing/serialization, per-device labels and time windows.
//
// A dataset keeps queries sorted by (device, host, time) with span indexes so
// that per-device iteration, per-(device,host) grouping and prevalence counts
// are single linear passes. Serialized logs are emitted in global
// (time, device, qname) order like a capture file would be.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace morton {

struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CorpusError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

}  // namespace detail

// Canonical host identity: lowercase name without trailing dot, plus the
// lowercase record type appended after a comma. Missing type defaults to "a".
inline std::string normalize_host(std::string_view qname, std::string_view qtype) {
    std::string name = detail::lower(detail::trim(qname));
    if (!name.empty() && name.back() == '.') name.pop_back();
    std::string type = detail::lower(detail::trim(qtype));
    if (type.empty()) type = "a";
    return name + "," + type;
}

// Splits a normalized host key back into (qname, qtype).
inline std::pair<std::string_view, std::string_view> split_host_key(std::string_view key) {
    size_t pos = key.rfind(',');
    if (pos == std::string_view::npos) return {key, std::string_view("a")};
    return {key.substr(0, pos), key.substr(pos + 1)};
}

// The name part of a normalized host key (what reputation lists carry).
inline std::string_view host_name_part(std::string_view key) { return split_host_key(key).first; }

struct DnsQuery {
    int64_t time_ms = 0;
    uint32_t device = 0;
    uint32_t host_bits = 0;  // top bit marks synthetic injection provenance

    static constexpr uint32_t kInjectedBit = 0x80000000u;
    uint32_t host() const { return host_bits & ~kInjectedBit; }
    bool injected() const { return (host_bits & kInjectedBit) != 0; }
};

constexpr int8_t kLabelUnknown = -1;

class Dataset {
public:
    int64_t window_start = 0;
    int64_t window_end = 0;  // half-open [start, end)
    uint64_t malformed_lines = 0;

    uint32_t intern_device(std::string_view name) {
        auto it = device_index_.find(std::string(name));
        if (it != device_index_.end()) return it->second;
        uint32_t id = static_cast<uint32_t>(device_names_.size());
        device_names_.emplace_back(name);
        labels_.push_back(kLabelUnknown);
        device_index_.emplace(device_names_.back(), id);
        finalized_ = false;  // span indexes no longer cover the new device
        return id;
    }

    uint32_t intern_host(std::string_view key) {
        auto it = host_index_.find(std::string(key));
        if (it != host_index_.end()) return it->second;
        if (host_names_.size() >= DnsQuery::kInjectedBit)
            throw CorpusError("host table overflow");
        uint32_t id = static_cast<uint32_t>(host_names_.size());
        host_names_.emplace_back(key);
        host_index_.emplace(host_names_.back(), id);
        return id;
    }

    const uint32_t* find_device(std::string_view name) const {
        auto it = device_index_.find(std::string(name));
        return it == device_index_.end() ? nullptr : &it->second;
    }
    const uint32_t* find_host(std::string_view key) const {
        auto it = host_index_.find(std::string(key));
        return it == host_index_.end() ? nullptr : &it->second;
    }

    void add_query(uint32_t device, uint32_t host, int64_t t, bool injected = false) {
        DnsQuery q;
        q.time_ms = t;
        q.device = device;
        q.host_bits = host | (injected ? DnsQuery::kInjectedBit : 0u);
        queries_.push_back(q);
        finalized_ = false;
    }

    // Sorts queries by (device, host, time) and rebuilds span indexes.
    void finalize() {
        std::sort(queries_.begin(), queries_.end(), [](const DnsQuery& a, const DnsQuery& b) {
            if (a.device != b.device) return a.device < b.device;
            uint32_t ha = a.host(), hb = b.host();
            if (ha != hb) return ha < hb;
            return a.time_ms < b.time_ms;
        });
        device_offsets_.assign(device_names_.size() + 1, 0);
        for (const DnsQuery& q : queries_) ++device_offsets_[q.device + 1];
        for (size_t i = 1; i < device_offsets_.size(); ++i)
            device_offsets_[i] += device_offsets_[i - 1];
        group_offsets_.clear();
        for (size_t i = 0; i < queries_.size(); ++i) {
            if (i == 0 || queries_[i].device != queries_[i - 1].device ||
                queries_[i].host() != queries_[i - 1].host())
                group_offsets_.push_back(i);
        }
        group_offsets_.push_back(queries_.size());
        finalized_ = true;
    }

    bool finalized() const { return finalized_; }

    size_t device_count() const { return device_names_.size(); }
    size_t host_count() const { return host_names_.size(); }
    size_t query_count() const { return queries_.size(); }

    const std::string& device_name(uint32_t id) const { return device_names_[id]; }
    const std::string& host_key(uint32_t id) const { return host_names_[id]; }
    const std::vector<DnsQuery>& queries() const { return queries_; }
    std::vector<DnsQuery>& mutable_queries() { return queries_; }

    // Contiguous query span of one device (requires finalize()).
    std::pair<size_t, size_t> device_span(uint32_t device) const {
        check_finalized();
        return {device_offsets_[device], device_offsets_[device + 1]};
    }

    // Offsets of (device, host) runs within the query vector.
    const std::vector<size_t>& group_offsets() const {
        check_finalized();
        return group_offsets_;
    }

    void set_label(uint32_t device, int8_t label) { labels_[device] = label; }
    int8_t label(uint32_t device) const { return labels_[device]; }
    bool has_labels() const {
        for (int8_t l : labels_)
            if (l != kLabelUnknown) return true;
        return false;
    }

    // Number of devices with at least one query in the window (prevalence
    // denominator). Requires finalize().
    size_t active_device_count() const {
        check_finalized();
        size_t n = 0;
        for (size_t d = 0; d < device_names_.size(); ++d)
            if (device_offsets_[d + 1] > device_offsets_[d]) ++n;
        return n;
    }

private:
    void check_finalized() const {
        if (!finalized_) throw ArgumentError("dataset not finalized");
    }

    std::vector<std::string> device_names_;
    std::vector<std::string> host_names_;
    std::unordered_map<std::string, uint32_t> device_index_;
    std::unordered_map<std::string, uint32_t> host_index_;
    std::vector<DnsQuery> queries_;
    std::vector<size_t> device_offsets_;
    std::vector<size_t> group_offsets_;
    std::vector<int8_t> labels_;
    bool finalized_ = false;
};

namespace detail {

inline bool parse_i64(std::string_view s, int64_t& out) {
    s = trim(s);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

// Shortest round-trip decimal representation.
inline std::string fmt_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::string csv_quote(std::string_view field) {
    bool needs = field.find_first_of(",\"\n") != std::string_view::npos;
    if (!needs) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace detail

inline constexpr const char* kLogHeader = "timestamp_ms,device_id,qname,qtype";

// Parses a query log CSV. Malformed data lines are counted on the dataset and
// tolerated up to max_malformed_fraction of all data lines.
inline Dataset parse_log(std::istream& in, double max_malformed_fraction = 0.01) {
    Dataset ds;
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty log: missing header");
    if (std::string(detail::trim(line)) != kLogHeader)
        throw FormatError("bad log header: expected '" + std::string(kLogHeader) + "'");
    uint64_t data_lines = 0;
    int64_t min_t = std::numeric_limits<int64_t>::max();
    int64_t max_t = std::numeric_limits<int64_t>::min();
    while (std::getline(in, line)) {
        std::string_view row = detail::trim(line);
        if (row.empty()) continue;
        ++data_lines;
        std::string_view fields[4];
        size_t nfields = 0;
        size_t begin = 0;
        bool overflow = false;
        for (size_t i = 0; i <= row.size(); ++i) {
            if (i == row.size() || row[i] == ',') {
                if (nfields == 4) {
                    overflow = true;
                    break;
                }
                fields[nfields++] = row.substr(begin, i - begin);
                begin = i + 1;
            }
        }
        int64_t t = 0;
        if (overflow || nfields != 4 || !detail::parse_i64(fields[0], t) || t < 0 ||
            detail::trim(fields[1]).empty() || detail::trim(fields[2]).empty()) {
            ++ds.malformed_lines;
            continue;
        }
        uint32_t dev = ds.intern_device(detail::trim(fields[1]));
        uint32_t host = ds.intern_host(normalize_host(fields[2], fields[3]));
        ds.add_query(dev, host, t);
        min_t = std::min(min_t, t);
        max_t = std::max(max_t, t);
    }
    if (data_lines > 0 &&
        static_cast<double>(ds.malformed_lines) > max_malformed_fraction * static_cast<double>(data_lines))
        throw CorpusError("too many malformed log lines: " + std::to_string(ds.malformed_lines) +
                          " of " + std::to_string(data_lines));
    if (ds.query_count() > 0) {
        ds.window_start = min_t;
        ds.window_end = max_t + 1;
    }
    ds.finalize();
    return ds;
}

// Writes the log in global (time, device, qname) order.
inline void serialize(const Dataset& ds, std::ostream& out) {
    std::vector<uint32_t> order(ds.query_count());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<uint32_t>(i);
    const auto& qs = ds.queries();
    std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
        if (qs[a].time_ms != qs[b].time_ms) return qs[a].time_ms < qs[b].time_ms;
        const std::string& da = ds.device_name(qs[a].device);
        const std::string& db = ds.device_name(qs[b].device);
        if (da != db) return da < db;
        return ds.host_key(qs[a].host()) < ds.host_key(qs[b].host());
    });
    out << kLogHeader << "\n";
    std::string row;
    for (uint32_t i : order) {
        const DnsQuery& q = qs[i];
        auto [qname, qtype] = split_host_key(ds.host_key(q.host()));
        row.clear();
        row += std::to_string(q.time_ms);
        row += ',';
        row += ds.device_name(q.device);
        row += ',';
        row += qname;
        row += ',';
        row += qtype;
        row += '\n';
        out << row;
    }
    if (!out) throw IoError("log write failed");
}

// Labels CSV: device_id,label with label in {0,1}.
inline void load_labels(Dataset& ds, std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty labels file");
    if (std::string(detail::trim(line)) != "device_id,label")
        throw FormatError("bad labels header");
    while (std::getline(in, line)) {
        std::string_view row = detail::trim(line);
        if (row.empty()) continue;
        size_t pos = row.find(',');
        if (pos == std::string_view::npos) throw FormatError("bad labels row: " + std::string(row));
        std::string_view dev = detail::trim(row.substr(0, pos));
        std::string_view lab = detail::trim(row.substr(pos + 1));
        if (dev.empty() || (lab != "0" && lab != "1"))
            throw FormatError("bad labels row: " + std::string(row));
        uint32_t id = ds.intern_device(dev);
        ds.set_label(id, lab == "1" ? 1 : 0);
    }
}

inline void save_labels(const Dataset& ds, std::ostream& out) {
    std::vector<uint32_t> ids;
    for (uint32_t d = 0; d < ds.device_count(); ++d)
        if (ds.label(d) != kLabelUnknown) ids.push_back(d);
    std::sort(ids.begin(), ids.end(), [&](uint32_t a, uint32_t b) {
        return ds.device_name(a) < ds.device_name(b);
    });
    out << "device_id,label\n";
    for (uint32_t d : ids) out << ds.device_name(d) << ',' << int(ds.label(d)) << '\n';
    if (!out) throw IoError("labels write failed");
}

// One device's queries restricted to [start, end), time-sorted.
struct InputWindow {
    uint32_t device = 0;
    int64_t start = 0;
    int64_t end = 0;
    std::vector<std::pair<int64_t, uint32_t>> queries;  // (time_ms, host id)
};

inline InputWindow extract_window(const Dataset& ds, uint32_t device, int64_t start, int64_t end) {
    if (device >= ds.device_count()) throw ArgumentError("unknown device id");
    if (start >= end) throw ArgumentError("empty window");
    InputWindow w;
    w.device = device;
    w.start = start;
    w.end = end;
    auto [b, e] = ds.device_span(device);
    const auto& qs = ds.queries();
    for (size_t i = b; i < e; ++i)
        if (qs[i].time_ms >= start && qs[i].time_ms < end)
            w.queries.emplace_back(qs[i].time_ms, qs[i].host());
    std::sort(w.queries.begin(), w.queries.end());
    return w;
}

// Field-for-field dataset equality (window plus query tuple multiset and labels),
// independent of internal id assignment.
inline bool datasets_equal(const Dataset& a, const Dataset& b) {
    if (a.window_start != b.window_start || a.window_end != b.window_end) return false;
    if (a.query_count() != b.query_count()) return false;
    using Row = std::tuple<int64_t, std::string, std::string>;
    auto rows = [](const Dataset& ds) {
        std::vector<Row> out;
        out.reserve(ds.query_count());
        for (const DnsQuery& q : ds.queries())
            out.emplace_back(q.time_ms, ds.device_name(q.device), ds.host_key(q.host()));
        std::sort(out.begin(), out.end());
        return out;
    };
    if (rows(a) != rows(b)) return false;
    auto labeled = [](const Dataset& ds) {
        std::vector<std::pair<std::string, int8_t>> out;
        for (uint32_t d = 0; d < ds.device_count(); ++d)
            if (ds.label(d) != kLabelUnknown) out.emplace_back(ds.device_name(d), ds.label(d));
        std::sort(out.begin(), out.end());
        return out;
    };
    return labeled(a) == labeled(b);
}

}  // namespace morton
