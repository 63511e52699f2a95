#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include <morton/core.hpp>
#include <morton/spectral.hpp>

using namespace morton;

TEST_CASE("host normalization", "[core]") {
    CHECK(normalize_host("Example.COM.", "A") == "example.com,a");
    CHECK(normalize_host("example.com", "") == "example.com,a");
    CHECK(normalize_host(" www.Test.example ", " AAAA ") == "www.test.example,aaaa");
    // only one trailing dot is stripped
    CHECK(normalize_host("example.com..", "a") == "example.com.,a");
    CHECK(host_name_part("example.com,a") == "example.com");
    auto [name, type] = split_host_key("example.com,aaaa");
    CHECK(name == "example.com");
    CHECK(type == "aaaa");
}

TEST_CASE("parse_log single row", "[core]") {
    std::istringstream in(
        "timestamp_ms,device_id,qname,qtype\n"
        "1585633874000,b1ec3636,example.com,A\n");
    Dataset ds = parse_log(in);
    REQUIRE(ds.query_count() == 1);
    const DnsQuery& q = ds.queries()[0];
    CHECK(q.time_ms == 1585633874000LL);
    CHECK(ds.device_name(q.device) == "b1ec3636");
    CHECK(ds.host_key(q.host()) == "example.com,a");
    CHECK_FALSE(q.injected());
    CHECK(ds.window_start == 1585633874000LL);
    CHECK(ds.window_end == 1585633874001LL);
}

TEST_CASE("parse_log empty body and header errors", "[core]") {
    std::istringstream empty_body("timestamp_ms,device_id,qname,qtype\n");
    Dataset ds = parse_log(empty_body);
    CHECK(ds.query_count() == 0);
    // windowing an empty dataset is a corpus error downstream
    CHECK_THROWS_AS(window_for_dataset(ds, AggregationConfig{}), CorpusError);

    std::istringstream no_header("");
    CHECK_THROWS_AS(parse_log(no_header), FormatError);
    std::istringstream bad_header("time,dev,host,type\n1,a,b,A\n");
    CHECK_THROWS_AS(parse_log(bad_header), FormatError);
}

TEST_CASE("parse_log malformed line budget", "[core]") {
    std::ostringstream log;
    log << kLogHeader << "\n";
    for (int i = 0; i < 199; ++i)
        log << (1000 + i) << ",dev" << i % 7 << ",host" << i % 5 << ".example,a\n";
    log << "not-a-timestamp,dev0,host0.example,a\n";  // 1 bad of 200 = 0.5%

    std::istringstream ok(log.str());
    Dataset ds = parse_log(ok);
    CHECK(ds.malformed_lines == 1);
    CHECK(ds.query_count() == 199);

    // 3 bad of 200 exceeds the default 1% tolerance
    std::string noisy = log.str() + "-5,dev0,host.example,a\nonly,two\n";
    std::istringstream over(noisy);
    CHECK_THROWS_AS(parse_log(over), CorpusError);

    // a looser budget accepts the same input
    std::istringstream loose(noisy);
    CHECK(parse_log(loose, 0.05).malformed_lines == 3);
}

TEST_CASE("serialize then parse round-trips", "[core]") {
    std::istringstream in(
        "timestamp_ms,device_id,qname,qtype\n"
        "50,devB,z.example,A\n"
        "10,devA,a.example,AAAA\n"
        "10,devA,A.Example.,a\n"
        "30,devB,a.example,a\n"
        "10,devB,b.example,txt\n");
    Dataset first = parse_log(in);
    REQUIRE(first.query_count() == 5);

    std::ostringstream out;
    serialize(first, out);
    std::istringstream back(out.str());
    Dataset second = parse_log(back);
    CHECK(datasets_equal(first, second));

    // serialization is stable: a second round trip emits identical bytes
    std::ostringstream out2;
    serialize(second, out2);
    CHECK(out.str() == out2.str());
}

TEST_CASE("labels round trip and errors", "[core]") {
    Dataset ds;
    uint32_t a = ds.intern_device("devA");
    uint32_t b = ds.intern_device("devB");
    ds.intern_device("devC");  // stays unlabeled
    ds.set_label(a, 1);
    ds.set_label(b, 0);
    std::ostringstream out;
    save_labels(ds, out);
    CHECK(out.str() == "device_id,label\ndevA,1\ndevB,0\n");

    Dataset loaded;
    std::istringstream in(out.str());
    load_labels(loaded, in);
    REQUIRE(loaded.device_count() == 2);
    CHECK(loaded.label(*loaded.find_device("devA")) == 1);
    CHECK(loaded.label(*loaded.find_device("devB")) == 0);

    std::istringstream bad_head("device,label\n");
    CHECK_THROWS_AS(load_labels(loaded, bad_head), FormatError);
    std::istringstream bad_label("device_id,label\ndevA,2\n");
    CHECK_THROWS_AS(load_labels(loaded, bad_label), FormatError);
}

TEST_CASE("labels may add zero-traffic devices after finalize", "[core]") {
    std::istringstream in(
        "timestamp_ms,device_id,qname,qtype\n"
        "10,devA,a.example,a\n");
    Dataset ds = parse_log(in);
    std::istringstream labels("device_id,label\ndevA,1\nghost,0\n");
    load_labels(ds, labels);
    ds.finalize();
    const uint32_t* ghost = ds.find_device("ghost");
    REQUIRE(ghost != nullptr);
    auto [gb, ge] = ds.device_span(*ghost);
    CHECK(gb == ge);
    CHECK(ds.label(*ghost) == 0);
    CHECK(ds.active_device_count() == 1);
}

TEST_CASE("extract_window filters one device by half-open range", "[core]") {
    Dataset ds;
    uint32_t dev = ds.intern_device("dev");
    uint32_t other = ds.intern_device("other");
    uint32_t host = ds.intern_host("h.example,a");
    for (int64_t t : {5, 15, 25}) ds.add_query(dev, host, t);
    ds.add_query(other, host, 16);
    ds.window_start = 0;
    ds.window_end = 30;
    ds.finalize();

    InputWindow w = extract_window(ds, dev, 10, 20);
    REQUIRE(w.queries.size() == 1);
    CHECK(w.queries[0].first == 15);

    // boundaries: start inclusive, end exclusive
    CHECK(extract_window(ds, dev, 5, 6).queries.size() == 1);
    CHECK(extract_window(ds, dev, 0, 5).queries.empty());

    // windows over a partition reproduce the device's full query set
    size_t total = extract_window(ds, dev, 0, 10).queries.size() +
                   extract_window(ds, dev, 10, 30).queries.size();
    CHECK(total == 3);

    CHECK_THROWS_AS(extract_window(ds, 99, 0, 10), ArgumentError);
    CHECK_THROWS_AS(extract_window(ds, dev, 10, 10), ArgumentError);
}

TEST_CASE("csv helpers", "[core]") {
    CHECK(detail::fmt_double(0.1) == "0.1");
    CHECK(detail::fmt_double(1.0) == "1");
    CHECK(detail::csv_quote("plain") == "plain");
    CHECK(detail::csv_quote("a,b") == "\"a,b\"");
    CHECK(detail::csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
    int64_t v = 0;
    CHECK(detail::parse_i64("123", v));
    CHECK(v == 123);
    CHECK_FALSE(detail::parse_i64("12x", v));
    CHECK_FALSE(detail::parse_i64("", v));
}
