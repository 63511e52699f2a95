#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include <morton/eval.hpp>
#include <morton/rng.hpp>

using namespace morton;

TEST_CASE("roc endpoints and perfect separation", "[eval]") {
    std::vector<double> scores{0.9, 0.8, 0.7, 0.2, 0.1};
    std::vector<int8_t> labels{1, 1, 1, 0, 0};
    RocCurve curve = roc(scores, labels);
    CHECK(curve.auc == 1.0);
    REQUIRE(curve.points.size() >= 2);
    CHECK(curve.points.front().fpr == 0.0);
    CHECK(curve.points.front().tpr == 0.0);
    CHECK(std::isinf(curve.points.front().threshold));
    CHECK(curve.points.back().fpr == 1.0);
    CHECK(curve.points.back().tpr == 1.0);
}

TEST_CASE("roc hand-checked area and tie handling", "[eval]") {
    RocCurve curve = roc({0.9, 0.4, 0.6, 0.3}, {1, 1, 0, 0});
    CHECK_THAT(curve.auc, Catch::Matchers::WithinAbs(0.75, 1e-12));
    // one distinct threshold per point, descending
    REQUIRE(curve.points.size() == 5);
    CHECK(curve.points[2].threshold == 0.6);
    CHECK(curve.points[2].fpr == 0.5);
    CHECK(curve.points[2].tpr == 0.5);

    RocCurve tied = roc({0.5, 0.5}, {1, 0});
    CHECK_THAT(tied.auc, Catch::Matchers::WithinAbs(0.5, 1e-12));  // ties at half weight
    CHECK(tied.points.size() == 2);
}

TEST_CASE("roc equals the pairwise ranking probability", "[eval]") {
    Rng rng(2024);
    std::vector<double> scores;
    std::vector<int8_t> labels;
    for (int i = 0; i < 300; ++i) {
        // coarse quantization forces plenty of ties
        scores.push_back(static_cast<double>(rng.next_below(20)) / 20.0);
        labels.push_back(static_cast<int8_t>(rng.next_below(2)));
    }
    labels[0] = 1;
    labels[1] = 0;
    double win = 0.0;
    size_t pairs = 0;
    for (size_t p = 0; p < scores.size(); ++p) {
        if (labels[p] != 1) continue;
        for (size_t n = 0; n < scores.size(); ++n) {
            if (labels[n] != 0) continue;
            ++pairs;
            if (scores[p] > scores[n])
                win += 1.0;
            else if (scores[p] == scores[n])
                win += 0.5;
        }
    }
    double mann_whitney = win / static_cast<double>(pairs);
    CHECK_THAT(roc(scores, labels).auc, Catch::Matchers::WithinAbs(mann_whitney, 1e-10));
}

TEST_CASE("roc on random scores sits near one half", "[eval]") {
    Rng rng(77);
    std::vector<double> scores;
    std::vector<int8_t> labels;
    for (int i = 0; i < 2000; ++i) {
        scores.push_back(rng.next_double());
        labels.push_back(static_cast<int8_t>(i % 2));
    }
    double auc = roc(scores, labels).auc;
    CHECK(std::abs(auc - 0.5) < 0.05);  // ~4 sigma for 1000/1000 split
}

TEST_CASE("metric input validation", "[eval]") {
    CHECK_THROWS_AS(roc({0.5}, {1, 0}), MetricError);
    CHECK_THROWS_AS(roc({}, {}), MetricError);
    CHECK_THROWS_AS(roc({0.5, 0.6}, {1, 2}), MetricError);
    CHECK_THROWS_AS(roc({0.5, 0.6}, {1, -1}), MetricError);
    std::vector<double> bad{0.5, std::nan("")};
    CHECK_THROWS_AS(roc(bad, {1, 0}), MetricError);
    CHECK_THROWS_AS(roc({0.5, 0.6}, {1, 1}), MetricError);  // single class
}

TEST_CASE("tpr at an fpr cap", "[eval]") {
    RocCurve curve = roc({0.9, 0.4, 0.6, 0.3}, {1, 1, 0, 0});
    CHECK(tpr_at_fpr(curve, 0.0) == 0.5);
    CHECK(tpr_at_fpr(curve, 0.49) == 0.5);
    CHECK(tpr_at_fpr(curve, 0.5) == 1.0);
    CHECK(tpr_at_fpr(curve, 1.0) == 1.0);
}

TEST_CASE("threshold calibration picks the best point under the cap", "[eval]") {
    std::vector<double> scores{0.9, 0.8, 0.7, 0.2, 0.1};
    std::vector<int8_t> labels{1, 1, 1, 0, 0};
    Calibration cal = calibrate_threshold(scores, labels, 0.0);
    CHECK(cal.cap_met);
    CHECK(cal.threshold == 0.7);
    CHECK(cal.tpr == 1.0);
    CHECK(cal.fpr == 0.0);
    CHECK(detection_rate(scores, labels, cal.threshold) == 1.0);
    CHECK(false_positive_rate(scores, labels, cal.threshold) == 0.0);

    // fully tied scores leave only the (1,1) operating point
    Calibration stuck = calibrate_threshold({0.5, 0.5, 0.5, 0.5}, {1, 1, 0, 0}, 0.3);
    CHECK_FALSE(stuck.cap_met);
    CHECK(stuck.threshold == 0.5);
    CHECK(stuck.fpr == 1.0);
    CHECK(stuck.tpr == 1.0);

    CHECK_THROWS_AS(calibrate_threshold(scores, labels, -0.1), MetricError);
    CHECK_THROWS_AS(calibrate_threshold(scores, labels, 1.1), MetricError);
}

TEST_CASE("rate helpers treat the threshold as inclusive", "[eval]") {
    std::vector<double> scores{0.5, 0.4};
    std::vector<int8_t> labels{1, 0};
    CHECK(detection_rate(scores, labels, 0.5) == 1.0);
    CHECK(false_positive_rate(scores, labels, 0.5) == 0.0);
    CHECK(false_positive_rate(scores, labels, 0.4) == 1.0);
    CHECK_THROWS_AS(detection_rate(scores, {0, 0}, 0.5), MetricError);
    CHECK_THROWS_AS(false_positive_rate(scores, {1, 1}, 0.5), MetricError);
}

TEST_CASE("robustness sweep averages the per-drop detection rates", "[eval]") {
    std::vector<int8_t> labels{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
    std::vector<double> clean;
    for (int8_t l : labels) clean.push_back(l);

    auto oracle = [&](double) { return clean; };
    RobustnessResult perfect = robustness_sweep(clean, labels, oracle);
    CHECK(perfect.score == 1.0);
    CHECK(perfect.calibration.cap_met);
    CHECK(perfect.warning.empty());
    REQUIRE(perfect.drop_rates.size() == 10);
    CHECK(perfect.drop_rates.front() == 0.0);
    CHECK_THAT(perfect.drop_rates.back(), Catch::Matchers::WithinAbs(0.9, 1e-12));

    // detection collapses at drop >= 0.5: rates (1,1,1,1,1,0,0,0,0,0)
    auto fading = [&](double rate) {
        std::vector<double> s = clean;
        if (rate >= 0.5)
            for (size_t i = 0; i < s.size(); ++i) s[i] = 0.0;
        return s;
    };
    RobustnessResult half = robustness_sweep(clean, labels, fading);
    CHECK(half.score == 0.5);

    // unattainable cap falls back to the minimum-fpr point and says so
    std::vector<double> tied(labels.size(), 0.5);
    RobustnessResult warned = robustness_sweep(tied, labels, [&](double) { return tied; });
    CHECK_FALSE(warned.calibration.cap_met);
    CHECK_FALSE(warned.warning.empty());
}

TEST_CASE("median timing runs a warm pass plus the timed runs", "[eval]") {
    int calls = 0;
    double sec = median_seconds([&] { ++calls; }, 3);
    CHECK(calls == 4);
    CHECK(sec >= 0.0);
}

TEST_CASE("throughput arithmetic", "[eval]") {
    ThroughputRow row = throughput_row(256, 1000, 0.5);
    CHECK(row.cps_per_sec == 2000.0);
    CHECK(throughput_row(1, 10, 0.0).cps_per_sec == 0.0);
}

TEST_CASE("device subsetting keeps ids, labels and query flags", "[eval]") {
    Dataset ds;
    ds.window_start = 1000;
    ds.window_end = 1000 + 168LL * 3600 * 1000;
    for (int i = 0; i < 4; ++i) {
        uint32_t d = ds.intern_device("dev" + std::to_string(i));
        ds.set_label(d, static_cast<int8_t>(i % 2));
        uint32_t h = ds.intern_host("h" + std::to_string(i) + ".example,a");
        ds.add_query(d, h, 2000 + i, /*injected=*/i == 1);
        ds.add_query(d, h, 3000 + i);
    }
    ds.finalize();

    Dataset sub = subset_devices(ds, 2);
    CHECK(sub.device_count() == 2);
    CHECK(sub.query_count() == 4);
    CHECK(sub.window_start == ds.window_start);
    CHECK(sub.device_name(0) == "dev0");
    CHECK(sub.device_name(1) == "dev1");
    CHECK(sub.label(0) == 0);
    CHECK(sub.label(1) == 1);
    size_t injected = 0;
    for (const DnsQuery& q : sub.queries()) injected += q.injected();
    CHECK(injected == 1);

    CHECK_THROWS_AS(subset_devices(ds, 0), ArgumentError);
    CHECK_THROWS_AS(subset_devices(ds, 5), ArgumentError);
}

TEST_CASE("blocklist parsing normalizes names", "[eval]") {
    std::istringstream in(
        "# threat feed\n"
        "\n"
        "  C2.Bad.Example.  \n"
        "x.example\n");
    auto hosts = load_blocklist(in);
    CHECK(hosts.size() == 2);
    CHECK(hosts.count("c2.bad.example") == 1);
    CHECK(hosts.count("x.example") == 1);
}

TEST_CASE("verdict enrichment lists blocklist hits for flagged devices", "[eval]") {
    Dataset ds;
    ds.window_start = 0;
    ds.window_end = 168LL * 3600 * 1000;
    uint32_t bot = ds.intern_device("bot");
    uint32_t meh = ds.intern_device("meh");
    ds.add_query(bot, ds.intern_host("c2.bad.example,a"), 1000);
    ds.add_query(bot, ds.intern_host("a.bad.example,a"), 2000);
    ds.add_query(bot, ds.intern_host("w.example,a"), 3000);
    ds.add_query(meh, ds.intern_host("w.example,a"), 4000);
    ds.finalize();

    std::unordered_set<std::string> blocklist{"c2.bad.example", "a.bad.example"};
    std::vector<DeviceVerdict> verdicts{
        {"bot", 0.9, true, ""},
        {"meh", 0.3, true, ""},
        {"calm", 0.1, false, "stale"},
        {"ghost", 0.8, true, ""},  // not present in the dataset
    };
    enrich_verdicts(verdicts, ds, blocklist);
    CHECK(verdicts[0].evidence == "a.bad.example;c2.bad.example");
    CHECK(verdicts[1].evidence == "unverified");
    CHECK(verdicts[2].evidence.empty());
    CHECK(verdicts[3].evidence == "unverified");

    enrich_verdicts(verdicts, ds, {});
    CHECK(verdicts[0].evidence == "unverified");
}

TEST_CASE("csv writers emit the documented headers", "[eval]") {
    RocCurve curve = roc({0.9, 0.1}, {1, 0});
    std::ostringstream roc_out;
    write_roc_csv(curve, roc_out);
    CHECK(roc_out.str() ==
          "fpr,tpr,threshold\n"
          "0,0,inf\n"
          "0,1,0.9\n"
          "1,1,0.1\n");

    RobustnessResult rr;
    rr.drop_rates = {0.0, 0.1};
    rr.detection_rates = {1.0, 0.75};
    std::ostringstream rob_out;
    write_robustness_csv(rr, rob_out);
    CHECK(rob_out.str() ==
          "drop_rate,detection_rate\n"
          "0,1\n"
          "0.1,0.75\n");

    std::ostringstream tp_out;
    write_throughput_csv({throughput_row(256, 1000, 0.5)}, tp_out);
    CHECK(tp_out.str() ==
          "devices,connection_pairs,seconds,cps_per_sec\n"
          "256,1000,0.5,2000\n");

    std::ostringstream sum_out;
    write_summary_csv({{"morton", "beaconing", 0.99, 0.8, 0.9, 1500.0, 0.25}}, sum_out);
    CHECK(sum_out.str() ==
          "method,technique,auc,tpr_at_1pct_fpr,robustness_score,cps_per_sec,runtime_seconds\n"
          "morton,beaconing,0.99,0.8,0.9,1500,0.25\n");

    std::vector<DeviceVerdict> verdicts{{"dev1", 0.9, true, "c2.bad.example"},
                                        {"dev2", 0.1, false, ""}};
    std::ostringstream v_out;
    write_device_verdicts_csv(verdicts, true, v_out);
    CHECK(v_out.str() ==
          "device_id,score,verdict,evidence\n"
          "dev1,0.9,1,c2.bad.example\n"
          "dev2,0.1,0,\n");
    std::ostringstream v2_out;
    write_device_verdicts_csv(verdicts, false, v2_out);
    CHECK(v2_out.str() ==
          "device_id,score,verdict\n"
          "dev1,0.9,1\n"
          "dev2,0.1,0\n");
}
